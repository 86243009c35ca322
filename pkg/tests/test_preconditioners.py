import itertools

import numpy as np
import pytest

from infra.errors import (
    CurvatureSourceError,
    InvalidConstantsError,
    InvalidPreconditionerError,
    NonFiniteError,
    RejectedInputError,
    ScheduleError,
    StateCorruptionError,
)
from preconditioners import (
    Beta2Mode,
    PrecondRule,
    PreconditionerState,
    RngStream,
    Source,
    Variant,
    Wiring,
    beta2_schedule,
    info_squared,
    information_matrix,
    initialize,
    rule_from_name,
    theory_C,
    update,
)
from objectives import QuadraticObjective

ADAM = PrecondRule(variant=Variant.QUADRATIC, source=Source.GRADIENT_SQUARE, beta2=0.5)
OASIS = PrecondRule(variant=Variant.LINEAR, source=Source.HUTCHINSON, beta2=0.5)
ADAGRAD = PrecondRule(variant=Variant.ADAGRAD)


class TestSchedules:
    def test_fixed(self):
        assert beta2_schedule(Beta2Mode.FIXED, fixed_value=0.9) == 0.9

    def test_one_minus_inv_k(self):
        assert beta2_schedule("one-minus-inv-k", k=4) == 0.75
        assert beta2_schedule("one-minus-inv-k", k=1) == 0.0

    def test_one_minus_inv_horizon(self):
        assert beta2_schedule("one-minus-inv-K", K=10) == pytest.approx(0.9)

    @pytest.mark.parametrize("mode,kwargs", [
        ("one-minus-inv-k", dict(k=0)),
        ("one-minus-inv-K", dict(K=None)),
        ("one-minus-inv-K", dict(K=0)),
    ])
    def test_undefined_domain(self, mode, kwargs):
        with pytest.raises(ScheduleError):
            beta2_schedule(mode, **kwargs)

    def test_rule_uses_update_counter(self):
        rule = PrecondRule(variant=Variant.QUADRATIC, beta2_mode=Beta2Mode.ONE_MINUS_INV_K)
        assert [rule.beta2_at(k) for k in (1, 2, 4)] == [0.0, 0.5, 0.75]


class TestRules:
    @pytest.mark.parametrize("beta2", [0.0, 1.0, 1.5])
    def test_smoothing_beta2_range(self, beta2):
        with pytest.raises(RejectedInputError):
            PrecondRule(variant=Variant.QUADRATIC, beta2=beta2)

    def test_adagrad_ignores_beta2(self):
        assert PrecondRule(variant=Variant.ADAGRAD, beta2=5.0).variant is Variant.ADAGRAD

    def test_horizon_required(self):
        with pytest.raises(ScheduleError):
            PrecondRule(variant=Variant.LINEAR, beta2_mode=Beta2Mode.ONE_MINUS_INV_HORIZON)

    def test_probes_positive(self):
        with pytest.raises(RejectedInputError):
            PrecondRule(variant=Variant.LINEAR, source=Source.HUTCHINSON, probes=0)

    def test_presets(self):
        assert rule_from_name("adam").variant is Variant.QUADRATIC
        assert rule_from_name("OASIS").source is Source.HUTCHINSON
        assert rule_from_name("identity").is_identity
        with pytest.raises(RejectedInputError):
            rule_from_name("lion")

    def test_default_wiring(self):
        assert rule_from_name("oasis").resolved_wiring() is Wiring.CLAMPED
        assert rule_from_name("adam").resolved_wiring() is Wiring.UNCLAMPED
        assert rule_from_name("adam", wiring="clamped").resolved_wiring() is Wiring.CLAMPED

    def test_label(self):
        assert PrecondRule().label() == "identity"
        assert "beta2=1-1/k" in PrecondRule(variant=Variant.QUADRATIC,
                                             beta2_mode=Beta2Mode.ONE_MINUS_INV_K).label()


class TestTheoryC:
    def test_values(self):
        assert theory_C(ADAM, 1.0, 2.0) == 2.0
        assert theory_C(OASIS, 1.0, 2.0) == 4.0
        assert theory_C(PrecondRule(), 1.0, 2.0) == 0.0

    def test_constant_preconditioner(self):
        assert theory_C(ADAM, 3.0, 3.0) == 0.5
        assert theory_C(OASIS, 3.0, 3.0) == 2.0

    def test_adagrad_not_covered(self):
        assert theory_C(ADAGRAD, 1.0, 2.0) is None

    @pytest.mark.parametrize("e,Gamma", [(2.0, 1.0), (0.0, 1.0), (-1.0, 1.0)])
    def test_invalid_bounds(self, e, Gamma):
        with pytest.raises(InvalidConstantsError):
            theory_C(ADAM, e, Gamma)


class TestUpdate:
    def test_quadratic_smoothing(self):
        # squared-gradient information enters D^2 as it is
        state = PreconditionerState.from_diagonal([1.0, 2.0])
        new = update(state, ADAM, [3.0, 4.0])
        np.testing.assert_allclose(new.D_prev, [np.sqrt(2.0), 2.0], rtol=1e-15)
        assert new.step_index == 0
        assert new.last_beta2 == 0.5

    def test_adam_rule_scales_with_gradient_magnitude(self):
        g = np.full(3, 3.0)
        new = update(PreconditionerState.from_diagonal(np.zeros(3)), ADAM, g * g)
        np.testing.assert_allclose(new.D_prev, np.full(3, np.sqrt(4.5)), rtol=1e-15)
        assert new.info_abs_max == 3.0

    def test_adagrad_first_step_is_gradient_magnitude(self):
        g = np.array([3.0, -0.5])
        new = update(PreconditionerState.from_diagonal(np.zeros(2)), ADAGRAD, g * g)
        np.testing.assert_allclose(new.D_prev, [3.0, 0.5], rtol=1e-15)

    def test_quadratic_rule_squares_hutchinson_information(self):
        rule = PrecondRule(variant=Variant.QUADRATIC, source=Source.HUTCHINSON, beta2=0.5)
        new = update(PreconditionerState.from_diagonal(np.zeros(2)), rule, [3.0, -3.0])
        np.testing.assert_allclose(new.D_prev, np.full(2, np.sqrt(4.5)), rtol=1e-15)
        np.testing.assert_array_equal(info_squared(rule, np.array([3.0, -3.0])), [9.0, 9.0])
        np.testing.assert_array_equal(info_squared(ADAM, np.array([9.0])), [9.0])

    def test_negative_squared_gradient_rejected(self):
        with pytest.raises(RejectedInputError):
            update(PreconditionerState.from_diagonal([1.0]), ADAM, [-1.0])

    def test_linear_smoothing_can_go_negative(self):
        state = PreconditionerState.from_diagonal([1.0, 2.0], floor_e=0.1)
        new = update(state, OASIS, [-3.0, 4.0])
        np.testing.assert_allclose(new.D_prev, [-1.0, 3.0])
        np.testing.assert_allclose(new.D_hat.diag, [0.1, 3.0])

    def test_wiring_picks_the_smoothed_matrix(self):
        state = update(PreconditionerState.from_diagonal([1.0, 2.0], floor_e=0.1), OASIS, [-3.0, 4.0])
        clamped = update(state, OASIS.with_wiring(Wiring.CLAMPED), [1.0, 1.0])
        unclamped = update(state, OASIS.with_wiring(Wiring.UNCLAMPED), [1.0, 1.0])
        assert clamped.D_prev[0] == pytest.approx(0.55)
        assert unclamped.D_prev[0] == 0.0
        assert unclamped.D_hat.diag[0] == 0.1

    def test_adagrad(self):
        new = update(PreconditionerState.from_diagonal([1.0, 2.0]), ADAGRAD, [3.0, 4.0])
        np.testing.assert_allclose(new.D_prev, [2.0, np.sqrt(8.0)])

    def test_identity_stays_identity(self):
        new = update(PreconditionerState.from_diagonal(np.ones(3)), PrecondRule(), [5.0, -1.0, 2.0])
        np.testing.assert_array_equal(new.D_hat.diag, np.ones(3))

    def test_quadratic_rejects_negative_state(self):
        with pytest.raises(StateCorruptionError):
            update(PreconditionerState.from_diagonal([-1.0, 1.0]), ADAM, [1.0, 1.0])

    def test_overflow_is_non_finite(self):
        state = PreconditionerState.from_diagonal([1e200, 1.0])
        with np.errstate(over="ignore"), pytest.raises(NonFiniteError):
            update(state, ADAGRAD, [1.0, 1.0])

    def test_dimension_checked(self):
        with pytest.raises(RejectedInputError):
            update(PreconditionerState.from_diagonal([1.0, 1.0]), ADAM, [1.0])

    def test_floor_and_extrema_tracked(self, rng):
        floor = 0.05
        state = PreconditionerState.from_diagonal(np.full(4, 1.0), floor_e=floor)
        lo, hi = state.D_hat.min(), state.D_hat.max()
        for _ in range(200):
            state = update(state, OASIS, 3.0 * rng.standard_normal(4))
            assert state.D_hat.min() >= floor
            lo, hi = min(lo, state.D_hat.min()), max(hi, state.D_hat.max())
        assert state.observed_min == lo
        assert state.observed_max == hi
        assert state.gamma_theory() >= state.observed_max

    def test_non_positive_floor_rejected(self):
        with pytest.raises(InvalidPreconditionerError):
            PreconditionerState.from_diagonal([1.0], floor_e=0.0)


class TestCurvature:
    def test_gradient_square(self):
        class Linear:
            dim = 2

            def grad(self, x):
                return np.array([1.0, -2.0])

        H = information_matrix(ADAM, Linear(), np.zeros(2), RngStream(0))
        np.testing.assert_array_equal(H, [1.0, 4.0])

    @pytest.mark.parametrize("probes", [1, 4])
    def test_hutchinson_exact_on_diagonal_quadratic(self, diag_quadratic, probes):
        rule = PrecondRule(variant=Variant.LINEAR, source=Source.HUTCHINSON, probes=probes)
        H = information_matrix(rule, diag_quadratic, np.ones(diag_quadratic.dim), RngStream(3))
        np.testing.assert_allclose(H, np.diag(diag_quadratic.matrix), rtol=1e-15)

    def test_hutchinson_unbiased_on_rotated_quadratic(self, rotated_quadratic):
        rule = PrecondRule(variant=Variant.LINEAR, source=Source.HUTCHINSON, probes=4000)
        H = information_matrix(rule, rotated_quadratic, np.zeros(rotated_quadratic.dim), RngStream(5))
        np.testing.assert_allclose(H, np.diag(rotated_quadratic.matrix), atol=0.5)

    def test_hutchinson_exact_over_all_sign_vectors(self):
        class Enumerated:
            """Hands out every vector of {-1, +1}^3 once"""

            def __init__(self):
                self.vectors = [np.array(signs, dtype=np.float64)
                                for signs in itertools.product((-1.0, 1.0), repeat=3)]

            def rademacher(self, dim):
                return self.vectors.pop()

        A = np.array([[4.0, 1.0, -2.0], [1.0, 3.0, 1.0], [-2.0, 1.0, 5.0]])
        rule = PrecondRule(variant=Variant.LINEAR, source=Source.HUTCHINSON, probes=8)
        H = information_matrix(rule, QuadraticObjective(A), np.ones(3), Enumerated())
        np.testing.assert_array_equal(H, np.diag(A))

    def test_hutchinson_needs_hessian_vec(self):
        class GradientOnly:
            dim = 2

            def grad(self, x):
                return x

        with pytest.raises(CurvatureSourceError):
            information_matrix(OASIS, GradientOnly(), np.zeros(2), RngStream(0))

    def test_rng_stream_is_reproducible(self):
        a, b = RngStream(11), RngStream(11)
        for _ in range(5):
            np.testing.assert_array_equal(a.rademacher(8), b.rademacher(8))
        assert a.counter == 5
        assert set(np.unique(RngStream(1).rademacher(100))) == {-1.0, 1.0}

    def test_spawned_streams(self):
        parent = RngStream(7)
        assert parent.spawn(1).seed == RngStream(7).spawn(1).seed
        assert parent.spawn(1).seed != parent.spawn(2).seed


class TestInitialize:
    def test_identity_starts_at_one(self, diag_quadratic):
        state = initialize(PrecondRule(), diag_quadratic, np.zeros(diag_quadratic.dim), RngStream(0))
        np.testing.assert_array_equal(state.D_hat.diag, np.ones(diag_quadratic.dim))
        np.testing.assert_array_equal(state.D_hat_init.diag, np.ones(diag_quadratic.dim))

    def test_smoothing_starts_from_floor(self, diag_quadratic):
        x0 = np.zeros(diag_quadratic.dim)
        state = initialize(ADAM, diag_quadratic, x0, RngStream(0), floor_e=1e-3)
        g = diag_quadratic.grad(x0)
        np.testing.assert_array_equal(state.D_hat_init.diag, np.full(diag_quadratic.dim, 1e-3))
        np.testing.assert_allclose(state.D_prev, np.sqrt(0.5) * np.abs(g), rtol=1e-14)
        assert state.step_index == 0

    def test_negative_initial_diagonal(self, diag_quadratic):
        with pytest.raises(RejectedInputError):
            initialize(ADAM, diag_quadratic, np.zeros(diag_quadratic.dim), RngStream(0), init_diag=-1.0)
