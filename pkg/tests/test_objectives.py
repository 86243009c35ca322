import math

import numpy as np
import pytest

from infra.errors import DimensionMismatchError, NoStrongConvexityError, RejectedInputError, UsageError
from objectives import (
    LogisticObjective,
    QuadraticObjective,
    parse_synthetic_spec,
    power_iteration,
    quadratic_from_spectrum,
    solve_reference,
    synthetic_logistic,
    synthetic_quadratic,
)
from verify import check_smoothness, check_strong_convexity, finite_diff_check, hessian_vec_check


class TestQuadratic:
    def test_value_and_gradient(self):
        obj = QuadraticObjective([2.0, 4.0], b=[2.0, 4.0])
        assert obj.value([1.0, 1.0]) == pytest.approx(0.5 * (2 + 4) - 6)
        np.testing.assert_array_equal(obj.grad([1.0, 1.0]), [0.0, 0.0])
        np.testing.assert_array_equal(obj.minimizer(), [1.0, 1.0])

    def test_constants_from_spectrum(self):
        obj = quadratic_from_spectrum([1.0, 3.0, 9.0])
        c = obj.constants()
        assert c.L == 9.0
        assert c.mu == 1.0
        assert c.kappa == 9.0

    def test_rotated_constants_match_eigenvalues(self):
        obj = quadratic_from_spectrum([1.0, 3.0, 9.0], rotate=True, seed=4)
        c = obj.constants()
        assert c.L == pytest.approx(9.0, rel=1e-12)
        assert c.mu == pytest.approx(1.0, rel=1e-12)

    def test_planted_minimizer(self):
        obj = quadratic_from_spectrum([1.0, 5.0], x_star=[3.0, -1.0], rotate=True, seed=1)
        np.testing.assert_allclose(obj.grad([3.0, -1.0]), 0.0, atol=1e-12)

    def test_gap_is_exact_half_quadratic_form(self):
        obj = quadratic_from_spectrum([4.0], x_star=[1.0])
        ref = solve_reference(obj)
        assert obj.gap([3.0], ref) == 0.5 * 4.0 * 4.0

    @pytest.mark.parametrize("A", [[1.0, 0.0], [[1.0, 2.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, -1.0]]])
    def test_rejects_non_spd(self, A):
        with pytest.raises(RejectedInputError):
            QuadraticObjective(A)

    def test_dimension_checked(self):
        with pytest.raises(DimensionMismatchError):
            QuadraticObjective([1.0, 2.0]).grad([1.0])


class TestLogistic:
    def test_value_and_gradient_at_zero(self):
        X = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
        y = np.array([1.0, -1.0, 1.0])
        obj = LogisticObjective(X, y, lam=0.5)
        assert obj.value(np.zeros(2)) == pytest.approx(math.log(2.0), rel=1e-14)
        np.testing.assert_allclose(obj.grad(np.zeros(2)), X.T @ (-0.5 * y) / 3, rtol=1e-14)

    def test_value_matches_per_sample_loop(self, rng):
        X = np.array([
            [0.5, -1.0, 2.0],
            [1.5, 0.0, -0.5],
            [-2.0, 1.0, 0.25],
            [0.0, 3.0, 1.0],
            [1.0, 1.0, -1.0],
        ])
        y = np.array([1.0, -1.0, -1.0, 1.0, 1.0])
        lam = 0.3
        w = rng.standard_normal(3)
        total = 0.0
        for i in range(5):
            margin = y[i] * sum(X[i, j] * w[j] for j in range(3))
            total += math.log(1.0 + math.exp(-margin))
        expected = total / 5 + 0.5 * lam * sum(wj * wj for wj in w)
        assert LogisticObjective(X, y, lam=lam).value(w) == pytest.approx(expected, rel=1e-13)

    def test_unregularized_is_not_strongly_convex(self):
        obj = LogisticObjective(np.eye(2), [1.0, -1.0], lam=0.0)
        with pytest.raises(NoStrongConvexityError):
            obj.constants()

    def test_rejects_bad_labels(self):
        with pytest.raises(RejectedInputError):
            LogisticObjective(np.eye(2), [1.0, 0.5], lam=0.1)

    def test_smoothness_bound(self, small_logistic):
        X = small_logistic.X
        exact = np.linalg.eigvalsh(X.T @ X / (4 * small_logistic.n_samples))[-1] + small_logistic.lam
        assert small_logistic.constants().L >= exact * (1.0 - 1e-9)
        assert small_logistic.constants().L == pytest.approx(exact, rel=1e-6)
        assert small_logistic.constants().mu == small_logistic.lam

    def test_accuracy_in_unit_interval(self, small_logistic):
        ref = solve_reference(small_logistic, use_cache=False)
        acc = small_logistic.accuracy(ref.x_star)
        assert 0.5 < acc <= 1.0

    def test_reference_solution(self, small_logistic):
        ref = solve_reference(small_logistic, use_cache=False)
        assert ref.grad_norm_at_solution <= 1e-10
        assert np.linalg.norm(small_logistic.grad(ref.x_star)) <= 1e-10


class TestDerivativeOracles:
    def test_gradients_match_finite_differences(self, small_logistic, rng):
        for x in rng.standard_normal((50, small_logistic.dim)):
            assert finite_diff_check(small_logistic, x).passed

    def test_hessian_vec_matches_finite_differences(self, small_logistic, rotated_quadratic, rng):
        for obj in (small_logistic, rotated_quadratic):
            for _ in range(20):
                x, v = rng.standard_normal(obj.dim), rng.standard_normal(obj.dim)
                assert hessian_vec_check(obj, x, v).passed

    def test_wrong_gradient_is_caught(self, rotated_quadratic, rng):
        class Skewed:
            dim = rotated_quadratic.dim

            def value(self, x):
                return rotated_quadratic.value(x)

            def grad(self, x):
                return 1.01 * rotated_quadratic.grad(x)

        x = rng.standard_normal(rotated_quadratic.dim) + 3.0
        assert not finite_diff_check(Skewed(), x, h=1e-4).passed

    def test_assumptions_hold(self, small_logistic, rotated_quadratic):
        for obj in (small_logistic, rotated_quadratic):
            assert check_strong_convexity(obj).passed
            assert check_smoothness(obj).passed


class TestSynthetic:
    def test_quadratic_spectrum(self):
        obj = synthetic_quadratic(5, 100.0, seed=3)
        c = obj.constants()
        assert c.L == pytest.approx(100.0)
        assert c.mu == pytest.approx(1.0)
        assert obj.is_diagonal

    def test_parse_quadratic_spec(self):
        obj = parse_synthetic_spec("quad:d=4,kappa=1e3,rotate=1,seed=7")
        assert obj.dim == 4
        assert not obj.is_diagonal
        assert obj.constants().kappa == pytest.approx(1e3, rel=1e-9)

    def test_parse_logistic_spec(self):
        obj = parse_synthetic_spec("logit:n=50,d=3,lam=0.1")
        assert isinstance(obj, LogisticObjective)
        assert (obj.n_samples, obj.dim, obj.lam) == (50, 3, 0.1)

    def test_seed_controls_content(self):
        assert parse_synthetic_spec("quad:d=3,kappa=10", default_seed=1).digest() == \
            parse_synthetic_spec("quad:d=3,kappa=10", default_seed=1).digest()
        assert parse_synthetic_spec("quad:d=3,kappa=10", default_seed=1).digest() != \
            parse_synthetic_spec("quad:d=3,kappa=10", default_seed=2).digest()

    @pytest.mark.parametrize("spec", ["cube:d=3", "quad:d=3,color=red", "quad:d=x", "quad:d=3,kappa"])
    def test_bad_specs(self, spec):
        with pytest.raises(UsageError):
            parse_synthetic_spec(spec)

    def test_logistic_digest_tracks_regularization(self):
        a = synthetic_logistic(20, 3, lam=0.1, seed=0)
        b = synthetic_logistic(20, 3, lam=0.2, seed=0)
        assert a.digest() != b.digest()
        assert len(a.digest()) == 16


def test_power_iteration_on_diagonal():
    diag = np.array([1.0, 2.0, 7.0])
    top = power_iteration(lambda v: diag * v, 3)
    assert top >= 7.0
    assert top == pytest.approx(7.0, rel=1e-6)
