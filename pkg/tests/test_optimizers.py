import math
from dataclasses import replace

import numpy as np
import pytest

from infra.errors import InvalidConstantsError, InvalidWeightsError, RejectedInputError
from objectives import QuadraticObjective, quadratic_from_spectrum, solve_reference, synthetic_quadratic
from optimizers import (
    STOP_BUDGET,
    STOP_DIVERGED,
    STOP_GAP,
    STOP_TOLERANCE,
    AveragingWeights,
    PhbState,
    PnParams,
    PnState,
    RunConfig,
    averaged_output,
    effective_constants,
    l2_conversion,
    measure_bounds,
    momentum_F,
    phb_complexity,
    phb_step,
    phb_theory_gamma,
    pn_complexity,
    pn_step,
    pn_theory_params,
    run,
    weight_ratio,
)
from preconditioners import PrecondRule, RngStream, Source, Variant, initialize, rule_from_name


class TestParams:
    def test_phb_theory_gamma(self):
        assert phb_theory_gamma(1.0, 1.0, 0.0) == pytest.approx(1.0 / 12.0)
        assert phb_theory_gamma(2.0, 1.0, 0.5) == pytest.approx(0.25 / 24.0)

    def test_phb_gamma_keeps_F_below_quarter_e_over_L(self):
        for beta1 in (0.0, 0.5, 0.9, 0.99):
            gamma = phb_theory_gamma(10.0, 0.5, beta1)
            assert momentum_F(gamma, beta1) <= 0.5 / (4.0 * 10.0)

    @pytest.mark.parametrize("L,e,beta1", [(0.0, 1.0, 0.5), (1.0, 0.0, 0.5)])
    def test_phb_gamma_rejects_bad_constants(self, L, e, beta1):
        with pytest.raises(InvalidConstantsError):
            phb_theory_gamma(L, e, beta1)

    def test_phb_gamma_rejects_beta1_one(self):
        with pytest.raises(RejectedInputError):
            phb_theory_gamma(1.0, 1.0, 1.0)

    def test_pn_theory_params(self):
        p = pn_theory_params(L=4.0, mu=1.0, e=1.0, Gamma=1.0)
        assert p.gamma == 0.25
        assert p.xi == pytest.approx(2.0)
        assert p.theta == pytest.approx(2.0 / 3.0)

    def test_pn_params_side_conditions(self):
        p = pn_theory_params(L=50.0, mu=0.3, e=0.2, Gamma=7.0)
        assert p.xi >= 1.0
        assert p.xi ** 2 * p.gamma * 0.3 / 7.0 == pytest.approx(1.0, rel=1e-12)
        assert p.theta == pytest.approx(p.xi / (1.0 + p.xi), rel=1e-12)

    @pytest.mark.parametrize("kwargs", [
        dict(L=1.0, mu=2.0, e=1.0, Gamma=1.0),
        dict(L=1.0, mu=0.5, e=2.0, Gamma=1.0),
        dict(L=1.0, mu=0.0, e=1.0, Gamma=1.0),
    ])
    def test_pn_params_reject_disordered_constants(self, kwargs):
        with pytest.raises(InvalidConstantsError):
            pn_theory_params(**kwargs)

    def test_pn_params_validation(self):
        with pytest.raises(RejectedInputError):
            PnParams(gamma=0.1, xi=1.0, theta=1.5)
        with pytest.raises(RejectedInputError):
            PnParams(gamma=0.0, xi=1.0, theta=0.5)
        assert PnParams.from_xi(0.1, 3.0).theta == 0.75

    def test_weight_ratio(self):
        assert weight_ratio(mu=1.0, F=1.0, Gamma=1.0) == 0.75
        with pytest.raises(InvalidWeightsError):
            weight_ratio(mu=4.0, F=1.0, Gamma=1.0)

    def test_averaging_matches_explicit_weights(self, rng):
        points = rng.standard_normal((20, 3))
        rho = weight_ratio(mu=0.4, F=1.0, Gamma=1.0)
        weights = np.array([rho ** (-(k + 1)) for k in range(20)])
        expected = weights @ points / weights.sum()
        np.testing.assert_allclose(averaged_output(points, mu=0.4, F=1.0, Gamma=1.0), expected, rtol=1e-12)
        averager = AveragingWeights.for_run(0.4, 1.0, 1.0)
        assert averager.total(20) == pytest.approx(weights.sum(), rel=1e-12)

    def test_averaging_survives_long_runs(self):
        averager = AveragingWeights.for_run(mu=0.4, F=1.0, Gamma=1.0)
        for _ in range(50_000):
            averager.add(np.ones(2))
        np.testing.assert_allclose(averager.average, np.ones(2))

    def test_averaged_output_needs_points(self):
        with pytest.raises(RejectedInputError):
            averaged_output([], mu=0.4, F=1.0, Gamma=1.0)

    def test_conversions(self):
        assert l2_conversion(2.0, 0.5) == 4.0
        assert effective_constants(L=10.0, mu=1.0, e=2.0, Gamma=5.0) == pytest.approx((0.2, 5.0, 25.0))

    def test_complexity_bounds(self):
        eps = math.exp(-3.0)
        assert phb_complexity(1.0, 1.0, 1.0, 1.0, 0.0, dist_sq=1.0, eps=eps) == pytest.approx(3.0)
        assert pn_complexity(100.0, 1.0, 1.0, 1.0, dist_sq=1.0, gap0=0.0, eps=eps) == pytest.approx(30.0)
        # already accurate enough: no iterations needed
        assert pn_complexity(100.0, 1.0, 1.0, 1.0, dist_sq=1e-6, gap0=0.0, eps=1.0) == 0.0


class TestRunConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(method="adamw"),
        dict(gamma=0.0),
        dict(gamma=-1.0),
        dict(beta1=1.0),
        dict(iters=0),
        dict(record_every=0),
        dict(gap_tol=1e-6),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(RejectedInputError):
            RunConfig(**kwargs)

    def test_baselines_force_identity(self):
        algorithm, rule, beta1 = RunConfig(method="gd", rule=rule_from_name("adam"), beta1=0.9).resolve()
        assert (algorithm, rule.is_identity, beta1) == ("phb", True, 0.0)
        algorithm, rule, _ = RunConfig(method="nesterov", rule=rule_from_name("oasis")).resolve()
        assert (algorithm, rule.is_identity) == ("pn", True)


class TestRun:
    def test_gd_is_plain_gradient_descent(self, rotated_quadratic):
        report = run(RunConfig(method="gd", gamma=0.05, iters=100), rotated_quadratic)
        x = np.zeros(rotated_quadratic.dim)
        for _ in range(100):
            x = x - 0.05 * rotated_quadratic.grad(x)
        np.testing.assert_array_equal(report.final_x, x)
        assert report.stop_reason == STOP_BUDGET
        assert report.iterations == 100
        assert [r.dhat_min for r in report.records] == [1.0] * 101

    def test_nesterov_matches_classical_form(self):
        obj = synthetic_quadratic(10, 100.0, seed=2, rotate=True)
        report = run(RunConfig(method="nesterov", iters=200, record_trace=True), obj)
        L = obj.constants().L
        xi = report.params["xi"]
        assert xi == pytest.approx(10.0, rel=1e-9)
        beta = (xi - 1.0) / (xi + 1.0)

        x_prev = np.zeros(obj.dim)
        y = x_prev.copy()
        expected = [x_prev]
        for _ in range(200):
            x_next = y - obj.grad(y) / L
            y = x_next + beta * (x_next - x_prev)
            x_prev = x_next
            expected.append(x_next)
        np.testing.assert_allclose(np.array(report.trace.x_fs), np.array(expected), rtol=1e-9, atol=1e-12)

    def test_manual_gamma_nesterov_xi(self, diag_quadratic):
        report = run(RunConfig(method="nesterov", gamma=0.01, iters=5), diag_quadratic)
        assert report.params["xi"] == pytest.approx(10.0)
        assert report.params["params_source"] == "manual"

    def test_theory_gamma_recorded(self, diag_quadratic):
        report = run(RunConfig(method="heavy-ball", beta1=0.5, iters=5), diag_quadratic)
        L = diag_quadratic.constants().L
        assert report.params["gamma"] == pytest.approx(0.25 / (12.0 * L))
        assert report.params["params_source"] == "theory"

    def test_tolerance_stop(self):
        obj = quadratic_from_spectrum([1.0], x_star=[1.0])
        report = run(RunConfig(method="gd", gamma=1.0, iters=50, tol=1e-20), obj)
        assert report.stop_reason == STOP_TOLERANCE
        assert [r.iter for r in report.records] == [0, 1]
        assert report.iterations_to(1e-20) == 1

    def test_gap_stop(self, diag_quadratic):
        ref = solve_reference(diag_quadratic)
        report = run(RunConfig(method="nesterov", iters=10_000, f_star=ref.f_star, gap_tol=1e-8), diag_quadratic)
        assert report.stop_reason == STOP_GAP
        assert report.last.f - ref.f_star <= 1e-8

    def test_divergence_truncates(self):
        obj = quadratic_from_spectrum([1.0], x_star=[1.0])
        report = run(RunConfig(method="gd", gamma=3.0, iters=5000), obj)
        assert report.stop_reason == STOP_DIVERGED
        assert report.diverged
        assert report.diverged_at is not None and report.diverged_at < 5000
        assert all(math.isfinite(r.f) for r in report.records)

    def test_record_every_keeps_last(self, rotated_quadratic):
        report = run(RunConfig(method="gd", gamma=0.01, iters=10, record_every=3), rotated_quadratic)
        assert [r.iter for r in report.records] == [0, 3, 6, 9, 10]

    def test_averaging_only_for_heavy_ball(self, diag_quadratic):
        with pytest.raises(RejectedInputError):
            run(RunConfig(method="pn", averaging=True, iters=5), diag_quadratic)

    def test_averaging_reports_f_avg(self, diag_quadratic):
        report = run(RunConfig(method="heavy-ball", averaging=True, iters=20), diag_quadratic)
        assert report.records[0].f_avg is None
        assert all(r.f_avg is not None for r in report.records[1:])
        assert report.averaged_x is not None

    def test_seeded_runs_repeat(self, rotated_quadratic):
        config = RunConfig(method="phb", rule=rule_from_name("oasis", beta2=0.99), gamma=0.05,
                           iters=50, floor_e=0.1, init_diag=1.0, seed=9)
        first, second = run(config, rotated_quadratic), run(config, rotated_quadratic)
        assert [r.f for r in first.records] == [r.f for r in second.records]
        np.testing.assert_array_equal(first.final_x, second.final_x)
        other = run(RunConfig(method="phb", rule=rule_from_name("oasis", beta2=0.99), gamma=0.05,
                              iters=50, floor_e=0.1, init_diag=1.0, seed=10), rotated_quadratic)
        assert not np.array_equal(first.final_x, other.final_x)

    def test_preconditioned_runs_record_bounds(self, small_logistic):
        report = run(RunConfig(method="phb", rule=rule_from_name("adam"), gamma=1e-4, iters=30, floor_e=1e-3),
                     small_logistic)
        for record in report.records:
            assert 1e-3 <= record.dhat_min <= record.dhat_max
        assert report.e_observed <= report.gamma_observed

    def test_measure_bounds(self, small_logistic):
        config = RunConfig(method="phb", rule=rule_from_name("adam"), iters=30, floor_e=1e-3)
        e, Gamma = measure_bounds(config, small_logistic)
        assert 0.0 < e <= Gamma

    def test_test_objective_column(self, small_logistic):
        report = run(RunConfig(method="gd", gamma=0.5, iters=3, test_objective=small_logistic), small_logistic)
        assert all(r.test_loss == pytest.approx(r.f) for r in report.records)

    def test_x0_dimension_checked(self, diag_quadratic):
        with pytest.raises(RejectedInputError):
            run(RunConfig(method="gd", gamma=0.1, iters=3, x0=np.zeros(3)), diag_quadratic)


def _iterations_to_gap(config: RunConfig, obj) -> int:
    ref = solve_reference(obj)
    report = run(replace(config, f_star=ref.f_star, gap_tol=1e-8), obj)
    assert report.stop_reason == STOP_GAP
    return report.iterations


@pytest.mark.slow
def test_nesterov_accelerates_over_heavy_ball():
    """Iterations grow like sqrt(kappa) for Nesterov and like kappa for heavy-ball"""
    kappas = np.array([1e2, 1e3, 1e4])
    nesterov, heavy_ball = [], []
    for kappa in kappas:
        obj = synthetic_quadratic(10, kappa, seed=0)
        L = obj.constants().L
        nesterov.append(_iterations_to_gap(RunConfig(method="nesterov", iters=200_000, record_every=200_000), obj))
        heavy_ball.append(_iterations_to_gap(
            RunConfig(method="heavy-ball", gamma=1.0 / L, beta1=0.5, iters=200_000, record_every=200_000), obj))
    nesterov_slope = np.polyfit(np.log(kappas), np.log(nesterov), 1)[0]
    heavy_ball_slope = np.polyfit(np.log(kappas), np.log(heavy_ball), 1)[0]
    assert nesterov_slope == pytest.approx(0.5, abs=0.15)
    assert heavy_ball_slope == pytest.approx(1.0, abs=0.15)


class TestWorkedSteps:
    """Hand-computed iterations on f(x) = 1/2 x^2 and independent transcriptions"""

    @staticmethod
    def _identity(obj, x0):
        return initialize(PrecondRule(), obj, x0, RngStream(0))

    def test_phb_two_iterations(self, scalar_quadratic):
        rng = RngStream(0)
        precond = self._identity(scalar_quadratic, [1.0])
        state = PhbState.start([1.0])
        state, precond = phb_step(state, scalar_quadratic, precond, PrecondRule(), 0.1, 0.5, rng)
        assert state.V[0] == pytest.approx(1.0, abs=1e-15)
        assert state.x[0] == pytest.approx(0.9, abs=1e-15)
        state, precond = phb_step(state, scalar_quadratic, precond, PrecondRule(), 0.1, 0.5, rng)
        assert state.V[0] == pytest.approx(1.4, abs=1e-15)
        assert state.x[0] == pytest.approx(0.76, abs=1e-15)
        assert state.k == 2

    def test_pn_one_iteration(self, scalar_quadratic):
        params = PnParams.from_xi(0.5, 2.0)
        precond = self._identity(scalar_quadratic, [1.0])
        state, _ = pn_step(PnState.start([1.0]), scalar_quadratic, precond, PrecondRule(), params, RngStream(0))
        assert state.x_f[0] == pytest.approx(0.5, abs=1e-15)
        assert state.x[0] == pytest.approx(0.0, abs=1e-15)
        assert state.x_g[0] == pytest.approx(0.5 * params.theta, abs=1e-15)

    def test_pn_unit_xi_is_preconditioned_gd(self, rotated_quadratic):
        params = PnParams.from_xi(0.05, 1.0)
        x0 = np.ones(rotated_quadratic.dim)
        precond = self._identity(rotated_quadratic, x0)
        state, _ = pn_step(PnState.start(x0), rotated_quadratic, precond, PrecondRule(), params, RngStream(0))
        np.testing.assert_allclose(state.x, state.x_f, rtol=1e-15, atol=1e-15)
        np.testing.assert_allclose(state.x_g, state.x_f, rtol=1e-15, atol=1e-15)
        np.testing.assert_allclose(state.x_f, x0 - 0.05 * rotated_quadratic.grad(x0), rtol=1e-15)

    def test_phb_adam_matches_straight_line_transcription(self):
        A = np.array([[3.0, 0.5, -0.2], [0.5, 2.0, 0.1], [-0.2, 0.1, 1.0]])
        b = np.array([1.0, -2.0, 0.5])
        obj = QuadraticObjective(A, b=b)
        gamma, beta1, beta2, e = 0.01, 0.9, 0.999, 1e-8
        rule = PrecondRule(variant=Variant.QUADRATIC, source=Source.GRADIENT_SQUARE, beta2=beta2)
        report = run(RunConfig(method="phb", rule=rule, gamma=gamma, beta1=beta1, iters=50,
                               floor_e=e, init_diag=0.0, record_trace=True), obj)

        x = np.zeros(3)
        g = A @ x - b
        D = np.sqrt((1.0 - beta2) * g * g)
        V = np.zeros(3)
        expected = [x]
        for _ in range(50):
            V = beta1 * V + g / np.maximum(e, D)
            x = x - gamma * V
            g = A @ x - b
            D = np.sqrt(beta2 * D * D + (1.0 - beta2) * g * g)
            expected.append(x)
        np.testing.assert_allclose(np.array(report.trace.xs), np.array(expected), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(report.trace.dhats[-1].diag, np.maximum(e, D), rtol=1e-12)

    def test_phb_adam_best_so_far_decreases(self):
        obj = synthetic_quadratic(10, 10.0, seed=0)
        report = run(RunConfig(method="phb", rule=rule_from_name("adam"), gamma=1e-3, beta1=0.9, iters=500), obj)
        assert not report.diverged
        f_values = np.array([r.f for r in report.records])
        best = np.minimum.accumulate(f_values)
        assert np.all(np.diff(best) <= 0.0)
        assert best[-1] < f_values[0]


def test_manual_gamma_pn_xi_uses_initial_preconditioner_bound(diag_quadratic):
    rule = rule_from_name("adam", beta2=0.999)
    report = run(RunConfig(method="pn", rule=rule, gamma=0.01, iters=3), diag_quadratic)
    g0 = diag_quadratic.grad(np.zeros(diag_quadratic.dim))
    dhat0_max = float(np.sqrt(0.001 * g0 * g0).max())
    mu = diag_quadratic.constants().mu
    assert report.params["Gamma"] == pytest.approx(dhat0_max, rel=1e-12)
    assert report.params["xi"] == pytest.approx(max(1.0, math.sqrt(dhat0_max / (0.01 * mu))), rel=1e-12)
