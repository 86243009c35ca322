"""
Built-in theory suites on synthetic problems (props | lemmas | envelopes | all)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from infra.errors import UsageError
from objectives import (
    ObjectiveConstants,
    QuadraticObjective,
    quadratic_from_spectrum,
    solve_reference,
    synthetic_logistic,
    synthetic_quadratic,
)
from optimizers import RunConfig, momentum_F, phb_theory_gamma, pn_theory_params, run
from optimizers.params import PnParams
from preconditioners import PrecondRule, Source, Variant, Wiring, theory_C

from .checks import (
    CheckReport,
    check_hb_descent,
    check_pn_lyapunov,
    check_gradient_gap,
    check_norm_sandwich,
    check_ultra_bound,
    check_rate_envelope,
    check_smoothness,
    check_strong_convexity,
    finite_diff_check,
    hessian_vec_check,
    merge_reports,
)

logger = logging.getLogger(__name__)

SUITES = ("props", "lemmas", "envelopes", "all")
PROBE_SAMPLES = 1000
FD_POINTS = 50


@dataclass
class SuiteResult:
    suite: str
    reports: List[CheckReport] = field(default_factory=list)
    notes: Dict[str, Dict[str, bool]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def extend(self, other: SuiteResult) -> None:
        self.reports.extend(other.reports)
        self.notes.update(other.notes)


def _scaled(obj, l_scale: float) -> ObjectiveConstants:
    true = obj.constants()
    return ObjectiveConstants(L=true.L * l_scale, mu=true.mu)


def diagonal_quadratic(kappa: float, d: int = 10, seed: int = 0) -> QuadraticObjective:
    """diag(A) log-spaced in [1, kappa]: e = 1 and Gamma = kappa bound the Hutchinson diagonal exactly"""
    return synthetic_quadratic(d, kappa, seed=seed)


def oasis_rule(beta2: float) -> PrecondRule:
    return PrecondRule(variant=Variant.LINEAR, source=Source.HUTCHINSON, beta2=beta2)


def check_ultra_wiring(obj, rule: PrecondRule, gamma: float, iters: int = 200, floor_e: float = 0.1,
                       init_diag: Optional[float] = 1.0, seed: int = 0) -> Dict[str, CheckReport]:
    """Run both wirings of `rule` and report the ultra inequality for each"""
    reports = {}
    for wiring in (Wiring.UNCLAMPED, Wiring.CLAMPED):
        wired = rule.with_wiring(wiring)
        config = RunConfig(method="phb", rule=wired, gamma=gamma, beta1=0.9, iters=iters, seed=seed,
                           floor_e=floor_e, init_diag=init_diag, record_trace=True)
        report = run(config, obj)
        reports[wiring.value] = check_ultra_bound(report.trace, wired, seed=seed)
    summary = ", ".join(f"{w}={'ok' if r.passed else 'violated'}" for w, r in reports.items())
    logger.info(f"Ultra inequality by wiring for {rule.label()}: {summary}")
    return reports


def _ultra_run(obj, rule: PrecondRule, gamma: float, floor_e: float, init_diag: float) -> CheckReport:
    config = RunConfig(method="phb", rule=rule, gamma=gamma, beta1=0.9, iters=200,
                       floor_e=floor_e, init_diag=init_diag, record_trace=True)
    return check_ultra_bound(run(config, obj).trace, rule)


def props_suite(l_scale: float = 1.0) -> SuiteResult:
    result = SuiteResult("props")
    rng = np.random.default_rng(0)

    tight = quadratic_from_spectrum([4.0], x_star=[0.0])
    ref = solve_reference(tight)
    report = check_gradient_gap(tight, ref, rng.standard_normal((PROBE_SAMPLES, 1)), constants=_scaled(tight, l_scale))
    report.name = "gradient_gap[quadratic]"
    result.reports.append(report)

    logistic = synthetic_logistic(n=200, d=5, lam=0.01, seed=1)
    ref = solve_reference(logistic)
    report = check_gradient_gap(logistic, ref, ref.x_star + rng.standard_normal((PROBE_SAMPLES, 5)),
                         constants=_scaled(logistic, l_scale))
    report.name = "gradient_gap[logistic]"
    result.reports.append(report)

    result.reports.append(check_norm_sandwich(PROBE_SAMPLES, e=0.1, Gamma=10.0))

    quad5 = synthetic_quadratic(5, 10.0, seed=2, rotate=True)
    adam = PrecondRule(variant=Variant.QUADRATIC, source=Source.GRADIENT_SQUARE, beta2=0.999)
    result.reports.append(_ultra_run(quad5, adam, gamma=0.01, floor_e=1e-3, init_diag=0.0))
    oasis = oasis_rule(0.99)
    result.reports.append(_ultra_run(quad5, oasis, gamma=0.05, floor_e=0.1, init_diag=1.0))
    wiring = check_ultra_wiring(quad5, oasis, gamma=0.05)
    result.notes[f"ultra_wiring[{oasis.variant.value}]"] = {w: r.passed for w, r in wiring.items()}

    for obj, label in ((synthetic_quadratic(10, 100.0, seed=3, rotate=True), "quadratic"), (logistic, "logistic")):
        constants = _scaled(obj, l_scale)
        for report in (check_strong_convexity(obj, constants=constants),
                       check_smoothness(obj, constants=constants)):
            report.name = f"{report.name}[{label}]"
            result.reports.append(report)
        points = rng.standard_normal((FD_POINTS, obj.dim))
        directions = rng.standard_normal((FD_POINTS, obj.dim))
        h = 1e-4 if label == "quadratic" else 1e-6
        result.reports.append(merge_reports(
            f"finite_diff_grad[{label}]", (finite_diff_check(obj, x, h=h) for x in points)))
        result.reports.append(merge_reports(
            f"finite_diff_hessian_vec[{label}]",
            (hessian_vec_check(obj, x, v) for x, v in zip(points, directions))))
    return result


def _descent_case(kappa: float, updating: bool, l_scale: float) -> CheckReport:
    obj = diagonal_quadratic(kappa)
    ref = solve_reference(obj)
    constants = _scaled(obj, l_scale)
    beta1 = 0.9
    if updating:
        e, Gamma = 1.0, kappa
        F = momentum_F(phb_theory_gamma(constants.L, e, beta1), beta1)
        probe = oasis_rule(0.5)
        C = theory_C(probe, e, Gamma)
        rule = oasis_rule(1.0 - 0.5 * constants.mu * F / (4.0 * Gamma * C))
    else:
        e, Gamma, rule = 1.0, 1.0, PrecondRule()
    config = RunConfig(method="phb", rule=rule, gamma="theory", beta1=beta1, iters=200, floor_e=e,
                       init_diag=e, bounds=(e, Gamma), constants=constants, record_trace=True)
    report = run(config, obj)
    check = check_hb_descent(report.trace, obj, ref, constants, Gamma=Gamma, e=e, rule=rule)
    check.name = f"hb_descent[kappa={kappa:g}{', updating' if updating else ''}]"
    return check


def _lyapunov_case(kappa: float, updating: bool, l_scale: float) -> CheckReport:
    obj = diagonal_quadratic(kappa)
    ref = solve_reference(obj)
    constants = _scaled(obj, l_scale)
    if updating:
        e, Gamma = 1.0, kappa
        C = theory_C(oasis_rule(0.5), e, Gamma)
        rule = oasis_rule(1.0 - math.sqrt(constants.mu * e / (constants.L * Gamma)) / (4.0 * C))
    else:
        e, Gamma, rule = 1.0, 1.0, PrecondRule()
    config = RunConfig(method="pn", rule=rule, gamma="theory", iters=300, floor_e=e, init_diag=e,
                       bounds=(e, Gamma), constants=constants, record_trace=True)
    report = run(config, obj)
    params = PnParams(gamma=report.params["gamma"], xi=report.params["xi"], theta=report.params["theta"])
    check = check_pn_lyapunov(report.trace, obj, ref, params, constants, e=e, Gamma=Gamma, rule=rule)
    check.name = f"pn_lyapunov[kappa={kappa:g}{', updating' if updating else ''}]"
    return check


def lemmas_suite(l_scale: float = 1.0) -> SuiteResult:
    result = SuiteResult("lemmas")
    for kappa in (10.0, 1e3):
        result.reports.append(_descent_case(kappa, updating=False, l_scale=l_scale))
    result.reports.append(_descent_case(10.0, updating=True, l_scale=l_scale))
    result.reports.append(_lyapunov_case(100.0, updating=False, l_scale=l_scale))
    result.reports.append(_lyapunov_case(100.0, updating=True, l_scale=l_scale))
    return result


def envelopes_suite(l_scale: float = 1.0) -> SuiteResult:
    result = SuiteResult("envelopes")

    obj = synthetic_quadratic(10, 100.0, seed=4, rotate=True)
    ref = solve_reference(obj)
    constants = _scaled(obj, l_scale)
    for beta1 in (0.0, 0.5, 0.9):
        config = RunConfig(method="heavy-ball", gamma="theory", beta1=beta1, iters=1000,
                           averaging=True, constants=constants)
        check = check_rate_envelope(run(config, obj), "phb", obj, ref, constants)
        check.name = f"phb_envelope[beta1={beta1:g}]"
        result.reports.append(check)

    obj = synthetic_quadratic(10, 1e4, seed=5, rotate=True)
    ref = solve_reference(obj)
    constants = _scaled(obj, l_scale)
    config = RunConfig(method="nesterov", gamma="theory", iters=2000, constants=constants, record_trace=True)
    check = check_rate_envelope(run(config, obj), "pn", obj, ref, constants)
    check.name = "pn_envelope[kappa=1e4]"
    result.reports.append(check)

    obj = diagonal_quadratic(100.0, seed=6)
    ref = solve_reference(obj)
    constants = _scaled(obj, l_scale)
    C = theory_C(oasis_rule(0.5), 1.0, 100.0)
    rule = oasis_rule(1.0 - math.sqrt(constants.mu / (constants.L * 100.0)) / (4.0 * C))
    config = RunConfig(method="pn", rule=rule, gamma="theory", iters=2000, floor_e=1.0, init_diag=1.0,
                       bounds=(1.0, 100.0), constants=constants, record_trace=True)
    check = check_rate_envelope(run(config, obj), "pn", obj, ref, constants)
    check.name = "pn_envelope[kappa=100, updating]"
    result.reports.append(check)
    return result


_SUITES: Dict[str, Callable[[float], SuiteResult]] = {
    "props": props_suite,
    "lemmas": lemmas_suite,
    "envelopes": envelopes_suite,
}


def run_suite(name: str, l_scale: float = 1.0) -> SuiteResult:
    """
    Args:
        name: props | lemmas | envelopes | all
        l_scale: multiplies the L given to theory parameters and bounds (negative control)
    """
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if not l_scale > 0.0:
        raise UsageError(f"l_scale must be positive, got {l_scale}")
    if name != "all":
        return _SUITES[name](l_scale)
    combined = SuiteResult("all")
    for suite in _SUITES.values():
        combined.extend(suite(l_scale))
    return combined
