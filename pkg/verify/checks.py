"""
Numeric oracles for the convergence theory

Every check returns a CheckReport holding one margin per tested instance
(bound minus observed, so >= 0 means the inequality holds). Absolute checks use
the raw difference; relative checks divide it by the larger side. A report
fails iff its worst margin is below -tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from infra.errors import CheckPreconditionError
from numerics import DenseVector, DiagMatrix, induced_norm_sq, inv_induced_norm_sq, norm_sq
from objectives import ObjectiveConstants, ReferenceSolution
from optimizers.params import (
    PnParams,
    effective_constants,
    l2_conversion,
    momentum_F,
    phb_complexity,
    pn_complexity,
)
from preconditioners import PrecondRule, theory_C

from .trace import VerifyTrace

logger = logging.getLogger(__name__)

ABSOLUTE_TOL = 1e-9
SANDWICH_TOL = 1e-12
ULTRA_TOL = 1e-12
LYAPUNOV_TOL = 1e-9
ENVELOPE_TOL = 1e-6
GRAD_FD_TOL = 1e-5
HESS_FD_TOL = 1e-4
ZERO_GRAD_ABS_TOL = 1e-8
# target accuracy for the predicted iteration counts in envelope reports
COMPLEXITY_EPS = 1e-8
# Psi values this far below Psi_0 are rounding noise
PSI_FLOOR = 1e-24


@dataclass
class CheckReport:
    name: str
    margins: np.ndarray
    tolerance: float
    relative: bool = False
    note: str = ""
    applicable: bool = True
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def not_applicable(cls, name: str, reason: str) -> CheckReport:
        return cls(name=name, margins=np.zeros(0), tolerance=0.0,
                   note=f"not applicable: {reason}", applicable=False)

    @property
    def worst_margin(self) -> float:
        return float(np.min(self.margins)) if self.margins.size else 0.0

    @property
    def passed(self) -> bool:
        if not self.applicable:
            return True
        return bool(np.all(np.isfinite(self.margins))) and self.worst_margin >= -self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "worst_margin": self.worst_margin,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "relative": self.relative,
            "n": int(self.margins.size),
            "note": self.note,
        }


def relative_margin(bound, observed) -> np.ndarray:
    bound = np.asarray(bound, dtype=np.float64)
    observed = np.asarray(observed, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(bound), np.abs(observed)), np.finfo(np.float64).tiny)
    return (bound - observed) / scale


def merge_reports(name: str, reports: Iterable[CheckReport]) -> CheckReport:
    """Concatenate the margins of same-kind reports"""
    reports = list(reports)
    if not reports:
        return CheckReport(name=name, margins=np.zeros(0), tolerance=0.0)
    return CheckReport(
        name=name,
        margins=np.concatenate([r.margins for r in reports]),
        tolerance=max(r.tolerance for r in reports),
        relative=reports[0].relative,
    )


def _gap(obj, x: DenseVector, ref: ReferenceSolution) -> float:
    return obj.gap(x, ref)


def check_gradient_gap(obj, ref: ReferenceSolution, samples: np.ndarray,
                constants: Optional[ObjectiveConstants] = None) -> CheckReport:
    """||grad f(x)||^2 <= 2 L (f(x) - f*) at every sample point (rows of `samples`)"""
    L = (constants or obj.constants()).L
    margins = []
    for x in np.atleast_2d(samples):
        g = obj.grad(x)
        margins.append(2.0 * L * _gap(obj, x, ref) - float(np.dot(g, g)))
    return CheckReport(name="gradient_gap", margins=np.array(margins), tolerance=ABSOLUTE_TOL)


def check_norm_sandwich(samples: int, e: float, Gamma: float, dim: int = 5, seed: int = 0) -> CheckReport:
    """
    e||x||^2 <= ||x||_A^2 <= Gamma||x||^2 and ||x||^2/Gamma <= ||x||_{A^-1}^2 <= ||x||^2/e
    for random diagonal e I <= A <= Gamma I
    """
    if not 0.0 < e <= Gamma:
        raise CheckPreconditionError(f"need 0 < e <= Gamma, got ({e}, {Gamma})")
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(samples):
        A = DiagMatrix(rng.uniform(e, Gamma, size=dim))
        x = rng.standard_normal(dim)
        sq = norm_sq(x)
        a_sq = induced_norm_sq(x, A)
        inv_sq = inv_induced_norm_sq(x, A)
        margins.extend(relative_margin(
            [a_sq, Gamma * sq, inv_sq, sq / e],
            [e * sq, a_sq, sq / Gamma, inv_sq],
        ))
    return CheckReport(name="norm_sandwich", margins=np.array(margins), tolerance=SANDWICH_TOL, relative=True)


def _require_full(trace: VerifyTrace, name: str) -> None:
    if trace.compressed:
        raise CheckPreconditionError(f"{name} needs full D_hat snapshots (d = {trace.dim} is compressed)")


def check_ultra_bound(trace: VerifyTrace, rule: PrecondRule, probes: int = 100, seed: int = 0,
                e: Optional[float] = None, Gamma: Optional[float] = None) -> CheckReport:
    """
    ||x||^2_{D_hat_k} <= (1 + (1 - beta2) C) ||x||^2_{D_hat_{k-1}} for every consecutive
    pair of the trace and every probe x, C at the observed bounds
    """
    name = f"ultra_bound[{trace.rule_label}]"
    if rule.variant.value == "adagrad":
        return CheckReport.not_applicable(name, "AdaGrad is not a smoothing rule")
    _require_full(trace, "ultra_bound")
    e = trace.e_observed if e is None else e
    Gamma = trace.gamma_observed if Gamma is None else Gamma
    C = theory_C(rule, e, Gamma)

    X = np.random.default_rng(seed).standard_normal((probes, trace.dim))
    X_sq = X * X
    margins = []
    for k in range(len(trace.dhats) - 1):
        beta2 = trace.beta2s[k] if k < len(trace.beta2s) and trace.beta2s[k] is not None else 1.0
        before = X_sq @ trace.dhats[k].diag
        after = X_sq @ trace.dhats[k + 1].diag
        margins.append(relative_margin((1.0 + (1.0 - beta2) * C) * before, after))
    report = CheckReport(name=name, margins=np.concatenate(margins) if margins else np.zeros(0),
                         tolerance=ULTRA_TOL, relative=True)
    report.details.update(C=C, e=e, Gamma=Gamma)
    return report


def _min_beta2(trace: VerifyTrace) -> Optional[float]:
    values = [b for b in trace.beta2s if b is not None]
    return min(values) if values else None


def check_hb_descent(trace: VerifyTrace, obj, ref: ReferenceSolution, constants: ObjectiveConstants,
                     Gamma: Optional[float] = None, e: Optional[float] = None,
                     rule: Optional[PrecondRule] = None) -> CheckReport:
    """
    Per-step descent of the virtual sequence x_tilde_k = x_k - beta1 gamma/(1-beta1) V_{k-1}:

        (F/2)(f(x_k) - f*) <= (1 - mu F/(4 Gamma)) ||x_tilde_k - x*||^2_{D_hat_{k-1}}
                              - ||x_tilde_{k+1} - x*||^2_{D_hat_k}
                              + (3 L F / e) ||x_k - x_tilde_k||^2_{D_hat_k}

    Raises:
        CheckPreconditionError: F > e/(4L), or beta2 below 1 - mu F/(4 Gamma C) for a smoothing rule
    """
    if trace.method != "phb":
        raise CheckPreconditionError("descent check needs a heavy-ball trace")
    _require_full(trace, "hb_descent")
    e = trace.e_observed if e is None else e
    Gamma = trace.gamma_observed if Gamma is None else Gamma
    L, mu = constants.L, constants.mu
    F = momentum_F(trace.gamma, trace.beta1)
    if F > e / (4.0 * L) * (1.0 + 1e-12):
        raise CheckPreconditionError(f"F = {F:.6g} exceeds e/(4L) = {e / (4.0 * L):.6g}")
    if rule is not None and rule.uses_smoothing:
        C = theory_C(rule, e, Gamma)
        needed = 1.0 - mu * F / (4.0 * Gamma * C)
        beta2 = _min_beta2(trace)
        if beta2 is not None and beta2 < needed:
            raise CheckPreconditionError(f"beta2 = {beta2} below the required {needed}")

    x_star = ref.x_star
    tildes = trace.virtual_points()
    contraction = 1.0 - mu * F / (4.0 * Gamma)
    margins = []
    for k in range(trace.iterations):
        x_k = trace.xs[k]
        lhs = 0.5 * F * _gap(obj, x_k, ref)
        rhs = (contraction * induced_norm_sq(tildes[k] - x_star, trace.dhat(k - 1))
               - induced_norm_sq(tildes[k + 1] - x_star, trace.dhat(k))
               + 3.0 * L * F / e * induced_norm_sq(x_k - tildes[k], trace.dhat(k)))
        margins.append(rhs - lhs)
    report = CheckReport(name="hb_descent", margins=np.array(margins), tolerance=ABSOLUTE_TOL)
    report.details.update(F=F, e=e, Gamma=Gamma)
    return report


def lyapunov_values(trace: VerifyTrace, obj, ref: ReferenceSolution, params: PnParams) -> np.ndarray:
    """Psi_k = ||x^k - x*||^2_{D_hat_{k-1}} + 2 gamma xi^2 (f(x_f^k) - f*)"""
    _require_full(trace, "lyapunov")
    weight = 2.0 * params.gamma * params.xi ** 2
    return np.array([
        induced_norm_sq(trace.xs[k] - ref.x_star, trace.dhat(k - 1)) + weight * _gap(obj, trace.x_fs[k], ref)
        for k in range(len(trace.xs))
    ])


def check_pn_lyapunov(trace: VerifyTrace, obj, ref: ReferenceSolution, params: PnParams,
                      constants: ObjectiveConstants, e: Optional[float] = None,
                      Gamma: Optional[float] = None, rule: Optional[PrecondRule] = None) -> CheckReport:
    """
    Psi_{k+1} <= (1 - 1/xi) Psi_k for a fixed preconditioner and
    Psi_{k+1} <= (1 - 1/(2 xi)) Psi_k for an updating one

    Raises:
        CheckPreconditionError: xi < 1, xi^2 gamma mu / Gamma < 1, gamma > e/L, or beta2 too small
    """
    if trace.method != "pn":
        raise CheckPreconditionError("Lyapunov check needs a Nesterov trace")
    e = trace.e_observed if e is None else e
    Gamma = trace.gamma_observed if Gamma is None else Gamma
    L, mu = constants.L, constants.mu
    slack = 1.0 + 1e-12
    if params.xi * slack < 1.0:
        raise CheckPreconditionError(f"xi = {params.xi} < 1")
    if params.xi ** 2 * params.gamma * mu / Gamma * slack < 1.0:
        raise CheckPreconditionError("xi^2 gamma mu / Gamma < 1")
    if params.gamma > e / L * slack:
        raise CheckPreconditionError(f"gamma = {params.gamma:.6g} exceeds e/L = {e / L:.6g}")

    updating = rule is not None and not rule.is_identity
    if updating and rule.uses_smoothing:
        C = theory_C(rule, e, Gamma)
        needed = 1.0 - math.sqrt(mu * e / (L * Gamma)) / (2.0 * C)
        beta2 = _min_beta2(trace)
        if beta2 is not None and beta2 < needed:
            raise CheckPreconditionError(f"beta2 = {beta2} below the required {needed}")
    factor = 1.0 - 1.0 / (2.0 * params.xi) if updating else 1.0 - 1.0 / params.xi

    psi = lyapunov_values(trace, obj, ref, params)
    floor = PSI_FLOOR * psi[0] if psi.size else 0.0
    margins = []
    for k in range(len(psi) - 1):
        scale = max(psi[k], floor)
        margins.append((factor * psi[k] - psi[k + 1]) / scale if scale > 0.0 else 0.0)
    report = CheckReport(name="pn_lyapunov" + ("[updating]" if updating else ""),
                         margins=np.array(margins), tolerance=LYAPUNOV_TOL, relative=True)
    report.details.update(factor=factor, psi0=float(psi[0]) if psi.size else 0.0)
    return report


def _initial_induced_sq(report, ref: ReferenceSolution) -> float:
    dhat_init = report.dhat_init if report.dhat_init is not None else DiagMatrix.identity(ref.x_star.shape[0])
    return induced_norm_sq(report.x0 - ref.x_star, dhat_init)


def check_rate_envelope(report, kind: str, obj, ref: ReferenceSolution,
                        constants: Optional[ObjectiveConstants] = None) -> CheckReport:
    """
    phb: f(averaged output after K steps) - f* <= 4 exp(-(1-beta1) mu e K/(48 L Gamma)) L ||x0 - x*||^2_{D_hat_{-1}}
    pn:  ||x^K - x*||^2_{D_hat_{K-1}} <= exp(-K sqrt(mu e/(4 L Gamma))) (||x0 - x*||^2_{D_hat_{-1}} + 2Gamma/mu (f(x0) - f*))

    (e, Gamma) are the bounds the run's parameters were computed with.
    """
    name = f"{kind}_envelope"
    params = report.params
    if params.get("params_source") != "theory":
        return CheckReport.not_applicable(name, "run did not use theory parameters")
    if report.diverged:
        return CheckReport(name=name, margins=np.array([-np.inf]), tolerance=ENVELOPE_TOL, relative=True,
                           note=f"run diverged at iteration {report.diverged_at}")
    constants = constants or ObjectiveConstants(L=params["L"], mu=params["mu"])
    L, mu = constants.L, constants.mu
    e, Gamma = params["e"], params["Gamma"]
    dist0 = _initial_induced_sq(report, ref)

    bounds, observed = [], []
    details: Dict[str, Any] = {}
    if kind == "phb":
        if params["algorithm"] != "phb":
            return CheckReport.not_applicable(name, "needs a heavy-ball run")
        beta1 = params["beta1"]
        details["predicted_iterations"] = phb_complexity(L, mu, e, Gamma, beta1, dist0, COMPLEXITY_EPS)
        rate = (1.0 - beta1) * mu * e / (48.0 * L * Gamma)
        for record in report.records:
            if record.f_avg is None:
                continue
            bounds.append(4.0 * math.exp(-rate * record.iter) * L * dist0)
            observed.append(record.f_avg - ref.f_star)
        if not bounds:
            raise CheckPreconditionError("heavy-ball envelope needs a run with output averaging")
    elif kind == "pn":
        if params["algorithm"] != "pn":
            return CheckReport.not_applicable(name, "needs a Nesterov run")
        trace = report.trace
        if trace is None:
            raise CheckPreconditionError("Nesterov envelope needs a recorded trace")
        _require_full(trace, name)
        gap0 = _gap(obj, report.x0, ref)
        psi0 = dist0 + 2.0 * Gamma / mu * gap0
        rate = math.sqrt(mu * e / (4.0 * L * Gamma))
        for K in range(len(trace.xs)):
            bounds.append(math.exp(-rate * K) * psi0)
            observed.append(induced_norm_sq(trace.xs[K] - ref.x_star, trace.dhat(K - 1)))
        details["predicted_iterations"] = pn_complexity(L, mu, e, Gamma, dist0, gap0, COMPLEXITY_EPS)
        # induced-norm envelope at the last K, restated in the Euclidean metric
        details["dist_sq_l2_bound"] = l2_conversion(bounds[-1], e)
    else:
        raise CheckPreconditionError(f"unknown envelope {kind!r}; use phb or pn")

    result = CheckReport(name=name, margins=relative_margin(bounds, observed),
                         tolerance=ENVELOPE_TOL, relative=True)
    result.details.update(L=L, mu=mu, e=e, Gamma=Gamma, points=len(bounds),
                          kappa_effective=effective_constants(L, mu, e, Gamma)[2], **details)
    return result


def _derivative_errors(estimate: DenseVector, exact: DenseVector, rel_tol: float) -> np.ndarray:
    """
    Per-coordinate margins: relative error against max(|exact_i|, 1); at a zero
    vector the absolute error against ZERO_GRAD_ABS_TOL
    """
    err = np.abs(estimate - exact)
    if np.max(np.abs(exact), initial=0.0) <= ZERO_GRAD_ABS_TOL:
        return ZERO_GRAD_ABS_TOL - err
    return rel_tol - err / np.maximum(np.abs(exact), 1.0)


def finite_diff_check(obj, x, h: float = 1e-6, rel_tol: float = GRAD_FD_TOL) -> CheckReport:
    """Central differences of f against grad f, coordinate by coordinate"""
    if not h > 0.0:
        raise CheckPreconditionError(f"step h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    estimate = np.empty_like(x)
    for i in range(x.shape[0]):
        step = np.zeros_like(x)
        step[i] = h
        estimate[i] = (obj.value(x + step) - obj.value(x - step)) / (2.0 * h)
    return CheckReport(name="finite_diff_grad", margins=_derivative_errors(estimate, obj.grad(x), rel_tol),
                       tolerance=0.0)


def hessian_vec_check(obj, x, v, h: float = 1e-5, rel_tol: float = HESS_FD_TOL) -> CheckReport:
    """(grad f(x + h v) - grad f(x - h v)) / 2h against hessian_vec(x, v)"""
    if not h > 0.0:
        raise CheckPreconditionError(f"step h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    estimate = (obj.grad(x + h * v) - obj.grad(x - h * v)) / (2.0 * h)
    return CheckReport(name="finite_diff_hessian_vec",
                       margins=_derivative_errors(estimate, obj.hessian_vec(x, v), rel_tol), tolerance=0.0)


def _random_pairs(dim: int, samples: int, seed: int, scale: float):
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        yield scale * rng.standard_normal(dim), scale * rng.standard_normal(dim)


def check_strong_convexity(obj, samples: int = 200, seed: int = 0, scale: float = 1.0,
                           constants: Optional[ObjectiveConstants] = None) -> CheckReport:
    """f(y) >= f(x) + <grad f(x), y - x> + mu/2 ||y - x||^2 on random pairs"""
    mu = (constants or obj.constants()).mu
    margins = []
    for x, y in _random_pairs(obj.dim, samples, seed, scale):
        d = y - x
        margins.append(obj.value(y) - obj.value(x) - float(np.dot(obj.grad(x), d)) - 0.5 * mu * float(np.dot(d, d)))
    return CheckReport(name="strong_convexity", margins=np.array(margins), tolerance=ABSOLUTE_TOL)


def check_smoothness(obj, samples: int = 200, seed: int = 0, scale: float = 1.0,
                     constants: Optional[ObjectiveConstants] = None) -> CheckReport:
    """||grad f(x) - grad f(y)|| <= L ||x - y|| on random pairs"""
    L = (constants or obj.constants()).L
    bounds, observed = [], []
    for x, y in _random_pairs(obj.dim, samples, seed, scale):
        bounds.append(L * float(np.linalg.norm(x - y)))
        observed.append(float(np.linalg.norm(obj.grad(x) - obj.grad(y))))
    return CheckReport(name="smoothness", margins=relative_margin(bounds, observed),
                       tolerance=SANDWICH_TOL, relative=True)


def summarize(reports: List[CheckReport]) -> Dict[str, Any]:
    return {
        "passed": all(r.passed for r in reports),
        "checks": [r.to_dict() for r in reports],
    }
