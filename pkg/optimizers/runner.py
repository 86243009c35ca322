"""
Run driver for PHB / PN and their unscaled baselines

Baselines share the preconditioned code paths: gd and heavy-ball are PHB with the
identity rule (gd with beta1 = 0), nesterov is PN with the identity rule.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from infra.errors import DimensionMismatchError, DivergenceError, NonFiniteError, RejectedInputError
from numerics import DenseVector, DiagMatrix, as_vector
from objectives import ObjectiveConstants
from preconditioners import DEFAULT_FLOOR, PrecondRule, PreconditionerState, RngStream, initialize
from verify.trace import VerifyTrace

from .params import AveragingWeights, PnParams, momentum_F, phb_theory_gamma, pn_theory_params
from .phb import PhbState, phb_step
from .pn import PnState, pn_step

logger = logging.getLogger(__name__)

THEORY = "theory"

# method -> (algorithm, forces identity rule, forced beta1)
METHOD_ALIASES: Dict[str, Tuple[str, bool, Optional[float]]] = {
    "gd": ("phb", True, 0.0),
    "heavy-ball": ("phb", True, None),
    "nesterov": ("pn", True, None),
    "phb": ("phb", False, None),
    "pn": ("pn", False, None),
}

STOP_TOLERANCE = "tolerance"
STOP_GAP = "gap"
STOP_BUDGET = "budget"
STOP_DIVERGED = "diverged"


@dataclass(frozen=True, eq=False)
class RunConfig:
    method: str = "phb"
    rule: PrecondRule = field(default_factory=PrecondRule)
    gamma: Union[float, str] = THEORY
    beta1: float = 0.9
    iters: int = 1000
    tol: Optional[float] = None
    seed: int = 0
    averaging: bool = False
    floor_e: float = DEFAULT_FLOOR
    init_diag: Optional[float] = None
    record_every: int = 1
    record_trace: bool = False
    bounds: Optional[Tuple[float, float]] = None
    constants: Optional[ObjectiveConstants] = None
    xi: Optional[float] = None
    f_star: Optional[float] = None
    gap_tol: Optional[float] = None
    x0: Optional[DenseVector] = None
    test_objective: Any = None

    def __post_init__(self) -> None:
        if self.method not in METHOD_ALIASES:
            raise RejectedInputError(
                f"unknown method {self.method!r}; choose from {', '.join(METHOD_ALIASES)}"
            )
        if self.gamma != THEORY:
            gamma = float(self.gamma)
            if not (gamma > 0.0 and math.isfinite(gamma)):
                raise RejectedInputError(f"gamma must be positive, got {self.gamma}")
            object.__setattr__(self, 'gamma', gamma)
        if not 0.0 <= self.beta1 < 1.0:
            raise RejectedInputError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if self.iters < 1:
            raise RejectedInputError(f"iteration budget must be >= 1, got {self.iters}")
        if self.record_every < 1:
            raise RejectedInputError(f"record_every must be >= 1, got {self.record_every}")
        if self.gap_tol is not None and self.f_star is None:
            raise RejectedInputError("gap_tol needs f_star")
        if self.xi is not None and self.xi < 0.0:
            raise RejectedInputError(f"xi must be non-negative, got {self.xi}")

    @property
    def uses_theory_gamma(self) -> bool:
        return self.gamma == THEORY

    def resolve(self) -> Tuple[str, PrecondRule, float]:
        """(algorithm, effective rule, effective beta1)"""
        algorithm, identity_only, forced_beta1 = METHOD_ALIASES[self.method]
        rule = PrecondRule() if identity_only else self.rule
        beta1 = self.beta1 if forced_beta1 is None else forced_beta1
        return algorithm, rule, beta1


@dataclass
class IterationRecord:
    iter: int
    f: float
    grad_sq_norm: float
    elapsed_ms: float
    dhat_min: float
    dhat_max: float
    test_loss: Optional[float] = None
    f_avg: Optional[float] = None


@dataclass
class RunReport:
    method: str
    records: List[IterationRecord]
    stop_reason: str
    final_x: DenseVector
    params: Dict[str, Any]
    averaged_x: Optional[DenseVector] = None
    trace: Optional[VerifyTrace] = None
    iterations: int = 0
    diverged_at: Optional[int] = None
    e_observed: float = 1.0
    gamma_observed: float = 1.0
    x0: Optional[DenseVector] = None
    dhat_init: Optional[DiagMatrix] = None

    @property
    def diverged(self) -> bool:
        return self.stop_reason == STOP_DIVERGED

    @property
    def last(self) -> IterationRecord:
        return self.records[-1]

    def iterations_to(self, tol: float) -> Optional[int]:
        """First recorded iteration with ||grad f||^2 <= tol"""
        for record in self.records:
            if record.grad_sq_norm <= tol:
                return record.iter
        return None


def _initial_point(config: RunConfig, dim: int) -> DenseVector:
    if config.x0 is None:
        return np.zeros(dim)
    x0 = as_vector(config.x0)
    if x0.shape[0] != dim:
        raise DimensionMismatchError(f"x0 has dimension {x0.shape[0]}, objective has {dim}")
    return x0


def measure_bounds(config: RunConfig, obj) -> Tuple[float, float]:
    """
    Pilot run with theory parameters at the bounds of D_hat_0; returns the
    observed (e, Gamma) of the whole pilot trajectory
    """
    _, rule, _ = config.resolve()
    x0 = _initial_point(config, obj.dim)
    precond = initialize(rule, obj, x0, RngStream(config.seed), floor_e=config.floor_e,
                         init_diag=config.init_diag)
    pilot = replace(config, bounds=(precond.e_theory(), precond.gamma_theory()),
                    averaging=False, record_trace=False, record_every=config.iters,
                    test_objective=None)
    report = run(pilot, obj)
    logger.info(
        f"Pilot run measured e = {report.e_observed:.4g}, Gamma = {report.gamma_observed:.4g} "
        f"over {report.iterations} iterations"
    )
    return report.e_observed, report.gamma_observed


def _needs_bounds(config: RunConfig, algorithm: str) -> bool:
    return config.uses_theory_gamma or config.averaging or (algorithm == "pn" and config.xi is None)


def _resolve_bounds(config: RunConfig, algorithm: str, rule: PrecondRule, obj,
                    precond: PreconditionerState) -> Optional[Tuple[float, float]]:
    if config.bounds is not None:
        e, Gamma = config.bounds
        if not 0.0 < e <= Gamma:
            raise RejectedInputError(f"bounds need 0 < e <= Gamma, got ({e}, {Gamma})")
        return float(e), float(Gamma)
    if rule.is_identity:
        return 1.0, 1.0
    if not _needs_bounds(config, algorithm):
        return None
    if config.uses_theory_gamma:
        return measure_bounds(config, obj)
    # manual step size: only xi depends on the bounds, and its side condition only needs D_hat_0 <= Gamma
    return precond.e_theory(), precond.observed_max


def _pn_params(config: RunConfig, constants: ObjectiveConstants,
               bounds: Tuple[float, float]) -> PnParams:
    e, Gamma = bounds
    if config.uses_theory_gamma:
        params = pn_theory_params(constants.L, constants.mu, e, Gamma)
        return params if config.xi is None else PnParams.from_xi(params.gamma, config.xi)
    gamma = float(config.gamma)
    xi = config.xi if config.xi is not None else max(1.0, math.sqrt(Gamma / (gamma * constants.mu)))
    return PnParams.from_xi(gamma, xi)


def _grad_sq(g: DenseVector) -> float:
    return float(np.dot(g, g))


def run(config: RunConfig, obj) -> RunReport:
    """
    Iterate config.method on obj until ||grad f||^2 <= tol, f - f* <= gap_tol or the budget

    Records iteration 0 and every record_every-th iteration, plus the last one.
    A non-finite value truncates the report with stop_reason "diverged".
    """
    algorithm, rule, beta1 = config.resolve()
    x0 = _initial_point(config, obj.dim)
    rng = RngStream(config.seed)

    grad0 = obj.grad(x0)
    precond = initialize(rule, obj, x0, rng, floor_e=config.floor_e,
                         init_diag=config.init_diag, grad0=grad0)
    bounds = _resolve_bounds(config, algorithm, rule, obj, precond)

    constants = config.constants
    if constants is None and (config.uses_theory_gamma or config.averaging or algorithm == "pn"):
        constants = obj.constants()

    pn_params: Optional[PnParams] = None
    if algorithm == "pn":
        if config.averaging:
            raise RejectedInputError("weighted output averaging applies to heavy-ball methods only")
        pn_params = _pn_params(config, constants, bounds)
        gamma = pn_params.gamma
    elif config.uses_theory_gamma:
        gamma = phb_theory_gamma(constants.L, bounds[0], beta1)
    else:
        gamma = float(config.gamma)

    averager = None
    if config.averaging:
        averager = AveragingWeights.for_run(constants.mu, momentum_F(gamma, beta1), bounds[1])

    params: Dict[str, Any] = {
        "method": config.method,
        "algorithm": algorithm,
        "precond": rule.label(),
        "gamma": gamma,
        "beta1": beta1 if algorithm == "phb" else None,
        "xi": pn_params.xi if pn_params else None,
        "theta": pn_params.theta if pn_params else None,
        "e": bounds[0] if bounds else None,
        "Gamma": bounds[1] if bounds else None,
        "L": constants.L if constants else None,
        "mu": constants.mu if constants else None,
        "params_source": THEORY if config.uses_theory_gamma else "manual",
        "seed": config.seed,
    }
    logger.info(
        f"Starting {config.method} ({rule.label()}) on {obj.kind} d={obj.dim}: "
        f"gamma={gamma:.4g}, budget {config.iters}"
    )

    trace = None
    if config.record_trace:
        trace = VerifyTrace(method=algorithm, dim=obj.dim, gamma=gamma, beta1=beta1 if algorithm == "phb" else 0.0,
                            xi=pn_params.xi if pn_params else None,
                            theta=pn_params.theta if pn_params else None, rule_label=rule.label())
        trace.add_dhat(precond.D_hat_init)
        trace.add_dhat(precond.D_hat)
        trace.beta2s.append(precond.last_beta2)
        trace.xs.append(x0.copy())
        if algorithm == "phb":
            trace.Vs.append(np.zeros_like(x0))
        else:
            trace.x_fs.append(x0.copy())
            trace.x_gs.append(x0.copy())

    start = time.perf_counter()
    state = PhbState.start(x0, grad0) if algorithm == "phb" else PnState.start(x0, grad0)
    f_x = obj.value(x0)
    g_sq = _grad_sq(grad0)
    records = [_make_record(0, f_x, g_sq, start, precond, config, x0, None, obj)]
    if trace is not None:
        trace.f_values.append(f_x)
        trace.grad_sq_norms.append(g_sq)

    stop_reason = _stop_reason(config, f_x, g_sq) or STOP_BUDGET
    diverged_at = None
    out_x = x0

    if stop_reason == STOP_BUDGET:
        with np.errstate(all="ignore"):
            for k in range(config.iters):
                if averager is not None:
                    averager.add(state.x)
                try:
                    if algorithm == "phb":
                        state, precond = phb_step(state, obj, precond, rule, gamma, beta1, rng)
                        step_x = state.x
                        g_sq = _grad_sq(state.grad)
                    else:
                        state, precond = pn_step(state, obj, precond, rule, pn_params, rng)
                        step_x = state.x_f
                        g_sq = _grad_sq(obj.grad(step_x))
                    f_x = obj.value(step_x)
                    if not (math.isfinite(f_x) and math.isfinite(g_sq)):
                        raise DivergenceError(k + 1)
                except (DivergenceError, NonFiniteError) as err:
                    diverged_at = getattr(err, "iteration", k + 1)
                    logger.warning(f"{config.method} diverged at iteration {diverged_at}: {err}")
                    stop_reason = STOP_DIVERGED
                    break

                out_x = step_x
                if trace is not None:
                    _extend_trace(trace, state, precond, f_x, g_sq)

                reason = _stop_reason(config, f_x, g_sq)
                if reason or (k + 1) % config.record_every == 0 or k + 1 == config.iters:
                    avg = averager.average if averager is not None else None
                    records.append(_make_record(k + 1, f_x, g_sq, start, precond, config, step_x, avg, obj))
                if reason:
                    stop_reason = reason
                    break

    if trace is not None:
        trace.e_observed = precond.e_theory()
        trace.gamma_observed = precond.gamma_theory()

    iterations = records[-1].iter if stop_reason != STOP_DIVERGED else (diverged_at or 1) - 1
    report = RunReport(
        method=config.method,
        records=records,
        stop_reason=stop_reason,
        final_x=out_x,
        params=params,
        averaged_x=averager.average if averager is not None else None,
        trace=trace,
        iterations=iterations,
        diverged_at=diverged_at,
        e_observed=precond.e_theory(),
        gamma_observed=precond.gamma_theory(),
        x0=x0,
        dhat_init=precond.D_hat_init,
    )
    logger.info(
        f"Finished {config.method}: {stop_reason} after {report.iterations} iterations, "
        f"f={report.last.f:.6g}, ||grad||^2={report.last.grad_sq_norm:.3e}"
    )
    return report


def _stop_reason(config: RunConfig, f_x: float, g_sq: float) -> Optional[str]:
    if config.tol is not None and g_sq <= config.tol:
        return STOP_TOLERANCE
    if config.gap_tol is not None and f_x - config.f_star <= config.gap_tol:
        return STOP_GAP
    return None


def _make_record(k: int, f_x: float, g_sq: float, start: float, precond: PreconditionerState,
                 config: RunConfig, x: DenseVector, avg: Optional[DenseVector], obj) -> IterationRecord:
    test_loss = config.test_objective.value(x) if config.test_objective is not None else None
    return IterationRecord(
        iter=k,
        f=f_x,
        grad_sq_norm=g_sq,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
        dhat_min=precond.D_hat.min(),
        dhat_max=precond.D_hat.max(),
        test_loss=test_loss,
        f_avg=obj.value(avg) if avg is not None else None,
    )


def _extend_trace(trace: VerifyTrace, state, precond: PreconditionerState, f_x: float, g_sq: float) -> None:
    trace.xs.append(state.x)
    if isinstance(state, PhbState):
        trace.Vs.append(state.V)
    else:
        trace.x_fs.append(state.x_f)
        trace.x_gs.append(state.x_g)
    trace.add_dhat(precond.D_hat)
    trace.beta2s.append(precond.last_beta2)
    trace.f_values.append(f_x)
    trace.grad_sq_norms.append(g_sq)
