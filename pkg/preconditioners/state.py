"""
Running preconditioner state: the raw smoothed diagonal D_k and its clamped
counterpart D_hat_k = max(e, D_k).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from infra.errors import InvalidPreconditionerError, NonFiniteError, RejectedInputError, StateCorruptionError
from numerics import DenseVector, DiagMatrix, as_vector

from .curvature import RngStream, information_matrix
from .rules import PrecondRule, Source, Variant, Wiring

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-8


@dataclass(frozen=True)
class PreconditionerState:
    """
    D_prev: raw diagonal, may be zero or negative under linear smoothing
    D_hat: clamped diagonal used by the optimizers
    D_hat_init: D_hat_{-1}, the matrix the initial distance is measured in
    observed_min/observed_max: extrema of every D_hat produced so far, D_hat_init included
    info_abs_max: largest information entry on the scale of D (|g| or |H_k|) seen so far,
        needed for the consecutive-norm bound
    """

    D_prev: DenseVector
    D_hat: DiagMatrix
    floor_e: float
    D_hat_init: DiagMatrix
    observed_min: float
    observed_max: float
    step_index: int = -1
    info_abs_max: float = 0.0
    last_info: Optional[DenseVector] = field(default=None, repr=False)
    last_beta2: Optional[float] = None

    @classmethod
    def from_diagonal(cls, D_prev, floor_e: float = DEFAULT_FLOOR, step_index: int = -1) -> PreconditionerState:
        """State whose raw diagonal is D_prev and whose clamped diagonal is max(e, D_prev)"""
        if not floor_e > 0.0:
            raise InvalidPreconditionerError(f"floor e must be positive, got {floor_e}")
        D_prev = as_vector(D_prev).copy()
        D_hat = DiagMatrix(np.maximum(floor_e, D_prev))
        return cls(
            D_prev=D_prev,
            D_hat=D_hat,
            floor_e=float(floor_e),
            D_hat_init=D_hat,
            observed_min=D_hat.min(),
            observed_max=D_hat.max(),
            step_index=step_index,
        )

    @property
    def dim(self) -> int:
        return self.D_hat.dim

    def gamma_theory(self) -> float:
        """Upper constant Gamma used by the theory checks"""
        return max(self.observed_max, self.info_abs_max)

    def e_theory(self) -> float:
        return self.observed_min


def info_squared(rule: PrecondRule, H: DenseVector) -> DenseVector:
    """
    Squared information on the scale of D

    Squared gradients already are g * g; a Hutchinson diagonal is squared here.
    """
    if rule.source is Source.GRADIENT_SQUARE:
        return H
    return H * H


def update(state: PreconditionerState, rule: PrecondRule, H) -> PreconditionerState:
    """
    Produce D_{k+1} from D_k and the information diagonal H_{k+1}

    quadratic: D^2 = beta2 D_prev^2 + (1 - beta2) S
    linear:    D = beta2 D_prev + (1 - beta2) H
    adagrad:   D^2 = D_prev^2 + S
    with S = info_squared(rule, H): g * g for squared gradients, H * H for Hutchinson.
    The wiring picks whether D_prev is the raw or the clamped previous diagonal.
    """
    H = as_vector(H)
    if H.shape != state.D_prev.shape:
        raise RejectedInputError(f"information diagonal has dimension {H.shape[0]}, state has {state.dim}")

    new_index = state.step_index + 1
    if rule.is_identity:
        ones = np.ones(state.dim)
        return replace(state, D_prev=ones, D_hat=DiagMatrix(ones), step_index=new_index,
                       observed_min=min(state.observed_min, 1.0),
                       observed_max=max(state.observed_max, 1.0),
                       last_info=H, last_beta2=None)

    base = state.D_hat.diag if rule.resolved_wiring() is Wiring.CLAMPED else state.D_prev
    beta2: Optional[float] = None

    if rule.variant is Variant.LINEAR:
        beta2 = rule.beta2_at(new_index + 1)
        D_new = beta2 * base + (1.0 - beta2) * H
        magnitude = np.abs(H)
    else:
        S = info_squared(rule, H)
        if np.any(S < 0.0):
            raise RejectedInputError("squared gradient information must be non-negative")
        magnitude = np.sqrt(S)
        if rule.variant is Variant.ADAGRAD:
            D_new = np.sqrt(base * base + S)
        else:
            beta2 = rule.beta2_at(new_index + 1)
            if np.any(base < 0.0):
                raise StateCorruptionError("quadratic smoothing met a negative entry in D_prev")
            D_new = np.sqrt(beta2 * base * base + (1.0 - beta2) * S)

    if not np.all(np.isfinite(D_new)):
        raise NonFiniteError(f"preconditioner update {new_index} produced non-finite entries")

    D_hat = DiagMatrix(np.maximum(state.floor_e, D_new))
    return replace(
        state,
        D_prev=D_new,
        D_hat=D_hat,
        step_index=new_index,
        observed_min=min(state.observed_min, D_hat.min()),
        observed_max=max(state.observed_max, D_hat.max()),
        info_abs_max=max(state.info_abs_max, float(magnitude.max()) if H.size else 0.0),
        last_info=H,
        last_beta2=beta2,
    )


def initialize(rule: PrecondRule, obj, x0, rng: RngStream, floor_e: float = DEFAULT_FLOOR,
               init_diag: Optional[float] = None, grad0=None) -> PreconditionerState:
    """
    Build D_hat_{-1} = max(e, init_diag) and apply the k = 0 update at x0

    init_diag defaults to 1 for the identity rule and to 0 otherwise.
    """
    dim = obj.dim
    if init_diag is None:
        init_diag = 1.0 if rule.is_identity else 0.0
    if init_diag < 0.0:
        raise RejectedInputError(f"initial diagonal must be non-negative, got {init_diag}")
    if rule.is_identity:
        start = PreconditionerState.from_diagonal(np.ones(dim), floor_e=min(floor_e, 1.0))
    else:
        start = PreconditionerState.from_diagonal(np.full(dim, float(init_diag)), floor_e=floor_e)

    H0 = information_matrix(rule, obj, as_vector(x0), rng, grad=grad0)
    state = update(start, rule, H0)
    logger.debug(
        f"Preconditioner {rule.label()} initialized: D_hat_0 in [{state.D_hat.min():.3e}, {state.D_hat.max():.3e}]"
    )
    return state
