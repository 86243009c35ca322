"""
Preconditioner update rules, smoothing schedules and the consecutive-norm constant C
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from infra.errors import InvalidConstantsError, RejectedInputError, ScheduleError

logger = logging.getLogger(__name__)

DEFAULT_BETA2 = 0.999


class Variant(str, Enum):
    IDENTITY = "identity"
    ADAGRAD = "adagrad"
    QUADRATIC = "quadratic-smoothing"
    LINEAR = "linear-smoothing"


class Source(str, Enum):
    GRADIENT_SQUARE = "gradient-square"
    HUTCHINSON = "hutchinson"


class Wiring(str, Enum):
    """Which running matrix the next smoothing update starts from"""

    AUTO = "auto"
    UNCLAMPED = "unclamped"
    CLAMPED = "clamped"


class Beta2Mode(str, Enum):
    FIXED = "fixed"
    ONE_MINUS_INV_K = "one-minus-inv-k"
    ONE_MINUS_INV_HORIZON = "one-minus-inv-K"


def beta2_schedule(mode, k: int = 1, K: Optional[int] = None, fixed_value: float = DEFAULT_BETA2) -> float:
    """
    Smoothing parameter for update number k

    Args:
        mode: fixed | one-minus-inv-k | one-minus-inv-K
        k: 1-based update counter (one-minus-inv-k)
        K: iteration horizon (one-minus-inv-K)
        fixed_value: value returned in fixed mode

    Returns:
        float: 1 - 1/k, 1 - 1/K or fixed_value
    """
    mode = Beta2Mode(mode)
    if mode is Beta2Mode.FIXED:
        return float(fixed_value)
    if mode is Beta2Mode.ONE_MINUS_INV_K:
        if k < 1:
            raise ScheduleError(f"beta2 = 1 - 1/k is undefined for k = {k}")
        return 1.0 - 1.0 / k
    if K is None or K < 1:
        raise ScheduleError(f"beta2 = 1 - 1/K needs a horizon K >= 1, got {K}")
    return 1.0 - 1.0 / K


@dataclass(frozen=True)
class PrecondRule:
    variant: Variant = Variant.IDENTITY
    beta2: float = DEFAULT_BETA2
    source: Source = Source.GRADIENT_SQUARE
    beta2_mode: Beta2Mode = Beta2Mode.FIXED
    horizon: Optional[int] = None
    wiring: Wiring = Wiring.AUTO
    probes: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, 'variant', Variant(self.variant))
        object.__setattr__(self, 'source', Source(self.source))
        object.__setattr__(self, 'beta2_mode', Beta2Mode(self.beta2_mode))
        object.__setattr__(self, 'wiring', Wiring(self.wiring))
        if self.uses_smoothing and self.beta2_mode is Beta2Mode.FIXED and not 0.0 < self.beta2 < 1.0:
            raise RejectedInputError(f"beta2 must lie in (0, 1), got {self.beta2}")
        if self.beta2_mode is Beta2Mode.ONE_MINUS_INV_HORIZON and (self.horizon is None or self.horizon < 1):
            raise ScheduleError("beta2 = 1 - 1/K needs a horizon K >= 1")
        if self.probes < 1:
            raise RejectedInputError(f"need at least one Hutchinson probe, got {self.probes}")

    @property
    def uses_smoothing(self) -> bool:
        return self.variant in (Variant.QUADRATIC, Variant.LINEAR)

    @property
    def is_identity(self) -> bool:
        return self.variant is Variant.IDENTITY

    def resolved_wiring(self) -> Wiring:
        if self.wiring is not Wiring.AUTO:
            return self.wiring
        return Wiring.CLAMPED if self.variant is Variant.LINEAR else Wiring.UNCLAMPED

    def beta2_at(self, k: int) -> float:
        """beta2 used when producing the k-th matrix (k counts updates from 1)"""
        return beta2_schedule(self.beta2_mode, k=k, K=self.horizon, fixed_value=self.beta2)

    def with_wiring(self, wiring) -> PrecondRule:
        return replace(self, wiring=Wiring(wiring))

    def label(self) -> str:
        if self.is_identity:
            return "identity"
        if self.beta2_mode is Beta2Mode.FIXED:
            b2 = f"{self.beta2:g}"
        elif self.beta2_mode is Beta2Mode.ONE_MINUS_INV_K:
            b2 = "1-1/k"
        else:
            b2 = f"1-1/{self.horizon}"
        return f"{self.variant.value}[{self.source.value}, beta2={b2}, {self.resolved_wiring().value}]"


PRESETS = {
    "identity": dict(variant=Variant.IDENTITY),
    "adagrad": dict(variant=Variant.ADAGRAD, source=Source.GRADIENT_SQUARE),
    "adam": dict(variant=Variant.QUADRATIC, source=Source.GRADIENT_SQUARE),
    "rmsprop": dict(variant=Variant.QUADRATIC, source=Source.GRADIENT_SQUARE),
    "oasis": dict(variant=Variant.LINEAR, source=Source.HUTCHINSON),
}


def rule_from_name(name: str, **overrides) -> PrecondRule:
    """Build a rule from a CLI preset name (identity | adagrad | adam | rmsprop | oasis)"""
    try:
        base = PRESETS[name.lower()]
    except KeyError:
        raise RejectedInputError(
            f"unknown preconditioner {name!r}; choose from {', '.join(sorted(PRESETS))}"
        ) from None
    return PrecondRule(**{**base, **overrides})


def theory_C(rule: PrecondRule, e: float, Gamma: float) -> Optional[float]:
    """
    Constant C of the consecutive-norm bound ||x||^2_{D_{k+1}} <= (1 + (1-beta2) C) ||x||^2_{D_k}

    Returns None for AdaGrad, which the bound does not cover.
    """
    if not (e > 0.0 and Gamma >= e):
        raise InvalidConstantsError(f"need Gamma >= e > 0, got e={e}, Gamma={Gamma}")
    if rule.variant is Variant.QUADRATIC:
        return Gamma ** 2 / (2.0 * e ** 2)
    if rule.variant is Variant.LINEAR:
        return 2.0 * Gamma / e
    if rule.variant is Variant.IDENTITY:
        return 0.0
    return None
