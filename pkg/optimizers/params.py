"""
Step-size formulas, Nesterov parameters, averaging weights and complexity bounds
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from infra.errors import InvalidConstantsError, InvalidWeightsError, RejectedInputError
from numerics import DenseVector, as_vector


@dataclass(frozen=True)
class PnParams:
    gamma: float
    xi: float
    theta: float

    def __post_init__(self) -> None:
        if not self.gamma > 0.0:
            raise RejectedInputError(f"gamma must be positive, got {self.gamma}")
        if self.xi < 0.0:
            raise RejectedInputError(f"xi must be non-negative, got {self.xi}")
        if not 0.0 <= self.theta <= 1.0:
            raise RejectedInputError(f"theta must lie in [0, 1], got {self.theta}")

    @classmethod
    def from_xi(cls, gamma: float, xi: float) -> PnParams:
        """theta = xi / (1 + xi)"""
        return cls(gamma=gamma, xi=xi, theta=xi / (1.0 + xi))


def _check_bounds(L: float, e: float) -> None:
    if not L > 0.0:
        raise InvalidConstantsError(f"L must be positive, got {L}")
    if not e > 0.0:
        raise InvalidConstantsError(f"e must be positive, got {e}")


def phb_theory_gamma(L: float, e: float, beta1: float) -> float:
    """gamma = (1 - beta1)^2 e / (12 L)"""
    _check_bounds(L, e)
    if not 0.0 <= beta1 < 1.0:
        raise RejectedInputError(f"beta1 must lie in [0, 1), got {beta1}")
    return (1.0 - beta1) ** 2 * e / (12.0 * L)


def momentum_F(gamma: float, beta1: float) -> float:
    """F = gamma / (1 - beta1)"""
    return gamma / (1.0 - beta1)


def pn_theory_params(L: float, mu: float, e: float, Gamma: float) -> PnParams:
    """gamma = e/L, xi = sqrt(L Gamma / (mu e)), theta = sqrt(L Gamma) / (sqrt(mu e) + sqrt(L Gamma))"""
    _check_bounds(L, e)
    if not 0.0 < mu <= L:
        raise InvalidConstantsError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    if not Gamma >= e:
        raise InvalidConstantsError(f"need e <= Gamma, got e={e}, Gamma={Gamma}")
    root_lg = math.sqrt(L * Gamma)
    root_me = math.sqrt(mu * e)
    return PnParams(gamma=e / L, xi=root_lg / root_me, theta=root_lg / (root_me + root_lg))


def weight_ratio(mu: float, F: float, Gamma: float) -> float:
    """rho = 1 - mu F / (4 Gamma); weights are w_k = rho^-(k+1)"""
    a = mu * F / (4.0 * Gamma)
    if not 0.0 < a < 1.0:
        raise InvalidWeightsError(f"mu*F/(4*Gamma) = {a:.6g} must lie in (0, 1)")
    return 1.0 - a


@dataclass
class AveragingWeights:
    """
    Online weighted average (1/W_K) sum_k w_k x_k

    The running coefficient w_k / W_k = (1 - rho) / (1 - rho^(k+1)) never forms
    the geometric weights themselves, which overflow for long runs.
    """

    F: float
    rho: float
    count: int = 0
    average: Optional[DenseVector] = None

    @classmethod
    def for_run(cls, mu: float, F: float, Gamma: float) -> AveragingWeights:
        return cls(F=F, rho=weight_ratio(mu, F, Gamma))

    def weight(self, k: int) -> float:
        return self.rho ** (-(k + 1))

    def total(self, K: int) -> float:
        """W_{K-1}"""
        return float(sum(self.weight(k) for k in range(K)))

    def coefficient(self, k: int) -> float:
        return (1.0 - self.rho) / (1.0 - self.rho ** (k + 1))

    def add(self, x: DenseVector) -> DenseVector:
        x = np.asarray(x, dtype=np.float64)
        if self.average is None:
            self.average = x.copy()
        else:
            self.average = self.average + self.coefficient(self.count) * (x - self.average)
        self.count += 1
        return self.average


def averaged_output(trace: Iterable, mu: float, F: float, Gamma: float) -> DenseVector:
    """(1/W_{K-1}) sum_{k<K} w_k x_k over the iterates of `trace`"""
    averager = AveragingWeights.for_run(mu, F, Gamma)
    for x in trace:
        averager.add(as_vector(x))
    if averager.average is None:
        raise RejectedInputError("averaged output needs at least one iterate")
    return averager.average


def l2_conversion(induced_sq: float, e: float) -> float:
    """||x||^2 <= ||x||_D^2 / e for D >= e I"""
    if not e > 0.0:
        raise InvalidConstantsError(f"e must be positive, got {e}")
    return induced_sq / e


def phb_complexity(L: float, mu: float, e: float, Gamma: float, beta1: float,
                   dist_sq: float, eps: float) -> float:
    """L Gamma / (mu e (1 - beta1)) * log(L ||x0 - x*||^2 / eps), unit constant"""
    _check_bounds(L, e)
    factor = L * Gamma / (mu * e * (1.0 - beta1))
    return factor * max(math.log(max(L * dist_sq, 1e-300) / eps), 0.0)


def pn_complexity(L: float, mu: float, e: float, Gamma: float,
                  dist_sq: float, gap0: float, eps: float) -> float:
    """sqrt(L Gamma / (mu e)) * log((||x0 - x*||^2 + Gamma/mu (f(x0) - f*)) / eps), unit constant"""
    _check_bounds(L, e)
    factor = math.sqrt(L * Gamma / (mu * e))
    initial = dist_sq + Gamma / mu * gap0
    return factor * max(math.log(max(initial, 1e-300) / eps), 0.0)


def effective_constants(L: float, mu: float, e: float, Gamma: float) -> Tuple[float, float, float]:
    """(mu/Gamma, L/e, (L/e) / (mu/Gamma)): the constants a preconditioned method actually sees"""
    _check_bounds(L, e)
    mu_eff = mu / Gamma
    L_eff = L / e
    return mu_eff, L_eff, L_eff / mu_eff
