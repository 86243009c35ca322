"""
Preconditioned Heavy-Ball

    V_k     = beta1 V_{k-1} + D_hat_k^{-1} grad f(x_k)
    x_{k+1} = x_k - gamma V_k
    D_hat_{k+1} = max(e, Update(D_k, H_{k+1}))
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from infra.errors import DivergenceError
from numerics import DenseVector, as_vector
from preconditioners import PrecondRule, PreconditionerState, RngStream, information_matrix, update


@dataclass(frozen=True)
class PhbState:
    x: DenseVector
    V: DenseVector
    k: int = 0
    grad: Optional[DenseVector] = None

    @classmethod
    def start(cls, x0, grad0: Optional[DenseVector] = None) -> PhbState:
        x0 = as_vector(x0).copy()
        return cls(x=x0, V=np.zeros_like(x0), k=0, grad=grad0)


def _finite_grad(obj, x: DenseVector, k: int) -> DenseVector:
    g = obj.grad(x)
    if not np.all(np.isfinite(g)):
        raise DivergenceError(k, f"non-finite gradient at iteration {k}")
    return g


def phb_step(state: PhbState, obj, precond: PreconditionerState, rule: PrecondRule,
             gamma: float, beta1: float, rng: RngStream) -> Tuple[PhbState, PreconditionerState]:
    """One iteration; returns the state at k+1 and D_hat_{k+1}"""
    g = state.grad if state.grad is not None else _finite_grad(obj, state.x, state.k)
    V = beta1 * state.V + precond.D_hat.solve(g)
    x_next = state.x - gamma * V
    if not np.all(np.isfinite(x_next)):
        raise DivergenceError(state.k + 1)

    g_next = _finite_grad(obj, x_next, state.k + 1)
    H = information_matrix(rule, obj, x_next, rng, grad=g_next)
    precond_next = update(precond, rule, H)
    return PhbState(x=x_next, V=V, k=state.k + 1, grad=g_next), precond_next

