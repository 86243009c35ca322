"""
Preconditioned Nesterov (three-point form)

    x_f^{k+1} = x_g^k - gamma D_hat_k^{-1} grad f(x_g^k)
    x^{k+1}   = xi (x_f^{k+1} - x_f^k) + x_f^k
    x_g^{k+1} = theta x_f^{k+1} + (1 - theta) x^{k+1}

The information matrix H_{k+1} is taken at x_g^{k+1}, the next gradient point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from infra.errors import DivergenceError
from numerics import DenseVector, as_vector
from preconditioners import PrecondRule, PreconditionerState, RngStream, information_matrix, update

from .params import PnParams


@dataclass(frozen=True)
class PnState:
    x: DenseVector
    x_f: DenseVector
    x_g: DenseVector
    k: int = 0
    grad_g: Optional[DenseVector] = None

    @classmethod
    def start(cls, x0, grad0: Optional[DenseVector] = None) -> PnState:
        x0 = as_vector(x0)
        return cls(x=x0.copy(), x_f=x0.copy(), x_g=x0.copy(), k=0, grad_g=grad0)


def pn_step(state: PnState, obj, precond: PreconditionerState, rule: PrecondRule,
            params: PnParams, rng: RngStream,
            theta_next: Optional[float] = None) -> Tuple[PnState, PreconditionerState]:
    """
    One iteration; theta_next is theta_{k+1} (params.theta when omitted)
    """
    g = state.grad_g
    if g is None:
        g = obj.grad(state.x_g)
    if not np.all(np.isfinite(g)):
        raise DivergenceError(state.k, f"non-finite gradient at iteration {state.k}")

    theta = params.theta if theta_next is None else theta_next
    x_f_next = state.x_g - params.gamma * precond.D_hat.solve(g)
    x_next = params.xi * (x_f_next - state.x_f) + state.x_f
    x_g_next = theta * x_f_next + (1.0 - theta) * x_next
    if not (np.all(np.isfinite(x_g_next)) and np.all(np.isfinite(x_next))):
        raise DivergenceError(state.k + 1)

    g_next = obj.grad(x_g_next)
    if not np.all(np.isfinite(g_next)):
        raise DivergenceError(state.k + 1, f"non-finite gradient at iteration {state.k + 1}")
    H = information_matrix(rule, obj, x_g_next, rng, grad=g_next)
    precond_next = update(precond, rule, H)
    return PnState(x=x_next, x_f=x_f_next, x_g=x_g_next, k=state.k + 1, grad_g=g_next), precond_next

