"""
High-accuracy reference minimizers (x*, f*) for the theory checks
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from infra.errors import NoStrongConvexityError, ReferenceFailureError

from .base import ObjectiveProblem, ReferenceSolution
from .logistic import LogisticObjective
from .quadratic import QuadraticObjective
from .reference_cache import cache_reference, get_cached_reference

logger = logging.getLogger(__name__)

GRAD_NORM_TOL = 1e-10
NEWTON_MAX_STEPS = 100
ARMIJO_C = 1e-4
MAX_BACKTRACKS = 60


def _newton(obj: LogisticObjective, tol: float, max_steps: int) -> np.ndarray:
    """Damped Newton with Armijo backtracking"""
    x = np.zeros(obj.dim)
    f = obj.value(x)
    for step in range(max_steps):
        g = obj.grad(x)
        g_norm = float(np.linalg.norm(g))
        if g_norm <= tol:
            logger.debug(f"Newton converged in {step} steps, ||grad|| = {g_norm:.3e}")
            return x
        H = obj.hessian(x)
        try:
            direction = -cho_solve(cho_factor(H), g)
        except LinAlgError:
            direction = -g
        slope = float(np.dot(g, direction))
        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            candidate = x + t * direction
            f_candidate = obj.value(candidate)
            if f_candidate <= f + ARMIJO_C * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # f no longer resolves the decrease near the optimum: take the full
            # Newton step as long as it still shrinks the gradient
            candidate = x + direction
            if np.linalg.norm(obj.grad(candidate)) >= g_norm:
                break
            f_candidate = obj.value(candidate)
        x, f = candidate, f_candidate

    g_norm = float(np.linalg.norm(obj.grad(x)))
    if g_norm <= tol:
        return x
    raise ReferenceFailureError(
        f"reference solver stopped after {max_steps} Newton steps with ||grad|| = {g_norm:.3e} > {tol:.0e}"
    )


def solve_reference(obj: ObjectiveProblem, tol: float = GRAD_NORM_TOL,
                    max_steps: int = NEWTON_MAX_STEPS, use_cache: bool = True) -> ReferenceSolution:
    """
    Minimize obj to ||grad f|| <= tol

    Quadratics use a direct linear solve. Logistic objectives run damped
    Newton and are cached by content digest.

    Raises:
        ReferenceFailureError: tolerance not reached within the budget
    """
    if isinstance(obj, QuadraticObjective):
        x_star = obj.minimizer()
        ref = ReferenceSolution(x_star, obj.value(x_star), float(np.linalg.norm(obj.grad(x_star))))
        if ref.grad_norm_at_solution > tol:
            raise ReferenceFailureError(
                f"linear solve residual {ref.grad_norm_at_solution:.3e} exceeds {tol:.0e}"
            )
        return ref

    if isinstance(obj, LogisticObjective) and obj.lam <= 0.0:
        raise NoStrongConvexityError("reference solution needs lam > 0")

    digest = obj.digest()
    if use_cache:
        cached = get_cached_reference(digest)
        if cached is not None and cached.x_star.shape == (obj.dim,):
            return cached

    if not isinstance(obj, LogisticObjective):
        raise ReferenceFailureError(f"no reference solver for objective kind {obj.kind!r}")

    x_star = _newton(obj, tol, max_steps)
    ref = ReferenceSolution(x_star, obj.value(x_star), float(np.linalg.norm(obj.grad(x_star))))
    logger.info(f"Reference solved for {obj.kind} ({digest}): f* = {ref.f_star:.12g}")
    if use_cache:
        cache_reference(digest, ref)
    return ref
