"""
Information matrices H_k: squared gradients or Hutchinson diagonal estimates.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from infra.errors import CurvatureSourceError
from numerics import DenseVector

from .rules import PrecondRule, Source

logger = logging.getLogger(__name__)


class RngStream:
    """Seeded Rademacher source; PCG64 streams are reproducible across platforms"""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.counter = 0
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    def rademacher(self, dim: int) -> DenseVector:
        self.counter += 1
        return self._generator.integers(0, 2, size=dim).astype(np.float64) * 2.0 - 1.0

    def spawn(self, index: int) -> RngStream:
        """Independent child stream for member run `index`"""
        child_seed = np.random.SeedSequence([self.seed, int(index)]).generate_state(1, dtype=np.uint64)[0]
        return RngStream(int(child_seed))


def information_matrix(rule: PrecondRule, obj, x: DenseVector, rng: RngStream,
                       grad: Optional[DenseVector] = None) -> DenseVector:
    """
    Diagonal of H_k at x

    gradient-square: grad f(x) * grad f(x)
    hutchinson: v * (hess f(x) v), v Rademacher, averaged over rule.probes draws
    """
    if rule.source is Source.GRADIENT_SQUARE:
        g = obj.grad(x) if grad is None else grad
        return g * g

    hessian_vec = getattr(obj, "hessian_vec", None)
    if hessian_vec is None:
        raise CurvatureSourceError(
            f"Hutchinson curvature needs hessian_vec, which {type(obj).__name__} does not provide"
        )
    total = np.zeros(x.shape[0])
    for _ in range(rule.probes):
        v = rng.rademacher(x.shape[0])
        total += v * hessian_vec(x, v)
    return total / rule.probes
