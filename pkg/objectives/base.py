"""
Common interface for the strongly convex, smooth objectives
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from infra.errors import DimensionMismatchError
from numerics import DenseVector, as_vector


@dataclass(frozen=True)
class ObjectiveConstants:
    """Smoothness (L) and strong convexity (mu) constants"""

    L: float
    mu: float

    @property
    def kappa(self) -> float:
        return self.L / self.mu


@dataclass(frozen=True)
class ReferenceSolution:
    """High-accuracy minimizer used by every theory check"""

    x_star: DenseVector
    f_star: float
    grad_norm_at_solution: float


class ObjectiveProblem(ABC):
    """f: R^d -> R with exact gradient and Hessian-vector products"""

    kind: str = ""

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def value(self, x: DenseVector) -> float:
        ...

    @abstractmethod
    def grad(self, x: DenseVector) -> DenseVector:
        ...

    @abstractmethod
    def hessian_vec(self, x: DenseVector, v: DenseVector) -> DenseVector:
        ...

    @abstractmethod
    def constants(self) -> ObjectiveConstants:
        ...

    @abstractmethod
    def _digest_parts(self) -> Iterable[bytes]:
        ...

    def gap(self, x: DenseVector, ref: ReferenceSolution) -> float:
        """f(x) - f(x*)"""
        return self.value(x) - ref.f_star

    def digest(self) -> str:
        """Stable content hash (cache key material)"""
        h = hashlib.sha256()
        h.update(self.kind.encode("utf-8"))
        for part in self._digest_parts():
            h.update(part)
        return h.hexdigest()[:16]

    def _point(self, x) -> DenseVector:
        x = as_vector(x)
        if x.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"{self.kind} objective has dimension {self.dim}, got a vector of length {x.shape[0]}"
            )
        return x


def array_bytes(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    return str(arr.shape).encode("utf-8") + arr.tobytes()
