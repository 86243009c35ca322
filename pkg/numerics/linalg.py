"""
Vector and diagonal-matrix primitives

Vectors are plain contiguous float64 numpy arrays; diagonal matrices store
only their diagonal. Sums run left to right in float64 (np.add.reduce on a
1-d array), which is all the tolerances of the theory checks assume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
import numpy.typing as npt

from infra.errors import DimensionMismatchError, InvalidPreconditionerError, NonFiniteError

DenseVector = npt.NDArray[np.float64]
VectorLike = Union[DenseVector, Iterable[float]]


def as_vector(values: VectorLike) -> DenseVector:
    """Convert to a finite 1-d float64 array"""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("vector contains NaN or Inf entries")
    return arr


def _check_same_dim(x: DenseVector, y: DenseVector) -> None:
    if x.shape != y.shape:
        raise DimensionMismatchError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")


@dataclass(frozen=True)
class DiagMatrix:
    """Diagonal positive-definite matrix"""

    diag: DenseVector

    def __post_init__(self) -> None:
        diag = as_vector(self.diag)
        if diag.size and not np.all(diag > 0.0):
            raise InvalidPreconditionerError(
                f"diagonal entries must be positive, min entry is {diag.min()!r}"
            )
        diag.setflags(write=False)
        object.__setattr__(self, 'diag', diag)

    @classmethod
    def identity(cls, dim: int) -> DiagMatrix:
        return cls(np.ones(dim))

    @property
    def dim(self) -> int:
        return int(self.diag.shape[0])

    def inverse(self) -> DiagMatrix:
        return DiagMatrix(1.0 / self.diag)

    def apply(self, x: VectorLike) -> DenseVector:
        """A @ x"""
        x = as_vector(x)
        _check_same_dim(x, self.diag)
        return self.diag * x

    def solve(self, x: VectorLike) -> DenseVector:
        """A^{-1} @ x"""
        x = as_vector(x)
        _check_same_dim(x, self.diag)
        return x / self.diag

    def min(self) -> float:
        return float(self.diag.min())

    def max(self) -> float:
        return float(self.diag.max())


def inner(x: VectorLike, y: VectorLike) -> float:
    x, y = as_vector(x), as_vector(y)
    _check_same_dim(x, y)
    return float(np.add.reduce(x * y))


def norm_sq(x: VectorLike) -> float:
    x = as_vector(x)
    return float(np.add.reduce(x * x))


def hadamard(x: VectorLike, y: VectorLike) -> DenseVector:
    x, y = as_vector(x), as_vector(y)
    _check_same_dim(x, y)
    return x * y


def induced_inner(x: VectorLike, y: VectorLike, A: DiagMatrix) -> float:
    """<x, A y>"""
    x, y = as_vector(x), as_vector(y)
    _check_same_dim(x, y)
    _check_same_dim(x, A.diag)
    return float(np.add.reduce(x * A.diag * y))


def induced_norm_sq(x: VectorLike, A: DiagMatrix) -> float:
    """||x||_A^2 = sum_i A_ii x_i^2"""
    x = as_vector(x)
    _check_same_dim(x, A.diag)
    return float(np.add.reduce(A.diag * (x * x)))


def inv_induced_norm_sq(x: VectorLike, A: DiagMatrix) -> float:
    """||x||_{A^{-1}}^2 = sum_i x_i^2 / A_ii"""
    x = as_vector(x)
    _check_same_dim(x, A.diag)
    if not np.all(A.diag > 0.0):
        raise InvalidPreconditionerError("inverse norm needs a positive diagonal")
    return float(np.add.reduce((x * x) / A.diag))
