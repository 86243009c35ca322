"""
Quadratic objectives f(x) = 1/2 x^T A x - b^T x with symmetric positive-definite A.

A is stored either as its diagonal (1-d array) or as a dense matrix.
"""

from __future__ import annotations

import logging
from typing import Iterable, Optional

import numpy as np

from infra.errors import RejectedInputError
from numerics import DenseVector, as_vector

from .base import ObjectiveConstants, ObjectiveProblem, ReferenceSolution, array_bytes

logger = logging.getLogger(__name__)


class QuadraticObjective(ObjectiveProblem):
    kind = "quadratic"

    def __init__(self, A, b=None, x_star: Optional[DenseVector] = None):
        A = np.array(A, dtype=np.float64)
        if A.ndim == 1:
            if not np.all(A > 0.0):
                raise RejectedInputError("diagonal quadratic needs positive entries")
            eigenvalues = np.sort(A)
        elif A.ndim == 2 and A.shape[0] == A.shape[1]:
            if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max())):
                raise RejectedInputError("quadratic matrix must be symmetric")
            A = 0.5 * (A + A.T)
            eigenvalues = np.linalg.eigvalsh(A)
            if eigenvalues[0] <= 0.0:
                raise RejectedInputError(
                    f"quadratic matrix must be positive definite (min eigenvalue {eigenvalues[0]:.3e})"
                )
        else:
            raise RejectedInputError(f"quadratic matrix must be 1-d or square, got shape {A.shape}")

        self._A = A
        self._A.setflags(write=False)
        self._eigenvalues = eigenvalues
        d = A.shape[0]
        self._b = np.zeros(d) if b is None else as_vector(b)
        if self._b.shape[0] != d:
            raise RejectedInputError(f"shift has length {self._b.shape[0]}, expected {d}")
        self._x_star = None if x_star is None else as_vector(x_star)

    @property
    def dim(self) -> int:
        return int(self._A.shape[0])

    @property
    def is_diagonal(self) -> bool:
        return self._A.ndim == 1

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self._A) if self.is_diagonal else self._A

    @property
    def shift(self) -> DenseVector:
        return self._b

    def _matvec(self, v: DenseVector) -> DenseVector:
        return self._A * v if self.is_diagonal else self._A @ v

    def value(self, x) -> float:
        x = self._point(x)
        return float(0.5 * np.dot(x, self._matvec(x)) - np.dot(self._b, x))

    def grad(self, x) -> DenseVector:
        x = self._point(x)
        return self._matvec(x) - self._b

    def hessian_vec(self, x, v) -> DenseVector:
        self._point(x)
        return self._matvec(self._point(v))

    def constants(self) -> ObjectiveConstants:
        return ObjectiveConstants(L=float(self._eigenvalues[-1]), mu=float(self._eigenvalues[0]))

    def minimizer(self) -> DenseVector:
        """Closed-form solve of A x = b (the planted minimizer when one was given)"""
        if self._x_star is not None:
            return self._x_star.copy()
        if self.is_diagonal:
            return self._b / self._A
        x = np.linalg.solve(self._A, self._b)
        # one step of iterative refinement
        return x + np.linalg.solve(self._A, self._b - self._A @ x)

    def gap(self, x, ref: ReferenceSolution) -> float:
        """Exact 1/2 (x - x*)^T A (x - x*), free of the cancellation in f(x) - f*"""
        r = self._point(x) - ref.x_star
        return float(0.5 * np.dot(r, self._matvec(r)))

    def _digest_parts(self) -> Iterable[bytes]:
        yield array_bytes(self._A)
        yield array_bytes(self._b)
