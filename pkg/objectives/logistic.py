"""
L2-regularized logistic regression (mean cross-entropy over samples)

    f(w) = (1/n) sum_i log(1 + exp(-y_i <a_i, w>)) + (lam/2) ||w||^2
"""

from __future__ import annotations

import logging
from typing import Iterable, Optional

import numpy as np
from scipy.special import expit

from infra.errors import NoStrongConvexityError, RejectedInputError
from numerics import DenseVector

from .base import ObjectiveConstants, ObjectiveProblem, array_bytes

logger = logging.getLogger(__name__)

POWER_ITERATION_TOL = 1e-8
POWER_ITERATION_MAX_ITER = 10_000


def power_iteration(matvec, dim: int, tol: float = POWER_ITERATION_TOL,
                    max_iter: int = POWER_ITERATION_MAX_ITER, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite operator"""
    if dim == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        lam_new = float(np.dot(v, w))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            lam = lam_new
            break
        lam = lam_new
    else:
        logger.warning(f"power iteration hit {max_iter} iterations before reaching rel tol {tol}")
    # Rayleigh quotients approach lambda_max from below
    return lam * (1.0 + 10.0 * tol)


class LogisticObjective(ObjectiveProblem):
    kind = "logistic-l2"

    def __init__(self, features, labels, lam: float):
        X = np.array(features, dtype=np.float64)
        y = np.array(labels, dtype=np.float64)
        if X.ndim != 2:
            raise RejectedInputError(f"features must be an n x d matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise RejectedInputError(f"expected {X.shape[0]} labels, got shape {y.shape}")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise RejectedInputError("labels must be -1 or +1")
        if lam < 0.0:
            raise RejectedInputError(f"regularization weight must be >= 0, got {lam}")
        if not np.all(np.isfinite(X)):
            raise RejectedInputError("features contain NaN or Inf")
        X.setflags(write=False)
        y.setflags(write=False)
        self.X = X
        self.y = y
        self.lam = float(lam)
        self._smoothness: Optional[float] = None

    @property
    def dim(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_samples(self) -> int:
        return int(self.X.shape[0])

    def _margins(self, w: DenseVector) -> DenseVector:
        return self.y * (self.X @ w)

    def value(self, x) -> float:
        w = self._point(x)
        n = self.n_samples
        loss = float(np.logaddexp(0.0, -self._margins(w)).sum() / n) if n else 0.0
        return loss + 0.5 * self.lam * float(np.dot(w, w))

    def grad(self, x) -> DenseVector:
        w = self._point(x)
        n = self.n_samples
        if n == 0:
            return self.lam * w
        coeff = -self.y * expit(-self._margins(w))
        return self.X.T @ coeff / n + self.lam * w

    def hessian_vec(self, x, v) -> DenseVector:
        w = self._point(x)
        v = self._point(v)
        n = self.n_samples
        if n == 0:
            return self.lam * v
        s = expit(self.X @ w)
        curvature = s * (1.0 - s)
        return self.X.T @ (curvature * (self.X @ v)) / n + self.lam * v

    def hessian(self, x) -> np.ndarray:
        """Dense Hessian (reference solver and small-d checks)"""
        w = self._point(x)
        n = max(self.n_samples, 1)
        s = expit(self.X @ w)
        weighted = self.X * (s * (1.0 - s))[:, None]
        return self.X.T @ weighted / n + self.lam * np.eye(self.dim)

    def smoothness_bound(self) -> float:
        """lambda_max(X^T X / 4n) + lam, using sigma' <= 1/4"""
        if self._smoothness is None:
            n = self.n_samples
            X = self.X
            top = power_iteration(lambda v: X.T @ (X @ v) / (4.0 * n), self.dim) if n else 0.0
            self._smoothness = top + self.lam
        return self._smoothness

    def constants(self) -> ObjectiveConstants:
        if self.lam <= 0.0:
            raise NoStrongConvexityError(
                "logistic loss without L2 regularization is not strongly convex (lam must be > 0)"
            )
        return ObjectiveConstants(L=self.smoothness_bound(), mu=self.lam)

    def accuracy(self, x) -> float:
        w = self._point(x)
        if self.n_samples == 0:
            return float("nan")
        predictions = np.where(self.X @ w >= 0.0, 1.0, -1.0)
        return float(np.mean(predictions == self.y))

    def _digest_parts(self) -> Iterable[bytes]:
        yield array_bytes(self.X)
        yield array_bytes(self.y)
        yield repr(self.lam).encode("utf-8")


def logistic_from_dataset(dataset, lam: float) -> LogisticObjective:
    """Logistic objective over a parsed dataset (features n x d, labels in {-1, +1})"""
    return LogisticObjective(dataset.features, dataset.labels, lam)
