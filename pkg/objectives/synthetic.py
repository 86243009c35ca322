"""
Seeded synthetic problems and the CLI's "quad:..." / "logit:..." specs.
"""

from __future__ import annotations

from typing import Dict

import numpy as np

from infra.errors import UsageError

from .base import ObjectiveProblem
from .logistic import LogisticObjective
from .quadratic import QuadraticObjective


def quadratic_from_spectrum(eigenvalues, x_star=None, rotate: bool = False, seed: int = 0) -> QuadraticObjective:
    """A = Q diag(eigenvalues) Q^T (Q = I unless rotate), b = A x_star"""
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    d = eigenvalues.shape[0]
    rng = np.random.default_rng(seed)
    x_star = rng.standard_normal(d) if x_star is None else np.asarray(x_star, dtype=np.float64)
    if rotate:
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        A = (Q * eigenvalues) @ Q.T
        A = 0.5 * (A + A.T)
    else:
        A = eigenvalues
    b = A * x_star if A.ndim == 1 else A @ x_star
    return QuadraticObjective(A, b, x_star=x_star)


def synthetic_quadratic(d: int, kappa: float, seed: int = 0, rotate: bool = False) -> QuadraticObjective:
    """Eigenvalues log-spaced in [1, kappa]"""
    if d < 1 or kappa < 1.0:
        raise UsageError(f"synthetic quadratic needs d >= 1 and kappa >= 1 (got d={d}, kappa={kappa})")
    if d == 1:
        eigenvalues = np.array([1.0])
    else:
        eigenvalues = np.logspace(0.0, np.log10(kappa), d)
    return quadratic_from_spectrum(eigenvalues, rotate=rotate, seed=seed)


def synthetic_logistic(n: int, d: int, lam: float, seed: int = 0, label_noise: float = 0.1) -> LogisticObjective:
    """Gaussian features, labels from a planted separator with flipped-label noise"""
    if n < 1 or d < 1:
        raise UsageError(f"synthetic logistic needs n >= 1 and d >= 1 (got n={n}, d={d})")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    w_true = rng.standard_normal(d)
    y = np.where(X @ w_true >= 0.0, 1.0, -1.0)
    flip = rng.random(n) < label_noise
    y[flip] = -y[flip]
    return LogisticObjective(X, y, lam)


def _parse_fields(body: str) -> Dict[str, str]:
    fields = {}
    for item in filter(None, (part.strip() for part in body.split(","))):
        if "=" not in item:
            raise UsageError(f"synthetic spec field {item!r} is not key=value")
        key, value = item.split("=", 1)
        fields[key.strip().lower()] = value.strip()
    return fields


def parse_synthetic_spec(spec: str, default_seed: int = 0) -> ObjectiveProblem:
    """
    Build a synthetic objective from a CLI spec

    Examples:
        quad:d=10,kappa=100
        quad:d=5,kappa=1e3,rotate=1,seed=7
        logit:n=200,d=5,lam=0.01
    """
    kind, _, body = spec.partition(":")
    fields = _parse_fields(body)
    try:
        seed = int(fields.pop("seed", default_seed))
        if kind == "quad":
            d = int(fields.pop("d", "10"))
            kappa = float(fields.pop("kappa", "100"))
            rotate = fields.pop("rotate", "0").lower() in ("1", "true", "yes")
            obj: ObjectiveProblem = synthetic_quadratic(d, kappa, seed=seed, rotate=rotate)
        elif kind == "logit":
            n = int(fields.pop("n", "200"))
            d = int(fields.pop("d", "5"))
            lam = float(fields.pop("lam", "0.01"))
            obj = synthetic_logistic(n, d, lam, seed=seed)
        else:
            raise UsageError(f"unknown synthetic problem kind {kind!r} (expected quad or logit)")
    except ValueError as e:
        if isinstance(e, UsageError):
            raise
        raise UsageError(f"invalid synthetic spec {spec!r}: {e}") from e
    if fields:
        raise UsageError(f"unknown synthetic spec fields: {', '.join(sorted(fields))}")
    return obj
