"""
Full-resolution trajectory capture for the theory checks
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from numerics import DenseVector, DiagMatrix

FULL_SNAPSHOT_MAX_DIM = 1024
COMPRESSED_PROBES = 16


@dataclass
class VerifyTrace:
    """
    Every iterate of one run. Index conventions:

        xs[k]        x_k (PHB) or x^k (PN), k = 0..K
        Vs[k]        V_{k-1} (PHB), so Vs[0] = V_{-1} = 0
        x_fs, x_gs   x_f^k, x_g^k (PN)
        dhats[k]     D_hat_{k-1}, so dhats[0] = D_hat_{-1}
        f_values[k]  f at the recorded output point (x_k or x_f^k)

    Above FULL_SNAPSHOT_MAX_DIM the D_hat snapshots are replaced by their extrema
    and by induced norms of a fixed probe set.
    """

    method: str
    dim: int
    gamma: float
    beta1: float = 0.0
    xi: Optional[float] = None
    theta: Optional[float] = None
    rule_label: str = "identity"
    beta2s: List[Optional[float]] = field(default_factory=list)
    xs: List[DenseVector] = field(default_factory=list)
    Vs: List[DenseVector] = field(default_factory=list)
    x_fs: List[DenseVector] = field(default_factory=list)
    x_gs: List[DenseVector] = field(default_factory=list)
    dhats: List[DiagMatrix] = field(default_factory=list)
    dhat_mins: List[float] = field(default_factory=list)
    dhat_maxs: List[float] = field(default_factory=list)
    probe_norms: List[DenseVector] = field(default_factory=list)
    f_values: List[float] = field(default_factory=list)
    grad_sq_norms: List[float] = field(default_factory=list)
    e_observed: float = 1.0
    gamma_observed: float = 1.0
    probes: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.compressed and self.probes is None:
            rng = np.random.default_rng(0)
            self.probes = rng.standard_normal((COMPRESSED_PROBES, self.dim))

    @property
    def compressed(self) -> bool:
        return self.dim > FULL_SNAPSHOT_MAX_DIM

    @property
    def iterations(self) -> int:
        return max(len(self.xs) - 1, 0)

    def add_dhat(self, D_hat: DiagMatrix) -> None:
        self.dhat_mins.append(D_hat.min())
        self.dhat_maxs.append(D_hat.max())
        if self.compressed:
            self.probe_norms.append((self.probes * self.probes) @ D_hat.diag)
        else:
            self.dhats.append(D_hat)

    def dhat(self, k: int) -> DiagMatrix:
        """D_hat_k for k >= -1"""
        return self.dhats[k + 1]

    def virtual_points(self) -> List[DenseVector]:
        """x_tilde_k = x_k - beta1 gamma / (1 - beta1) V_{k-1} (PHB)"""
        c = self.beta1 * self.gamma / (1.0 - self.beta1)
        return [x - c * V for x, V in zip(self.xs, self.Vs)]
