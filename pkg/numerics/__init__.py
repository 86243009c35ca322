"""
Dense vector and diagonal-matrix primitives used by every optimizer and check.
"""

from .linalg import (
    DenseVector,
    DiagMatrix,
    as_vector,
    hadamard,
    induced_inner,
    induced_norm_sq,
    inner,
    inv_induced_norm_sq,
    norm_sq,
)

__all__ = [
    'DenseVector',
    'DiagMatrix',
    'as_vector',
    'hadamard',
    'induced_inner',
    'induced_norm_sq',
    'inner',
    'inv_induced_norm_sq',
    'norm_sq',
]
