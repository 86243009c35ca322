"""
LibSVM ingestion and train/test splitting
"""

from .libsvm import Dataset, dump_libsvm, load_dataset, normalize_max_abs, parse_libsvm, split, split_indices

__all__ = [
    'Dataset',
    'dump_libsvm',
    'load_dataset',
    'normalize_max_abs',
    'parse_libsvm',
    'split',
    'split_indices',
]
