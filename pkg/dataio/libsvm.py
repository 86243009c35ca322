"""
LibSVM text format: "label idx:val idx:val ...", 1-based strictly increasing indices
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, List, Optional, Tuple, Union

import numpy as np

from infra.errors import EmptyDatasetError, ParseError, RejectedInputError

logger = logging.getLogger(__name__)

_LABELS = {1.0: 1.0, -1.0: -1.0, 0.0: -1.0}


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.float64)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise RejectedInputError(
                f"features {features.shape} and labels {labels.shape} do not describe n samples"
            )
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', labels)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def take(self, rows: np.ndarray) -> Dataset:
        return Dataset(self.features[rows], self.labels[rows])


def _parse_line(text: str, line_number: int) -> Tuple[float, List[Tuple[int, float]]]:
    tokens = text.split()
    try:
        raw_label = float(tokens[0])
    except ValueError:
        raise ParseError(line_number, f"label {tokens[0]!r} is not a number") from None
    if raw_label not in _LABELS:
        raise ParseError(line_number, f"label {tokens[0]!r} is not one of -1, +1, 0, 1")

    entries: List[Tuple[int, float]] = []
    last_index = 0
    for token in tokens[1:]:
        idx_text, sep, val_text = token.partition(":")
        if not sep:
            raise ParseError(line_number, f"token {token!r} is not idx:val")
        try:
            index = int(idx_text)
            value = float(val_text)
        except ValueError:
            raise ParseError(line_number, f"non-numeric token {token!r}") from None
        if index <= 0:
            raise ParseError(line_number, f"feature index {index} must be >= 1")
        if index <= last_index:
            raise ParseError(line_number, f"feature index {index} does not increase (previous {last_index})")
        if not math.isfinite(value):
            raise ParseError(line_number, f"non-finite value in {token!r}")
        entries.append((index, value))
        last_index = index
    return _LABELS[raw_label], entries


def parse_libsvm(source: Union[bytes, str, IO], n_features: Optional[int] = None) -> Dataset:
    """
    Parse LibSVM text into a dense dataset

    Args:
        source: bytes, text, or a binary/text stream
        n_features: dimension override; may only raise d above the largest index seen

    Raises:
        ParseError: malformed line (carries the 1-based line number)
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)

    labels: List[float] = []
    rows: List[List[Tuple[int, float]]] = []
    max_index = 0
    for line_number, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        label, entries = _parse_line(text, line_number)
        labels.append(label)
        rows.append(entries)
        if entries:
            max_index = max(max_index, entries[-1][0])

    d = max_index
    if n_features is not None:
        if n_features < max_index:
            raise RejectedInputError(f"n_features={n_features} is below the largest feature index {max_index}")
        d = n_features

    features = np.zeros((len(rows), d))
    for i, entries in enumerate(rows):
        for index, value in entries:
            features[i, index - 1] = value
    logger.debug(f"Parsed LibSVM input: n={len(rows)}, d={d}")
    return Dataset(features, np.array(labels, dtype=np.float64))


def dump_libsvm(dataset: Dataset) -> str:
    """Inverse of parse_libsvm: "+1"/"-1" labels, zero features omitted, repr values"""
    lines = []
    for row, label in zip(dataset.features, dataset.labels):
        parts = ["+1" if label > 0 else "-1"]
        parts.extend(f"{j + 1}:{float(v)!r}" for j, v in enumerate(row) if v != 0.0)
        lines.append(" ".join(parts))
    return "".join(line + "\n" for line in lines)


def load_dataset(path: Union[str, Path], n_features: Optional[int] = None) -> Dataset:
    with open(path, "rb") as handle:
        dataset = parse_libsvm(handle, n_features=n_features)
    logger.info(f"Loaded {path}: n={dataset.n}, d={dataset.d}")
    return dataset


def split_indices(n: int, train_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle of range(n), cut after floor(n * train_fraction)"""
    if not 0.0 < train_fraction < 1.0:
        raise RejectedInputError(f"train fraction must lie in (0, 1), got {train_fraction}")
    if n == 0:
        raise EmptyDatasetError("cannot split an empty dataset")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(n * train_fraction))
    return perm[:n_train], perm[n_train:]


def split(dataset: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(dataset.n, train_fraction, seed)
    return dataset.take(train_idx), dataset.take(test_idx)


def normalize_max_abs(dataset: Dataset) -> Dataset:
    """Scale every column by its largest absolute value; all-zero columns stay as they are"""
    scale = np.abs(dataset.features).max(axis=0) if dataset.n else np.ones(dataset.d)
    scale = np.where(scale > 0.0, scale, 1.0)
    return Dataset(dataset.features / scale, dataset.labels)
