"""Dataset containers, feature rescaling, and the sparse text data formats.

The on-disk format is the usual sparse text format: one instance per line,
``label index:value ...`` with 1-based feature indices and labels that must
parse to -1 or +1.  Companion files (privileged features, per-instance
weights, confidence scores) are aligned with the data file line by line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "PrivilegedSet",
    "AffineMap",
    "rescale_features",
    "load_sparse",
    "save_sparse",
    "load_privileged",
    "load_sparse_features",
    "load_weights",
    "save_weights",
    "load_confidence",
    "save_confidence",
]


def _frozen_array(values, dtype=float) -> np.ndarray:
    a = np.array(values, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Labeled instances: an (n, d) feature matrix and labels in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray
    ids: np.ndarray

    def __init__(self, X, y, ids=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} instances but {y.shape[0]} labels")
        if X.shape[0] < 1:
            raise ValueError("dataset must contain at least one instance")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite feature values")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be exactly -1 or +1")
        if ids is None:
            ids = np.arange(X.shape[0])
        ids = np.asarray(ids)
        if ids.shape[0] != X.shape[0]:
            raise ValueError("ids must align with instances")
        object.__setattr__(self, "X", _frozen_array(X))
        object.__setattr__(self, "y", _frozen_array(y))
        object.__setattr__(self, "ids", _frozen_array(ids, dtype=ids.dtype))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(self.X[indices], self.y[indices], self.ids[indices])


@dataclass(frozen=True)
class PrivilegedSet:
    """Training-time-only features aligned row by row with a Dataset."""

    X: np.ndarray

    def __init__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite privileged feature values")
        object.__setattr__(self, "X", _frozen_array(X))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "PrivilegedSet":
        return PrivilegedSet(self.X[np.asarray(indices)])

    def check_aligned(self, data: Dataset) -> None:
        if self.n != data.n:
            raise ValueError(
                f"privileged set has {self.n} rows, dataset has {data.n}"
            )


@dataclass(frozen=True)
class AffineMap:
    """Per-feature map x -> (x - shift) * scale fitted on training data."""

    shift: np.ndarray
    scale: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (X - self.shift) * self.scale

    def apply_dataset(self, data: Dataset) -> Dataset:
        return Dataset(self.apply(data.X), data.y, data.ids)


def rescale_features(data: Dataset) -> tuple[Dataset, AffineMap]:
    """Min-max rescale every feature column into [0, 1].

    Returns the rescaled dataset together with the fitted affine map, so
    validation/test data can be transformed with the training map instead of
    being refit.  A constant column is mapped to 0.
    """
    lo = data.X.min(axis=0)
    hi = data.X.max(axis=0)
    span = hi - lo
    scale = np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 0.0)
    fmap = AffineMap(_frozen_array(lo), _frozen_array(scale))
    return fmap.apply_dataset(data), fmap


def load_sparse(path, n_features: int | None = None) -> Dataset:
    """Parse the sparse ``label index:value`` text format."""
    labels: list[float] = []
    rows: list[dict[int, float]] = []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            label = float(parts[0])
            if label not in (-1.0, 1.0):
                raise ValueError(f"{path}:{lineno}: label {parts[0]!r} is not +-1")
            entries: dict[int, float] = {}
            for item in parts[1:]:
                idx_s, _, val_s = item.partition(":")
                idx = int(idx_s)
                if idx < 1:
                    raise ValueError(f"{path}:{lineno}: indices are 1-based")
                entries[idx] = float(val_s)
                max_idx = max(max_idx, idx)
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise ValueError(f"{path}: empty data file")
    d = n_features if n_features is not None else max_idx
    X = np.zeros((len(rows), max(d, 1)))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            X[i, idx - 1] = val
    return Dataset(X, labels)


def save_sparse(path, X, labels=None) -> None:
    """Write features (and optional labels, else +1) in the sparse format."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if labels is None:
        labels = np.ones(X.shape[0])
    with open(path, "w") as fh:
        for row, label in zip(X, labels):
            items = [f"{int(label):+d}"]
            items += [f"{j + 1}:{v:.17g}" for j, v in enumerate(row) if v != 0.0]
            fh.write(" ".join(items) + "\n")


def load_privileged(path, data: Dataset) -> PrivilegedSet:
    """Load a privileged-feature companion file aligned with ``data``."""
    companion = load_sparse_features(path)
    priv = PrivilegedSet(companion)
    priv.check_aligned(data)
    return priv


def load_sparse_features(path) -> np.ndarray:
    """Parse a sparse companion file whose labels are ignored placeholders."""
    rows: list[dict[int, float]] = []
    max_idx = 1
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            entries: dict[int, float] = {}
            start = 1 if ":" not in parts[0] else 0
            for item in parts[start:]:
                idx_s, _, val_s = item.partition(":")
                idx = int(idx_s)
                entries[idx] = float(val_s)
                max_idx = max(max_idx, idx)
            rows.append(entries)
    X = np.zeros((len(rows), max_idx))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            X[i, idx - 1] = val
    return X


def load_weights(path, n: int | None = None) -> np.ndarray:
    """One nonnegative decimal per line."""
    values = _load_column(path)
    if np.any(values < 0):
        raise ValueError(f"{path}: weights must be nonnegative")
    _check_length(path, values, n)
    return values


def save_weights(path, c) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(c, dtype=float).ravel():
            fh.write(f"{v:.17g}\n")


def load_confidence(path, n: int | None = None) -> np.ndarray:
    """One decimal in [-1, 1] per line."""
    values = _load_column(path)
    if np.any(np.abs(values) > 1):
        raise ValueError(f"{path}: confidence scores must lie in [-1, 1]")
    _check_length(path, values, n)
    return values


save_confidence = save_weights


def _load_column(path) -> np.ndarray:
    with open(path) as fh:
        values = [float(line.strip()) for line in fh if line.strip()]
    return np.asarray(values, dtype=float)


def _check_length(path, values, n) -> None:
    if n is not None and len(values) != n:
        raise ValueError(f"{path}: expected {n} lines, found {len(values)}")
