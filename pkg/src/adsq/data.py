"""Datasets, pairwise similarity, and the two on-disk matrix formats.

Feature files (magic ``ADSQF001``) store ``n x dim`` float32 matrices;
label files (magic ``ADSQL001``) store ``n x classes`` byte matrices with
entries in {0, 1}. Both headers are little-endian u32 pairs after the
8-byte magic. Training math is double precision throughout, so features
are widened to float64 on load.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError

FEATURE_MAGIC = b"ADSQF001"
LABEL_MAGIC = b"ADSQL001"


def _freeze(arr):
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus aligned multi-hot label matrix."""

    features: np.ndarray  # n x dim, float64
    labels: np.ndarray    # n x classes, int8 in {0,1}

    def __post_init__(self):
        object.__setattr__(self, "features", _freeze(np.asarray(self.features, dtype=np.float64)))
        object.__setattr__(self, "labels", _freeze(np.asarray(self.labels, dtype=np.int8)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric pairwise similarity with unit diagonal.

    ``binary`` holds {0,1}; ``signed`` is the 2s-1 view in {-1,+1}.
    The likelihood losses consume the binary view; the asymmetric
    inner-product term and the discrete code solver consume the signed
    view, so dissimilar pairs are pushed toward opposite codes.
    """

    binary: np.ndarray  # n x n, int8

    def __post_init__(self):
        b = np.asarray(self.binary, dtype=np.int8)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"similarity matrix must be square, got {b.shape}")
        object.__setattr__(self, "binary", _freeze(b))

    @property
    def n(self) -> int:
        return self.binary.shape[0]

    @property
    def signed(self) -> np.ndarray:
        return 2 * self.binary.astype(np.int8) - 1

    def submatrix(self, idx):
        """Binary and signed float64 views restricted to the given rows/cols."""
        sub = self.binary[np.ix_(idx, idx)].astype(np.float64)
        return sub, 2.0 * sub - 1.0


def build_similarity(labels) -> SimilarityMatrix:
    """Two items are similar iff they share at least one positive label."""
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ValueError(f"labels must be 2-D, got shape {lab.shape}")
    shared = lab.astype(np.int64) @ lab.astype(np.int64).T
    return SimilarityMatrix(binary=(shared > 0).astype(np.int8))


def write_features(path, features):
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("refusing to write non-finite feature values")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", x.shape[0], x.shape[1]))
        fh.write(np.ascontiguousarray(x, dtype="<f4").tobytes())


def load_features(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:8] != FEATURE_MAGIC:
        raise FormatError(f"{path}: missing or malformed feature-file magic")
    n, dim = struct.unpack_from("<II", blob, 8)
    expected = 16 + 4 * n * dim
    if len(blob) != expected:
        raise FormatError(
            f"{path}: truncated or oversized payload (header says {n}x{dim}, "
            f"expected {expected} bytes, file has {len(blob)})")
    x = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=16).reshape(n, dim)
    out = x.astype(np.float64)
    if not np.all(np.isfinite(out)):
        raise DataError(f"{path}: feature payload contains NaN or Inf")
    return out


def write_labels(path, labels):
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ValueError(f"label matrix must be 2-D, got shape {lab.shape}")
    if not np.isin(lab, (0, 1)).all():
        raise DataError("label entries must be 0 or 1")
    with open(path, "wb") as fh:
        fh.write(LABEL_MAGIC)
        fh.write(struct.pack("<II", lab.shape[0], lab.shape[1]))
        fh.write(np.ascontiguousarray(lab, dtype=np.uint8).tobytes())


def load_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:8] != LABEL_MAGIC:
        raise FormatError(f"{path}: missing or malformed label-file magic")
    n, c = struct.unpack_from("<II", blob, 8)
    expected = 16 + n * c
    if len(blob) != expected:
        raise FormatError(
            f"{path}: truncated or oversized payload (header says {n}x{c}, "
            f"expected {expected} bytes, file has {len(blob)})")
    lab = np.frombuffer(blob, dtype=np.uint8, count=n * c, offset=16).reshape(n, c)
    if not np.isin(lab, (0, 1)).all():
        raise FormatError(f"{path}: label payload contains values outside {{0, 1}}")
    if np.any(lab.sum(axis=1) == 0):
        raise DataError(f"{path}: label matrix has an all-zero row")
    return lab.astype(np.int8)


def load_dataset(feature_path, label_path) -> Dataset:
    features = load_features(feature_path)
    labels = load_labels(label_path)
    if features.shape[0] != labels.shape[0]:
        raise DataError(
            f"feature/label row mismatch: {features.shape[0]} vs {labels.shape[0]}")
    return Dataset(features=features, labels=labels)


def validate_dataset(dataset: Dataset, hp=None) -> list:
    """Collect every invariant violation; never aborts on the first."""
    report = []
    n = dataset.n
    if n < 2:
        report.append(f"n >= 2 required, got n={n}")
    if dataset.labels.shape[0] != n:
        report.append("feature and label row counts differ")
    if not np.all(np.isfinite(dataset.features)):
        report.append("features contain NaN or Inf")
    if not np.isin(dataset.labels, (0, 1)).all():
        report.append("labels contain entries outside {0, 1}")
    elif np.any(dataset.labels.sum(axis=1) == 0):
        rows = np.flatnonzero(dataset.labels.sum(axis=1) == 0)
        report.append(f"all-zero label rows at indices {rows.tolist()[:10]}")
    if hp is not None and n < hp.batch_size:
        report.append(f"n >= batch_size required, got n={n} < batch_size={hp.batch_size}")
    return report
