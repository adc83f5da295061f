"""Seeded synthetic benchmark: Gaussian class clusters with optional
multi-label overlap. Items are emitted class-sorted, so with zero overlap
the similarity matrix is block diagonal. Train and query splits come from
the same distribution but are separate draws."""

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class SynthSpec:
    classes: int
    dim: int
    per_class: int
    queries_per_class: int
    cluster_spread: float = 0.5
    center_scale: float = 1.0
    multilabel_overlap: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if self.cluster_spread <= 0:
            raise ValueError("cluster_spread must be positive")
        if not 0 <= self.multilabel_overlap <= 1:
            raise ValueError("multilabel_overlap must lie in [0, 1]")


def _make_split(rng, centers, spec: SynthSpec, per_class: int) -> Dataset:
    feats, labels = [], []
    for cls in range(spec.classes):
        pts = centers[cls] + rng.normal(0.0, spec.cluster_spread,
                                        size=(per_class, spec.dim))
        lab = np.zeros((per_class, spec.classes), dtype=np.int8)
        lab[:, cls] = 1
        if spec.multilabel_overlap > 0:
            gains = rng.random(per_class) < spec.multilabel_overlap
            extra = rng.integers(0, spec.classes - 1, size=per_class)
            extra = np.where(extra >= cls, extra + 1, extra)  # never the own class
            for i in np.flatnonzero(gains):
                lab[i, extra[i]] = 1
        feats.append(pts)
        labels.append(lab)
    return Dataset(features=np.vstack(feats), labels=np.vstack(labels))


def generate(spec: SynthSpec):
    """Return (train, query) datasets, deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(-spec.center_scale, spec.center_scale,
                          size=(spec.classes, spec.dim))
    train = _make_split(rng, centers, spec, spec.per_class)
    query = _make_split(rng, centers, spec, spec.queries_per_class)
    return train, query
