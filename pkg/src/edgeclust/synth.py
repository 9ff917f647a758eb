"""Synthetic clustered embeddings and random graphs for tests and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FeatureSet, Partition, SparseGraph


@dataclass(frozen=True)
class SynthConfig:
    num_classes: int = 50
    points_min: int = 30
    points_max: int = 60
    dim: int = 64
    noise_scale: float = 0.1
    overlap_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not 1 <= self.points_min <= self.points_max:
            raise ValueError("need 1 <= points_min <= points_max")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if not 0.0 <= self.overlap_scale < 1.0:
            raise ValueError("overlap_scale must lie in [0, 1)")


def _unit_rows(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def generate(cfg):
    """Class centers on the sphere, pulled toward a shared direction by
    ``overlap_scale``; members are center + ``noise_scale`` * N(0, I),
    renormalized. Rows are grouped by class."""
    rng = np.random.default_rng(cfg.seed)
    centers = _unit_rows(rng.standard_normal((cfg.num_classes, cfg.dim)))
    common = _unit_rows(rng.standard_normal((1, cfg.dim)))
    centers = _unit_rows((1.0 - cfg.overlap_scale) * centers + cfg.overlap_scale * common)
    sizes = rng.integers(cfg.points_min, cfg.points_max + 1, size=cfg.num_classes)
    labels = np.repeat(np.arange(cfg.num_classes), sizes)
    x = centers[labels] + cfg.noise_scale * rng.standard_normal((len(labels), cfg.dim))
    # normalize in float64, then store at feature precision
    fs = FeatureSet.from_array(_unit_rows(x), normalize=True)
    return fs, Partition(labels)


def split_classes(fs, gt, frac=0.5, seed=0):
    """Split by class: a random ``frac`` of the classes goes to the first part."""
    rng = np.random.default_rng(seed)
    classes = np.unique(gt.labels)
    chosen = rng.permutation(classes)[: int(round(frac * len(classes)))]
    mask = np.isin(gt.labels, chosen)
    parts = []
    for m in (mask, ~mask):
        rows = np.flatnonzero(m)
        parts.append((fs.subset(rows), Partition(gt.labels[rows])))
    return parts


def random_graph(n, avg_degree, seed=0):
    """Erdős–Rényi-style binary symmetric graph with the given mean degree."""
    rng = np.random.default_rng(seed)
    m = int(round(n * avg_degree / 2))
    u = rng.integers(0, n, size=m)
    v = rng.integers(0, n, size=m)
    ok = u != v
    lo, hi = np.minimum(u[ok], v[ok]), np.maximum(u[ok], v[ok])
    key = np.unique(lo * n + hi)
    return SparseGraph.from_undirected(n, key // n, key % n)
