"""Exact cosine KNN affinity graph."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import FeatureSet, SparseGraph, symmetrize_union
from .errors import KTooLarge, ShapeMismatch

# rows of the similarity matrix materialized at once
BLOCK_ROWS = 1024


@dataclass(frozen=True)
class KnnConfig:
    k: int = 80
    symmetrize: bool = True
    num_threads: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.num_threads < 1:
            raise ValueError("num_threads must be >= 1")


def _as_features(fs):
    return fs.data if isinstance(fs, FeatureSet) else np.asarray(fs)


def cosine_topk(query, fs, k, self_index=None):
    """``k`` most similar rows of ``fs`` to ``query`` as ``[(index, sim), ...]``.

    Ordered by similarity descending, lower index first on ties. Pass
    ``self_index`` when the query is row ``self_index`` of ``fs`` to skip it;
    ``k`` is clamped to the number of eligible rows.
    """
    x = _as_features(fs).astype(np.float64)
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != x.shape[1]:
        raise ShapeMismatch("query width differs from feature width")
    avail = x.shape[0] - (self_index is not None)
    k = min(k, avail)
    if k <= 0:
        return []
    sims = (x @ q)[None, :]
    offset = 0 if self_index is None else int(self_index)
    idx, val = kernels.topk_select(sims, k, offset, self_index is not None)
    return [(int(i), float(v)) for i, v in zip(idx[0], val[0])]


def _knn_block(x, start, stop, k):
    sims = x[start:stop] @ x.T
    return kernels.topk_select(sims, k, start, True)


def knn_arrays(fs, k, num_threads=1):
    """``(n, k)`` neighbor indices and similarities, best first."""
    x = _as_features(fs).astype(np.float64)
    n = x.shape[0]
    if k >= n:
        raise KTooLarge(f"k={k} must be smaller than n={n}")
    starts = list(range(0, n, BLOCK_ROWS))
    jobs = [(s, min(s + BLOCK_ROWS, n)) for s in starts]
    if num_threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=num_threads) as pool:
            parts = list(pool.map(lambda j: _knn_block(x, j[0], j[1], k), jobs))
    else:
        parts = [_knn_block(x, s, e, k) for s, e in jobs]
    idx = np.concatenate([p[0] for p in parts])
    val = np.concatenate([p[1] for p in parts])
    return idx, val


def pair_similarity(x, src, dst):
    """Cosine similarity per pair, evaluated with the lower index first so that
    (u, v) and (v, u) give bit-identical values."""
    x = np.asarray(x, dtype=np.float64)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    return np.einsum("ij,ij->i", x[lo], x[hi])


def build_knn_graph(fs, cfg):
    """KNN graph with cosine-similarity weights.

    Every node points at its ``cfg.k`` most similar other nodes (ties to the
    lower index). With ``cfg.symmetrize`` the union A ∪ Aᵀ is returned.
    """
    if cfg.k >= fs.n:
        raise KTooLarge(f"k={cfg.k} must be smaller than n={fs.n}")
    idx, _ = knn_arrays(fs, cfg.k, cfg.num_threads)
    n = fs.n
    src = np.repeat(np.arange(n, dtype=np.int64), cfg.k)
    dst = idx.reshape(-1)
    w = np.clip(pair_similarity(fs.data, src, dst), -1.0, 1.0)
    graph = SparseGraph.from_edges(n, src, dst, w, symmetric=False)
    if cfg.symmetrize:
        graph = symmetrize_union(graph)
    return graph
