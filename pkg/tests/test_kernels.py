"""Both kernel backends against direct oracles and each other."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgeclust import kernels
from edgeclust.core import SparseGraph

from conftest import random_undirected


def _graph(rng, n, p):
    src, dst = random_undirected(rng, n, p)
    return SparseGraph.from_undirected(n, src, dst)


def test_common_neighbors_match_sets(backend, rng):
    for _ in range(10):
        g = _graph(rng, int(rng.integers(2, 60)), float(rng.uniform(0.05, 0.6)))
        src, dst, _ = g.undirected_edges()
        nbrs = [set(g.indices[g.indptr[i] : g.indptr[i + 1]].tolist()) for i in range(g.n)]
        expected = [len(nbrs[a] & nbrs[b]) for a, b in zip(src, dst)]
        got = kernels.common_neighbor_counts(g.indptr, g.indices, src, dst)
        assert got.tolist() == expected


def test_common_neighbors_non_edges(backend):
    # path 0-1-2: pair (0, 2) is not an edge but shares neighbor 1
    g = SparseGraph.from_undirected(3, [0, 1], [1, 2])
    got = kernels.common_neighbor_counts(g.indptr, g.indices, [0, 0], [2, 1])
    assert got.tolist() == [1, 0]


def _bfs_labels(g):
    labels = -np.ones(g.n, dtype=np.int64)
    nxt = 0
    for s in range(g.n):
        if labels[s] >= 0:
            continue
        labels[s] = nxt
        stack = [s]
        while stack:
            u = stack.pop()
            for v in g.indices[g.indptr[u] : g.indptr[u + 1]]:
                if labels[v] < 0:
                    labels[v] = nxt
                    stack.append(v)
        nxt += 1
    return labels


def test_components_match_bfs(backend, rng):
    for _ in range(20):
        n = int(rng.integers(1, 80))
        g = _graph(rng, n, float(rng.uniform(0.0, 0.08)))
        got = kernels.component_labels(g.n, g.indptr, g.indices)
        assert got.tolist() == _bfs_labels(g).tolist()


def test_components_examples(backend):
    empty = SparseGraph(4, np.zeros(5, dtype=np.int64), np.zeros(0, dtype=np.int64))
    assert kernels.component_labels(4, empty.indptr, empty.indices).tolist() == [0, 1, 2, 3]
    path = SparseGraph.from_undirected(4, [0, 1], [1, 2])
    assert kernels.component_labels(4, path.indptr, path.indices).tolist() == [0, 0, 0, 1]


def _topk_oracle(row, k, skip):
    cand = [(-v, j) for j, v in enumerate(row) if j != skip]
    cand.sort()
    return [j for _, j in cand[:k]]


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(2, 30),
    st.integers(0, 2**32 - 1),
    st.booleans(),
)
def test_topk_matches_sort_with_ties(b, n, seed, exclude):
    rng = np.random.default_rng(seed)
    # coarse values force plenty of ties
    sims = rng.integers(-3, 4, size=(b, n)).astype(np.float64) / 3
    k = int(rng.integers(1, n - int(exclude) + 1))
    offset = int(rng.integers(0, max(n - b, 0) + 1))
    for name in kernels.available_backends():
        with kernels.using(name):
            idx, val = kernels.topk_select(sims, k, offset, exclude)
        for r in range(b):
            skip = offset + r if exclude else -1
            assert idx[r].tolist() == _topk_oracle(sims[r], k, skip)
            np.testing.assert_array_equal(val[r], sims[r, idx[r]])


def test_backend_switching():
    assert kernels.backend() in kernels.available_backends()
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")
    with kernels.using("python"):
        assert kernels.backend() == "python"


@pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")
def test_backends_agree_on_large_graph(rng):
    g = _graph(rng, 400, 0.05)
    src, dst, _ = g.undirected_edges()
    out = {}
    for name in ("cython", "python"):
        with kernels.using(name):
            out[name] = (
                kernels.common_neighbor_counts(g.indptr, g.indices, src, dst),
                kernels.component_labels(g.n, g.indptr, g.indices),
            )
    for a, b in zip(out["cython"], out["python"]):
        np.testing.assert_array_equal(a, b)


def _pairs_symmetric(n, src, dst, w=None):
    entries = {}
    for i, (u, v) in enumerate(zip(src, dst)):
        entries[(u, v)] = None if w is None else w[i]
    return all((v, u) in entries and entries[(v, u)] == x for (u, v), x in entries.items())


def test_is_symmetric_matches_pair_oracle(backend, rng):
    for _ in range(40):
        n = int(rng.integers(1, 40))
        src, dst = random_undirected(rng, n, 0.2)
        if rng.random() < 0.5:  # directed graph that may or may not be symmetric
            g = SparseGraph.from_edges(n, np.concatenate([src, dst[: len(dst) // 2]]),
                                       np.concatenate([dst, src[: len(src) // 2]]))
        else:
            g = SparseGraph.from_undirected(n, src, dst)
        u = g.row_ids().tolist()
        assert kernels.is_symmetric(g.indptr, g.indices) == _pairs_symmetric(n, u, g.indices.tolist())


def test_is_symmetric_checks_weights(backend):
    g = SparseGraph.from_undirected(3, [0, 1], [1, 2], [0.5, 0.25])
    assert kernels.is_symmetric(g.indptr, g.indices, g.weights)
    w = g.weights.copy()
    w[0] += 1e-9
    assert not kernels.is_symmetric(g.indptr, g.indices, w)
    assert kernels.is_symmetric(g.indptr, g.indices)
