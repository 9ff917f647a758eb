import itertools
from collections import deque

import numpy as np
import pytest

from edgeclust.core import FeatureSet, SparseGraph
from edgeclust.errors import GraphNotSymmetric, LengthMismatch, SelfLoopPresent
from edgeclust.gcn import init_model
from edgeclust.inference import (
    AGGREGATIONS,
    aggregate,
    InferConfig,
    cluster,
    cluster_graph,
    connected_components,
    node_intimacy,
    parse_graph,
    refine_graph,
    run_inference,
)
from edgeclust.knn import KnnConfig, build_knn_graph

from conftest import random_undirected


def _graph(n, edges):
    if not edges:
        return SparseGraph.from_undirected(n, [], [])
    src, dst = zip(*edges)
    return SparseGraph.from_undirected(n, src, dst)


def _ni_at(graph, u, v, agg):
    ni = node_intimacy(graph, agg)
    i = np.flatnonzero((ni.src == min(u, v)) & (ni.dst == max(u, v)))[0]
    return ni.values[i], ni.common[i]


def _oracle_ni(n, edges, agg):
    nbrs = [set() for _ in range(n)]
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    out = {}
    for u, v in edges:
        k = len(nbrs[u] & nbrs[v])
        n1, n2 = len(nbrs[u]), len(nbrs[v])
        out[(min(u, v), max(u, v))] = {
            "max": max(k / n1, k / n2),
            "mean": (k / n1 + k / n2) / 2,
            "min": min(k / n1, k / n2),
            "jaccard": k / (n1 + n2 - k),
        }[agg]
    return out


def _bfs_components(n, edges):
    nbrs = [[] for _ in range(n)]
    for u, v in edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    labels = [-1] * n
    nxt = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        labels[s] = nxt
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if labels[v] < 0:
                    labels[v] = nxt
                    queue.append(v)
        nxt += 1
    return labels


@pytest.mark.parametrize("agg", ["max", "mean", "min"])
def test_triangle(backend, agg):
    assert _ni_at(_graph(3, [(0, 1), (1, 2), (0, 2)]), 1, 2, agg) == (0.5, 1)


def test_triangle_jaccard(backend):
    value, _ = _ni_at(_graph(3, [(0, 1), (1, 2), (0, 2)]), 1, 2, "jaccard")
    assert value == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("agg", AGGREGATIONS)
def test_isolated_pair_is_zero(backend, agg):
    assert _ni_at(_graph(2, [(0, 1)]), 0, 1, agg) == (0.0, 0)


def test_complete_graph(backend):
    g = _graph(5, list(itertools.combinations(range(5), 2)))
    ni = node_intimacy(g)
    assert np.all(ni.common == 3) and np.all(ni.values == 0.75)


def test_hub_versus_leaf_formula():
    # deg(u)=20, deg(v)=3, k=3: the intimacy is high while Jaccard stays low
    one = np.array([3])
    assert aggregate(one, np.array([20]), np.array([3]), "max")[0] == 1.0
    assert aggregate(one, np.array([20]), np.array([3]), "jaccard")[0] == pytest.approx(0.15, abs=1e-15)


def test_hub_versus_leaf_graph(backend):
    # on an actual edge v's degree counts u too, so take deg(v)=4 with 3 shared
    u, v = 0, 1
    shared = [2, 3, 4]
    edges = [(u, v)] + [(u, s) for s in shared] + [(v, s) for s in shared]
    edges += [(u, j) for j in range(5, 21)]
    g = _graph(21, edges)
    assert g.degrees()[u] == 20 and g.degrees()[v] == 4
    assert _ni_at(g, u, v, "max") == (0.75, 3)
    jac, _ = _ni_at(g, u, v, "jaccard")
    assert jac == pytest.approx(3 / 21, abs=1e-15)


@pytest.mark.parametrize("agg", AGGREGATIONS)
def test_matches_set_intersection(backend, rng, agg):
    for _ in range(10):
        n = int(rng.integers(2, 201))
        src, dst = random_undirected(rng, n, float(rng.uniform(0.01, 0.2)))
        g = SparseGraph.from_undirected(n, src, dst)
        ni = node_intimacy(g, agg)
        oracle = _oracle_ni(n, list(zip(src.tolist(), dst.tolist())), agg)
        assert len(ni) == len(oracle)
        for a, b, val in zip(ni.src.tolist(), ni.dst.tolist(), ni.values.tolist()):
            assert abs(val - oracle[(a, b)]) <= 1e-12
        assert np.all((ni.values >= 0) & (ni.values <= 1))


def test_weights_are_ignored(rng):
    src, dst = random_undirected(rng, 60, 0.1)
    plain = SparseGraph.from_undirected(60, src, dst)
    weighted = SparseGraph.from_undirected(60, src, dst, rng.uniform(-1, 1, len(src)))
    np.testing.assert_array_equal(node_intimacy(plain).values, node_intimacy(weighted).values)


def test_rejects_bad_graphs():
    directed = SparseGraph.from_edges(3, [0, 1], [1, 2])
    with pytest.raises(GraphNotSymmetric):
        node_intimacy(directed)
    loop = SparseGraph(2, np.array([0, 2, 3]), np.array([0, 1, 0]), symmetric=True)
    with pytest.raises(SelfLoopPresent):
        node_intimacy(loop)


def test_parse_examples(rng):
    g = _graph(4, [(0, 1), (1, 2), (2, 3)])
    assert parse_graph(g, np.ones(3), 0.7).structure_equal(g)
    cut = parse_graph(g, np.array([0.9, 0.65, 0.7]), 0.7)
    assert sorted(zip(*cut.undirected_edges()[:2])) == [(0, 1), (2, 3)]
    with pytest.raises(LengthMismatch):
        parse_graph(g, np.ones(2), 0.5)


def test_parse_and_refine_match_filter_oracle(rng):
    src, dst = random_undirected(rng, 120, 0.08)
    g = SparseGraph.from_undirected(120, src, dst)
    s, d, _ = g.undirected_edges()
    scores = rng.uniform(size=len(s))
    parsed = parse_graph(g, scores, 0.4)
    kept = [(a, b) for a, b, x in zip(s.tolist(), d.tolist(), scores) if x >= 0.4]
    assert sorted(zip(*[x.tolist() for x in parsed.undirected_edges()[:2]])) == kept
    parsed.check_symmetric()

    ni = node_intimacy(parsed)
    refined = refine_graph(parsed, ni, 0.3)
    oracle = _oracle_ni(120, kept, "max")
    expect = sorted(e for e in kept if oracle[e] >= 0.3)
    assert sorted(zip(*[x.tolist() for x in refined.undirected_edges()[:2]])) == expect


def test_refine_extremes(rng):
    src, dst = random_undirected(rng, 50, 0.2)
    g = SparseGraph.from_undirected(50, src, dst)
    ni = node_intimacy(g)
    assert refine_graph(g, ni, 0.0).structure_equal(g)
    assert refine_graph(g, ni, 1.0 + 1e-9).nnz == 0


def test_component_examples(backend):
    assert connected_components(_graph(4, [])).labels.tolist() == [0, 1, 2, 3]
    assert connected_components(_graph(4, [(0, 1), (1, 2)])).labels.tolist() == [0, 0, 0, 1]
    assert connected_components(_graph(4, [(1, 3)])).labels.tolist() == [0, 1, 2, 1]


def test_components_match_bfs(backend, rng):
    for _ in range(20):
        n = int(rng.integers(1, 150))
        src, dst = random_undirected(rng, n, float(rng.uniform(0.0, 0.05)))
        g = SparseGraph.from_undirected(n, src, dst)
        expect = _bfs_components(n, list(zip(src.tolist(), dst.tolist())))
        assert connected_components(g).labels.tolist() == expect


def _refines(fine, coarse):
    """Every block of ``fine`` lies inside a single block of ``coarse``."""
    owner = {}
    for a, b in zip(fine.labels.tolist(), coarse.labels.tolist()):
        if owner.setdefault(a, b) != b:
            return False
    return True


def test_raising_thresholds_only_splits(rng):
    src, dst = random_undirected(rng, 150, 0.05)
    g = SparseGraph.from_undirected(150, src, dst)
    scores = rng.uniform(size=len(src))
    prev = None
    for tau1 in (0.0, 0.2, 0.4, 0.6, 0.8):
        for tau2 in (0.0, 0.1, 0.2, 0.3, 0.5):
            part = cluster_graph(g, InferConfig(tau1=tau1, tau2=tau2), scores).partition
            base = cluster_graph(g, InferConfig(tau1=tau1, tau2=0.0), scores).partition
            assert _refines(part, base)
        if prev is not None:
            assert _refines(base, prev)
        prev = base


def _data(rng, n=40, d=8):
    x = rng.standard_normal((n, d))
    return FeatureSet.from_array(x)


def test_identical_vectors_form_one_cluster(rng):
    fs = FeatureSet.from_array(np.tile(rng.standard_normal(8), (30, 1)))
    model = init_model(8, (16, 8), 8, seed=0)
    # a model that accepts the identical pair
    model.b2[:] = [0.0, 5.0]
    res = run_inference(fs, model, KnnConfig(k=5), InferConfig())
    assert np.allclose(res.scores, res.scores[0])
    assert res.partition.num_clusters == 1


def test_skipping_both_stages_gives_knn_components(rng):
    fs = _data(rng)
    cfg = KnnConfig(k=2)
    part = cluster(fs, init_model(8, (4,), 4), cfg,
                   InferConfig(skip_parsing=True, skip_refinement=True))
    expect = connected_components(build_knn_graph(fs, cfg))
    assert part.labels.tolist() == expect.labels.tolist()


def test_pipeline_is_deterministic(rng):
    fs = _data(rng, 80)
    model = init_model(8, (16, 8), 8, seed=3)
    model.b2[:] = [0.0, 1.0]
    runs = [cluster(fs, model, KnnConfig(k=6), InferConfig(tau1=0.5, tau2=0.3)) for _ in range(2)]
    assert runs[0].labels.tolist() == runs[1].labels.tolist()


def test_config_validation():
    with pytest.raises(ValueError):
        InferConfig(aggregation="median")
    with pytest.raises(ValueError):
        InferConfig(tau1=1.5)
