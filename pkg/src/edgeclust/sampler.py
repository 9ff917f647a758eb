"""Structure-preserved subgraph sampling.

One sample: draw seed clusters, add each seed's nearest clusters (by center
cosine similarity), keep a random subset of those clusters, keep a random
fraction of their nodes, and rebuild the KNN graph over what is left. All
draws come from one generator, in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import FeatureSet, Partition, SparseGraph, check_lengths
from .errors import NotEnoughClusters
from .gcn import EdgeBatch
from .knn import build_knn_graph, cosine_topk


@dataclass
class ClusterIndex:
    """Members and unit-norm mean center of every ground-truth cluster.

    Cluster ``c`` is the ``c``-th distinct label in ascending order.
    """

    members: list
    centers: np.ndarray
    cluster_ids: np.ndarray

    @property
    def num_clusters(self):
        return len(self.members)


def build_cluster_index(fs, gt):
    check_lengths(fs.data, gt.labels, "features and labels")
    ids, inverse = np.unique(gt.labels, return_inverse=True)
    inverse = inverse.ravel()
    order = np.argsort(inverse, kind="stable")
    bounds = np.cumsum(np.bincount(inverse, minlength=len(ids)))[:-1]
    members = np.split(order, bounds)
    x = fs.data.astype(np.float64)
    sums = np.zeros((len(ids), x.shape[1]))
    np.add.at(sums, inverse, x)
    norms = np.linalg.norm(sums, axis=1, keepdims=True)
    centers = sums / np.where(norms > 0, norms, 1.0)
    return ClusterIndex(members, centers, ids)


@dataclass
class SampledSubgraph:
    node_ids: np.ndarray
    features: FeatureSet
    labels: Partition
    graph: SparseGraph

    @property
    def n(self):
        return len(self.node_ids)


def _subgraph_knn(sub_fs, knn_cfg):
    n = sub_fs.n
    if n < 2:
        return SparseGraph(n, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64),
                           np.zeros(0), True)
    # small samples cannot support the configured k
    cfg = replace(knn_cfg, k=min(knn_cfg.k, n - 1))
    return build_knn_graph(sub_fs, cfg)


def select_clusters(idx, spec, rng):
    """Seed + neighbor clusters after cluster-level randomness (sorted ids)."""
    c = idx.num_clusters
    if c < spec.m:
        raise NotEnoughClusters(f"need {spec.m} seed clusters, have {c}")
    seeds = rng.choice(c, size=spec.m, replace=False)
    chosen = set()
    for s in seeds:
        chosen.add(int(s))
        for j, _ in cosine_topk(idx.centers[s], idx.centers, spec.n_neighbors, self_index=s):
            chosen.add(j)
    s1 = np.array(sorted(chosen), dtype=np.int64)
    keep = rng.choice(len(s1), size=min(spec.k1, len(s1)), replace=False)
    return np.sort(s1[keep])


def sample_subgraph(idx, fs, spec, knn_cfg, gt=None):
    """Draw one training subgraph; deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    s2 = select_clusters(idx, spec, rng)
    nodes = np.sort(np.concatenate([idx.members[c] for c in s2]))
    keep = int(np.floor(spec.k2_frac * len(nodes)))
    node_ids = np.sort(nodes[rng.choice(len(nodes), size=keep, replace=False)])
    return make_subgraph(node_ids, idx, fs, knn_cfg, gt)


def make_subgraph(node_ids, idx, fs, knn_cfg, gt=None):
    """Subgraph over given nodes with a freshly built KNN graph."""
    node_ids = np.asarray(node_ids, dtype=np.int64)
    sub_fs = fs.subset(node_ids)
    if gt is not None:
        labels = gt.labels[node_ids]
    else:
        owner = np.empty(fs.n, dtype=np.int64)
        for c, mem in enumerate(idx.members):
            owner[mem] = idx.cluster_ids[c]
        labels = owner[node_ids]
    return SampledSubgraph(node_ids, sub_fs, Partition(labels), _subgraph_knn(sub_fs, knn_cfg))


def uniform_node_subgraph(fs, gt, size, knn_cfg, seed):
    """Baseline: ``size`` nodes drawn uniformly, KNN rebuilt over them."""
    rng = np.random.default_rng(seed)
    node_ids = np.sort(rng.choice(fs.n, size=size, replace=False))
    sub_fs = fs.subset(node_ids)
    return SampledSubgraph(
        node_ids, sub_fs, Partition(gt.labels[node_ids]), _subgraph_knn(sub_fs, knn_cfg)
    )


def edge_label_batch(sub):
    """One entry per undirected edge; label 1 when both ends share a class."""
    src, dst, _ = sub.graph.undirected_edges()
    lab = sub.labels.labels
    return EdgeBatch(np.stack([src, dst], axis=1), (lab[src] == lab[dst]).astype(np.int64))


def negative_fraction(sub):
    batch = edge_label_batch(sub)
    return float(np.mean(batch.labels == 0)) if len(batch) else 0.0

