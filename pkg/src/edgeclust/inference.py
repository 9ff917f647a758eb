"""Full-graph clustering: score parsing, node-intimacy refinement, components."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Partition, SparseGraph
from .errors import LengthMismatch
from .gcn import predict_edges
from .knn import build_knn_graph

AGGREGATIONS = ("max", "mean", "min", "jaccard")


@dataclass(frozen=True)
class InferConfig:
    tau1: float = 0.7
    tau2: float = 0.72
    aggregation: str = "max"
    skip_parsing: bool = False
    skip_refinement: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tau1 <= 1.0 or not 0.0 <= self.tau2 <= 1.0:
            raise ValueError("thresholds must lie in [0, 1]")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


@dataclass
class IntimacyResult:
    """Node intimacy per undirected edge ``src[i] < dst[i]``.

    ``common`` is the number of shared neighbors, ``deg_src``/``deg_dst`` the
    endpoint degrees.
    """

    src: np.ndarray
    dst: np.ndarray
    common: np.ndarray
    deg_src: np.ndarray
    deg_dst: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.values)


def parse_graph(graph, scores, tau1):
    """Binary symmetric graph of the undirected edges with ``score >= tau1``.

    ``scores`` are aligned with ``graph.undirected_edges()``.
    """
    src, dst, _ = graph.undirected_edges()
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != src.shape:
        raise LengthMismatch(f"{len(scores)} scores for {len(src)} edges")
    keep = scores >= tau1
    return SparseGraph.from_undirected(graph.n, src[keep], dst[keep])


def aggregate(common, n1, n2, aggregation):
    k = common.astype(np.float64)
    if aggregation == "jaccard":
        return k / (n1 + n2 - common)
    a, b = k / n1, k / n2
    if aggregation == "max":
        return np.maximum(a, b)
    if aggregation == "min":
        return np.minimum(a, b)
    if aggregation == "mean":
        return 0.5 * (a + b)
    raise ValueError(f"unknown aggregation {aggregation!r}")


def node_intimacy(graph, aggregation="max"):
    """Shared-neighbor ratio for every edge of a symmetric graph.

    Stored weights are ignored: neighbors are counted, not weighed.
    """
    graph.check_no_self_loops()
    graph.check_symmetric()
    src, dst, _ = graph.undirected_edges()
    deg = graph.degrees()
    common = kernels.common_neighbor_counts(graph.indptr, graph.indices, src, dst)
    n1, n2 = deg[src], deg[dst]
    return IntimacyResult(src, dst, common, n1, n2, aggregate(common, n1, n2, aggregation))


def refine_graph(graph, ni, tau2):
    keep = ni.values >= tau2
    return SparseGraph.from_undirected(graph.n, ni.src[keep], ni.dst[keep])


def connected_components(graph):
    """Components labelled by first appearance in node order."""
    return Partition(kernels.component_labels(graph.n, graph.indptr, graph.indices))


@dataclass
class ClusterResult:
    partition: Partition
    knn_graph: SparseGraph
    scores: np.ndarray | None
    parsed: SparseGraph
    refined: SparseGraph


def cluster_graph(knn_graph, infer_cfg, scores=None):
    """Parsing and refinement on an existing graph with precomputed edge scores."""
    parsed = knn_graph.binary()
    if not infer_cfg.skip_parsing:
        parsed = parse_graph(knn_graph, scores, infer_cfg.tau1)
    refined = parsed
    if not infer_cfg.skip_refinement:
        ni = node_intimacy(parsed, infer_cfg.aggregation)
        refined = refine_graph(parsed, ni, infer_cfg.tau2)
    return ClusterResult(connected_components(refined), knn_graph, scores, parsed, refined)


def run_inference(fs, model, knn_cfg, infer_cfg, knn_graph=None):
    """Whole pipeline, keeping the intermediate graphs."""
    graph = knn_graph if knn_graph is not None else build_knn_graph(fs, knn_cfg)
    scores = None
    if not infer_cfg.skip_parsing:
        _, _, scores = predict_edges(model, graph, fs)
    return cluster_graph(graph, infer_cfg, scores)


def cluster(fs, model, knn_cfg, infer_cfg):
    return run_inference(fs, model, knn_cfg, infer_cfg).partition
