"""GCN edge-confidence model with explicit forward and backward passes.

Layer update::

    F_{l+1} = relu([F_l, P F_l] @ W_l),    P = D^-1 (A + I)

where ``D`` is the row sum of ``A + I`` and negative weights in ``A`` are
clamped to zero. The self-loop is applied virtually; ``A`` never stores it.

An edge (u, v) is scored by a two-layer MLP on ``[F_L(u), F_L(v)]`` and the
class-1 softmax probability is averaged over both orderings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .core import EdgeModel, FeatureSet
from .errors import EmptyBatch, IndexOutOfRange, ShapeMismatch

# clip for log() in the cross-entropy; only reached by saturated scores
PROB_EPS = 1e-12


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(in_dim, gcn_dims=(512, 256), mlp_hidden=128, seed=0):
    """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    weights = []
    width = in_dim
    for out in gcn_dims:
        weights.append(glorot(rng, 2 * width, out))
        width = out
    w1 = glorot(rng, 2 * width, mlp_hidden)
    w2 = glorot(rng, mlp_hidden, 2)
    return EdgeModel(weights, w1, np.zeros(mlp_hidden), w2, np.zeros(2))


class PropagationMatrix:
    """Row-stochastic ``D^-1 (A + I)`` kept as CSR plus per-row scales."""

    def __init__(self, graph):
        if graph.weights is None:
            data = np.ones(graph.nnz, dtype=np.float64)
        else:
            data = np.maximum(graph.weights, 0.0)
        self.adj = sp.csr_matrix((data, graph.indices, graph.indptr), shape=(graph.n, graph.n))
        self.inv_deg = 1.0 / (np.asarray(self.adj.sum(axis=1)).ravel() + 1.0)
        self.n = graph.n

    def apply(self, x):
        return self.inv_deg[:, None] * (self.adj @ x + x)

    def apply_transpose(self, y):
        s = self.inv_deg[:, None] * y
        return self.adj.T @ s + s

    def dense(self):
        return self.inv_deg[:, None] * (self.adj.toarray() + np.eye(self.n))


def propagate(graph, features):
    """Degree-normalized sum of each node's own row and its neighbors' rows."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != graph.n:
        raise ShapeMismatch(f"features have {x.shape[0]} rows, graph has {graph.n} nodes")
    return PropagationMatrix(graph).apply(x)


@dataclass
class ForwardTrace:
    """Activations kept for backprop.

    ``feats[l]`` is F_l (``feats[0]`` the input), ``concat[l]`` the layer
    input ``[F_l, P F_l]`` and ``pre[l]`` its product with W_l.
    """

    prop: PropagationMatrix
    feats: list
    concat: list
    pre: list

    @property
    def output(self):
        return self.feats[-1]


@dataclass
class EdgeBatch:
    edges: np.ndarray  # (E, 2) int64
    labels: np.ndarray  # (E,) 0/1

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.labels) != len(self.edges):
            raise ShapeMismatch("one label per edge required")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise ValueError("edge endpoints must differ")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")

    def __len__(self):
        return len(self.edges)


def _features(fs):
    return fs.data if isinstance(fs, FeatureSet) else fs


def gcn_forward(model, graph, fs):
    x = np.asarray(_features(fs), dtype=np.float64)
    if x.shape != (graph.n, model.in_dim):
        raise ShapeMismatch(
            f"expected features of shape ({graph.n}, {model.in_dim}), got {x.shape}"
        )
    prop = PropagationMatrix(graph)
    feats, concat, pre = [x], [], []
    for w in model.gcn_weights:
        h = np.hstack([feats[-1], prop.apply(feats[-1])])
        z = h @ w
        concat.append(h)
        pre.append(z)
        feats.append(np.maximum(z, 0.0))
    return ForwardTrace(prop, feats, concat, pre)


def _edge_array(edges, n):
    e = edges.edges if isinstance(edges, EdgeBatch) else np.asarray(edges, dtype=np.int64)
    e = e.reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n):
        raise IndexOutOfRange("edge endpoint outside the graph")
    return e


def _head_forward(model, out, u, v):
    """MLP on both orderings. The first layer is split into the halves acting
    on each endpoint, so it runs once per node instead of once per edge."""
    width = out.shape[1]
    pa = out @ model.w1[:width]
    pb = out @ model.w1[width:]
    res = {}
    for key, a, b in (("uv", u, v), ("vu", v, u)):
        z = pa[a] + pb[b] + model.b1
        h = np.maximum(z, 0.0)
        logits = h @ model.w2 + model.b2
        p = expit(logits[:, 1] - logits[:, 0])
        res[key] = (z, h, p)
    return res


def edge_scores(model, trace, edges):
    """Probability that each edge joins two same-class nodes, symmetric in (u, v)."""
    out = trace.output
    e = _edge_array(edges, out.shape[0])
    res = _head_forward(model, out, e[:, 0], e[:, 1])
    return 0.5 * (res["uv"][2] + res["vu"][2])


def _scatter_rows(index, values, n):
    """sum of ``values`` rows grouped by ``index`` (fixed summation order)."""
    m = sp.csr_matrix(
        (np.ones(len(index)), (index, np.arange(len(index)))), shape=(n, len(index))
    )
    return m @ values


def loss_and_grads(model, graph, fs, batch):
    """Mean binary cross-entropy of the symmetrized scores and its exact gradient.

    Returns ``(loss, grads)`` with ``grads`` in ``model.params()`` order.
    """
    if len(batch) == 0:
        raise EmptyBatch("edge batch is empty")
    trace = gcn_forward(model, graph, fs)
    out = trace.output
    n, width = out.shape
    e = _edge_array(batch, n)
    u, v = e[:, 0], e[:, 1]
    y = batch.labels.astype(np.float64)
    res = _head_forward(model, out, u, v)
    s = 0.5 * (res["uv"][2] + res["vu"][2])
    sc = np.clip(s, PROB_EPS, 1.0 - PROB_EPS)
    m = len(y)
    loss = -np.sum(y * np.log(sc) + (1.0 - y) * np.log1p(-sc)) / m

    ds = (-y / sc + (1.0 - y) / (1.0 - sc)) / m
    gw2 = np.zeros_like(model.w2)
    gb2 = np.zeros_like(model.b2)
    gb1 = np.zeros_like(model.b1)
    dz_by = {}
    for key in ("uv", "vu"):
        z, h, p = res[key]
        dl1 = 0.5 * ds * p * (1.0 - p)
        dlogits = np.stack([-dl1, dl1], axis=1)
        gw2 += h.T @ dlogits
        gb2 += dlogits.sum(axis=0)
        dz = (dlogits @ model.w2.T) * (z > 0)
        gb1 += dz.sum(axis=0)
        dz_by[key] = dz
    # first half of w1 sees the first endpoint of each ordering
    dpa = _scatter_rows(np.concatenate([u, v]), np.vstack([dz_by["uv"], dz_by["vu"]]), n)
    dpb = _scatter_rows(np.concatenate([v, u]), np.vstack([dz_by["uv"], dz_by["vu"]]), n)
    gw1 = np.vstack([out.T @ dpa, out.T @ dpb])
    dout = dpa @ model.w1[:width].T + dpb @ model.w1[width:].T

    ggcn = [None] * len(model.gcn_weights)
    dfeat = dout
    for l in range(len(model.gcn_weights) - 1, -1, -1):
        w = model.gcn_weights[l]
        dz = dfeat * (trace.pre[l] > 0)
        ggcn[l] = trace.concat[l].T @ dz
        if l == 0:
            break
        dh = dz @ w.T
        d = w.shape[0] // 2
        dfeat = dh[:, :d] + trace.prop.apply_transpose(dh[:, d:])
    return float(loss), [*ggcn, gw1, gb1, gw2, gb2]


def predict_edges(model, graph, fs):
    """Score every undirected edge of ``graph``; returns ``(src, dst, scores)``."""
    trace = gcn_forward(model, graph, fs)
    src, dst, _ = graph.undirected_edges()
    if len(src) == 0:
        return src, dst, np.zeros(0)
    return src, dst, edge_scores(model, trace, np.stack([src, dst], axis=1))
