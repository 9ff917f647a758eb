"""Shared data types: features, sparse graphs, partitions, model parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import (
    EmptySet,
    GraphNotSymmetric,
    IndexOutOfRange,
    LengthMismatch,
    NonFinite,
    NotNormalized,
    SelfLoopPresent,
    ShapeMismatch,
)

NORM_TOL = 1e-4


def l2_normalize(x, skip_tol=None):
    """Row-normalize ``x`` (float64 math, result in the input dtype).

    With ``skip_tol`` set, rows whose norm is already within ``skip_tol`` of
    one are left bit-for-bit untouched.
    """
    x = np.asarray(x)
    norms = np.sqrt(np.einsum("ij,ij->i", x.astype(np.float64), x.astype(np.float64)))
    scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)
    if skip_tol is not None:
        scale = np.where(np.abs(norms - 1.0) <= skip_tol, 1.0, scale)
        out = x.copy()
        rows = scale != 1.0
        out[rows] = (x[rows].astype(np.float64) * scale[rows, None]).astype(x.dtype)
        return out
    return (x.astype(np.float64) * scale[:, None]).astype(x.dtype)


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """``n`` unit-norm feature rows of width ``d`` (float32 storage)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, x, normalize=True, dtype=np.float32):
        """Build a validated set, L2-normalizing rows unless told otherwise."""
        x = np.asarray(x, dtype=dtype)
        if x.ndim != 2:
            raise ShapeMismatch(f"features must be 2-D, got shape {x.shape}")
        _check_finite(x)
        if normalize:
            # float32-level tolerance keeps already-normalized files bit-exact
            x = l2_normalize(x, skip_tol=1e-6)
        fs = cls(x)
        validate_feature_set(fs)
        return fs

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    def subset(self, rows):
        return FeatureSet(self.data[np.asarray(rows)])


def _check_finite(x):
    bad = ~np.isfinite(x)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFinite(int(r), int(c))


def validate_feature_set(fs):
    """Raise if ``fs`` violates the FeatureSet invariants; return True otherwise."""
    x = fs.data
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise EmptySet(f"feature set must be non-empty, got shape {x.shape}")
    _check_finite(x)
    x64 = x.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", x64, x64))
    off = np.abs(norms - 1.0) > NORM_TOL
    if off.any():
        row = int(np.flatnonzero(off)[0])
        raise NotNormalized(row, float(norms[row]))
    return True


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """CSR adjacency without stored self-loops.

    ``weights`` is None for a binary graph. Column indices are strictly
    increasing within every row.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray | None = None
    symmetric: bool = False

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ShapeMismatch("malformed CSR row pointer")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n):
            raise IndexOutOfRange(f"column index outside [0, {self.n})")
        weights = self.weights
        if weights is not None:
            weights = np.ascontiguousarray(weights, dtype=np.float64)
            if weights.shape != indices.shape:
                raise ShapeMismatch("weights length differs from nnz")
            weights.setflags(write=False)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_scipy(cls, mat, weighted=True, symmetric=False):
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        if _has_diag_entries(mat):
            raise SelfLoopPresent("self-loops must not be stored")
        w = mat.data.astype(np.float64) if weighted else None
        return cls(mat.shape[0], mat.indptr, mat.indices, w, symmetric)

    @classmethod
    def from_edges(cls, n, src, dst, weights=None, symmetric=False):
        """Directed edge list -> CSR. Duplicate edges are not allowed."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if np.any(src == dst):
            raise SelfLoopPresent("self-loops must not be stored")
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if len(src) > 1 and np.any((np.diff(src) == 0) & (np.diff(dst) == 0)):
            raise ShapeMismatch("duplicate edges")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        w = None if weights is None else np.asarray(weights, dtype=np.float64)[order]
        return cls(n, indptr, dst, w, symmetric)

    @classmethod
    def from_undirected(cls, n, src, dst, weights=None):
        """Each pair given once; both directions are stored."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = None
        if weights is not None:
            w = np.concatenate([weights, weights])
        return cls.from_edges(
            n, np.concatenate([src, dst]), np.concatenate([dst, src]), w, symmetric=True
        )

    @property
    def nnz(self):
        return len(self.indices)

    def degrees(self):
        return np.diff(self.indptr)

    def row_ids(self):
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())

    def to_scipy(self, binary=False):
        data = (
            np.ones(self.nnz, dtype=np.float64)
            if binary or self.weights is None
            else np.asarray(self.weights)
        )
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def undirected_edges(self):
        """``(src, dst, pos)`` of entries with src < dst; ``pos`` indexes CSR storage."""
        rows = self.row_ids()
        pos = np.flatnonzero(rows < self.indices)
        return rows[pos], self.indices[pos], pos

    def transpose(self):
        t = self.to_scipy().T.tocsr()
        t.sort_indices()
        w = None if self.weights is None else t.data
        return SparseGraph(self.n, t.indptr, t.indices, w, self.symmetric)

    def binary(self):
        return SparseGraph(self.n, self.indptr, self.indices, None, self.symmetric)

    def keep(self, mask):
        """Subgraph keeping the stored entries where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.row_ids()[mask], minlength=self.n), out=indptr[1:])
        w = None if self.weights is None else self.weights[mask]
        return SparseGraph(self.n, indptr, self.indices[mask], w, self.symmetric)

    def check_symmetric(self):
        if not kernels.is_symmetric(self.indptr, self.indices, self.weights):
            raise GraphNotSymmetric("graph is not symmetric")

    def check_no_self_loops(self):
        if np.any(self.row_ids() == self.indices):
            raise SelfLoopPresent("graph stores self-loops")

    def structure_equal(self, other):
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


def _has_diag_entries(mat):
    rows = np.repeat(np.arange(mat.shape[0]), np.diff(mat.indptr))
    return bool(np.any(rows == mat.indices))


def symmetrize_union(graph):
    """A ∪ Aᵀ. Each unordered pair takes the weight stored on its lo->hi entry if
    present, else the hi->lo one, so the result has equal weights both ways."""
    rows, cols = graph.row_ids(), graph.indices
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    # lo->hi entries sort ahead of their hi->lo twins
    key = lo * graph.n + hi
    order = np.lexsort((rows > cols, key))
    _, first = np.unique(key[order], return_index=True)
    pick = order[first]
    w = None if graph.weights is None else graph.weights[pick]
    return SparseGraph.from_undirected(graph.n, lo[pick], hi[pick], w)


@dataclass(frozen=True, eq=False)
class Partition:
    """Cluster assignment, one non-negative id per node."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ShapeMismatch("labels must be 1-D")
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be non-negative")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return len(self.labels)

    @property
    def num_clusters(self):
        return len(np.unique(self.labels))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(canonicalize(self).labels, canonicalize(other).labels)

    def __hash__(self):
        return hash(canonicalize(self).labels.tobytes())

    def __len__(self):
        return len(self.labels)


def canonicalize(p):
    """Relabel clusters 0, 1, ... in order of first appearance."""
    labels = p.labels if isinstance(p, Partition) else np.asarray(p, dtype=np.int64)
    if labels.size == 0:
        return Partition(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return Partition(rank[inverse.ravel()])


def check_lengths(a, b, what="partitions"):
    if len(a) != len(b):
        raise LengthMismatch(f"{what} differ in length: {len(a)} vs {len(b)}")


@dataclass(frozen=True)
class SampleSpec:
    """Subgraph sampling parameters.

    ``m`` seed clusters, ``n_neighbors`` nearest clusters per seed, ``k1``
    clusters kept by cluster-level randomness, ``k2_frac`` of nodes kept by
    node-level randomness.
    """

    m: int = 2
    n_neighbors: int = 750
    k1: int = 1300
    k2_frac: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.n_neighbors < 0:
            raise ValueError("n_neighbors must be >= 0")
        if self.k1 < 1:
            raise ValueError("k1 must be >= 1")
        if not 0.0 < self.k2_frac <= 1.0:
            raise ValueError("k2_frac must lie in (0, 1]")


@dataclass(eq=False)
class EdgeModel:
    """GCN encoder weights plus the two-layer MLP edge head.

    ``gcn_weights[l]`` maps ``2 * width_l`` to ``width_{l+1}``; the MLP maps
    ``2 * width_L`` (concatenated endpoint embeddings) to a hidden layer and
    then to two logits.
    """

    gcn_weights: list
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    in_dim: int = field(init=False)

    def __post_init__(self):
        self.gcn_weights = [np.asarray(w, dtype=np.float64) for w in self.gcn_weights]
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64).reshape(-1)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64).reshape(-1)
        if not self.gcn_weights:
            raise ShapeMismatch("at least one GCN layer is required")
        if self.gcn_weights[0].shape[0] % 2:
            raise ShapeMismatch("first GCN layer input width must be even")
        width = self.gcn_weights[0].shape[0] // 2
        for w in self.gcn_weights:
            if w.ndim != 2 or w.shape[0] != 2 * width:
                raise ShapeMismatch("GCN layer widths do not chain")
            width = w.shape[1]
        if self.w1.shape[0] != 2 * width:
            raise ShapeMismatch("MLP input width must be twice the GCN output width")
        if self.b1.shape != (self.w1.shape[1],) or self.w2.shape != (self.w1.shape[1], 2):
            raise ShapeMismatch("MLP hidden widths do not chain")
        if self.b2.shape != (2,):
            raise ShapeMismatch("MLP must output two logits")
        if not all(np.isfinite(p).all() for p in self.params()):
            raise ValueError("model parameters must be finite")
        self.in_dim = self.gcn_weights[0].shape[0] // 2

    @property
    def gcn_dims(self):
        return tuple(w.shape[1] for w in self.gcn_weights)

    @property
    def mlp_hidden(self):
        return self.w1.shape[1]

    @property
    def dims(self):
        return (self.in_dim, self.gcn_dims, self.mlp_hidden)

    def params(self):
        """Parameter arrays in a fixed order (GCN layers, w1, b1, w2, b2)."""
        return [*self.gcn_weights, self.w1, self.b1, self.w2, self.b2]

    @classmethod
    def from_params(cls, params):
        *gcn, w1, b1, w2, b2 = params
        return cls(list(gcn), w1, b1, w2, b2)

    def copy(self):
        return EdgeModel.from_params([p.copy() for p in self.params()])

    def equals(self, other):
        a, b = self.params(), other.params()
        return len(a) == len(b) and all(
            x.shape == y.shape and np.array_equal(x, y) for x, y in zip(a, b)
        )
