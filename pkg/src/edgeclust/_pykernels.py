"""numpy/scipy implementations of the compiled kernels in ``_ckernels.pyx``.

Used when the extension is not built, or when ``EDGECLUST_BACKEND=python``.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


def common_neighbor_counts(indptr, indices, src, dst):
    """Entries of the binary product A·A at the query pairs."""
    n = len(indptr) - 1
    a = sp.csr_matrix(
        (np.ones(len(indices), dtype=np.int64), indices, indptr), shape=(n, n)
    )
    aa = (a @ a).tocsr()
    aa.sum_duplicates()
    aa.sort_indices()
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(aa.indptr))
    keys = rows * n + aa.indices.astype(np.int64)
    query = np.asarray(src, dtype=np.int64) * n + np.asarray(dst, dtype=np.int64)
    pos = np.searchsorted(keys, query)
    pos = np.minimum(pos, max(len(keys) - 1, 0))
    if len(keys) == 0:
        return np.zeros(len(query), dtype=np.int64)
    hit = keys[pos] == query
    return np.where(hit, aa.data[pos], 0).astype(np.int64)


def component_labels(n, indptr, indices):
    a = sp.csr_matrix(
        (np.ones(len(indices), dtype=np.int8), indices, indptr), shape=(n, n)
    )
    _, raw = connected_components(a, directed=True, connection="weak")
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()]


def topk_select(sims, k, row_offset, exclude_self):
    sims = np.array(sims, dtype=np.float64, copy=True)
    b, n = sims.shape
    if exclude_self:
        r = np.arange(b)
        cols = row_offset + r
        ok = cols < n
        sims[r[ok], cols[ok]] = -np.inf
    # stable sort on the negated values keeps lower columns first among ties
    order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
    return order.astype(np.int64), np.take_along_axis(sims, order, axis=1)


def is_symmetric(indptr, indices, weights=None):
    """Compare the CSR arrays with those of the transpose."""
    n = len(indptr) - 1
    data = np.ones(len(indices)) if weights is None else weights
    a = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    t = a.T.tocsr()
    t.sort_indices()
    if not (np.array_equal(t.indptr, indptr) and np.array_equal(t.indices, indices)):
        return False
    return weights is None or bool(np.array_equal(t.data, weights))
