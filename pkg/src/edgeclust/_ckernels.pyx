# Compiled inner loops. Semantics must match edgeclust._pykernels exactly.

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def common_neighbor_counts(const i64[::1] indptr, const i64[::1] indices,
                           const i64[::1] src, const i64[::1] dst):
    """|N(src[e]) ∩ N(dst[e])| for every query pair.

    N(src) is stamped into a marker array once per run of equal ``src``
    values, then N(dst) is scanned; the count loop has no data-dependent
    branches. Any query order is correct; src-sorted order is fastest.
    """
    cdef Py_ssize_t m = src.shape[0]
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out_arr = np.zeros(m, dtype=np.int64)
    stamp_arr = np.full(max(n, 1), -1, dtype=np.int64)
    cdef i64[::1] out = out_arr
    cdef i64[::1] stamp = stamp_arr
    cdef Py_ssize_t e
    cdef i64 u, cur = -1, p, c
    with nogil:
        for e in range(m):
            u = src[e]
            if u != cur:
                for p in range(indptr[u], indptr[u + 1]):
                    stamp[indices[p]] = u
                cur = u
            c = 0
            for p in range(indptr[dst[e]], indptr[dst[e] + 1]):
                c += stamp[indices[p]] == u
            out[e] = c
    return out_arr


def is_symmetric(const i64[::1] indptr, const i64[::1] indices, weights=None):
    """True iff every stored (u, v) has a matching (v, u) (and equal weight).

    Rows are visited in increasing u, so the entries pointing back at u in
    row v are met in column order; one cursor per row suffices.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cursor_arr = np.array(indptr[:n], dtype=np.int64) if n > 0 else np.zeros(0, dtype=np.int64)
    cdef i64[::1] cursor = cursor_arr
    cdef const double[::1] w
    cdef bint weighted = weights is not None
    cdef bint ok = True
    cdef Py_ssize_t u
    cdef i64 p, v, c
    if weighted:
        w = weights
    with nogil:
        for u in range(n):
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                c = cursor[v]
                if c >= indptr[v + 1] or indices[c] != u or (weighted and w[c] != w[p]):
                    ok = False
                    break
                cursor[v] = c + 1
            if not ok:
                break
        if ok:
            for u in range(n):
                if cursor[u] != indptr[u + 1]:
                    ok = False
                    break
    return bool(ok)


cdef inline i64 _find(i64[::1] parent, i64 x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def component_labels(Py_ssize_t n, const i64[::1] indptr, const i64[::1] indices):
    """Connected components by union-find, labelled by first appearance."""
    parent_arr = np.arange(n, dtype=np.int64)
    label_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] parent = parent_arr
    cdef i64[::1] label = label_arr
    cdef Py_ssize_t u, p
    cdef i64 ru, rv, nxt = 0
    with nogil:
        for u in range(n):
            for p in range(indptr[u], indptr[u + 1]):
                ru = _find(parent, u)
                rv = _find(parent, indices[p])
                if ru != rv:
                    # smaller index becomes the root
                    if ru < rv:
                        parent[rv] = ru
                    else:
                        parent[ru] = rv
        for u in range(n):
            ru = _find(parent, u)
            if label[ru] < 0:
                label[ru] = nxt
                nxt += 1
            label[u] = label[ru]
    return label_arr


def topk_select(const double[:, ::1] sims, Py_ssize_t k, Py_ssize_t row_offset,
                bint exclude_self):
    """Per-row top-k by (similarity desc, column asc).

    Row ``r`` of the block is global row ``row_offset + r``; with
    ``exclude_self`` that column is skipped.
    """
    cdef Py_ssize_t b = sims.shape[0], n = sims.shape[1]
    idx_arr = np.empty((b, k), dtype=np.int64)
    val_arr = np.empty((b, k), dtype=np.float64)
    cdef i64[:, ::1] idx = idx_arr
    cdef double[:, ::1] val = val_arr
    cdef Py_ssize_t r, j, pos, filled
    cdef double s
    with nogil:
        for r in range(b):
            filled = 0
            for j in range(n):
                if exclude_self and j == row_offset + r:
                    continue
                s = sims[r, j]
                # columns arrive in increasing order, so a tie never displaces
                if filled == k and not (s > val[r, k - 1]):
                    continue
                pos = filled if filled < k else k - 1
                while pos > 0 and val[r, pos - 1] < s:
                    val[r, pos] = val[r, pos - 1]
                    idx[r, pos] = idx[r, pos - 1]
                    pos -= 1
                val[r, pos] = s
                idx[r, pos] = j
                if filled < k:
                    filled += 1
    return idx_arr, val_arr
