"""Backend selection for the hot loops.

The compiled extension is preferred when it imports. Set
``EDGECLUST_BACKEND=python`` to force the numpy/scipy fallback.
"""

import contextlib
import logging
import os

import numpy as np

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def available_backends():
    return sorted(_BACKENDS)


def _initial():
    want = os.environ.get("EDGECLUST_BACKEND", "").strip().lower()
    if want:
        if want not in _BACKENDS:
            raise ImportError(f"EDGECLUST_BACKEND={want!r} is not available")
        return want
    return "cython" if "cython" in _BACKENDS else "python"


_active = _initial()


def backend():
    return _active


def set_backend(name):
    """Switch backends; returns the previous name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    prev, _active = _active, name
    return prev


@contextlib.contextmanager
def using(name):
    prev = set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def common_neighbor_counts(indptr, indices, src, dst):
    return _BACKENDS[_active].common_neighbor_counts(
        _i64(indptr), _i64(indices), _i64(src), _i64(dst)
    )


def component_labels(n, indptr, indices):
    return _BACKENDS[_active].component_labels(int(n), _i64(indptr), _i64(indices))


def topk_select(sims, k, row_offset=0, exclude_self=False):
    sims = np.ascontiguousarray(sims, dtype=np.float64)
    return _BACKENDS[_active].topk_select(sims, int(k), int(row_offset), bool(exclude_self))


def is_symmetric(indptr, indices, weights=None):
    if weights is not None:
        weights = np.ascontiguousarray(weights, dtype=np.float64)
    return _BACKENDS[_active].is_symmetric(_i64(indptr), _i64(indices), weights)
