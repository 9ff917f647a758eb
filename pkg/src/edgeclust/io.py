"""Binary and text file formats. All integers are little-endian.

Features (``STFC``)::

    0   4s   magic b"STFC"
    4   u32  version (1)
    8   u64  n
    16  u32  d
    20  u32  reserved (0)
    24  f32  n*d values, row-major

Model checkpoint (``STFM``)::

    0   4s   magic b"STFM"
    4   u32  version (1)
    8   u32  number of GCN layers L
    12  payload: L + 4 tensors (GCN weights, w1, b1, w2, b2), each
        u32 rows, u32 cols, f64 rows*cols values row-major;
        biases are stored as 1-row tensors
    end u32  CRC32 of the payload bytes

Graph (``STFG``)::

    0   4s   magic b"STFG"
    4   u32  version (1)
    8   u64  n
    16  u64  nnz
    24  u32  flags (bit 0 weighted, bit 1 symmetric)
    28  u32  reserved (0)
    32  i64  indptr[n+1], i64 indices[nnz], then f64 weights[nnz] if weighted

Labels are UTF-8 text, one decimal integer per line, newline-terminated.
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

from .core import EdgeModel, FeatureSet, Partition, SparseGraph, canonicalize
from .errors import (
    BadMagic,
    CrcMismatch,
    FormatVersionMismatch,
    IoError,
    LengthMismatch,
    ShapeMismatch,
)

VERSION = 1
FEATURE_HEADER = struct.Struct("<4sIQII")
MODEL_HEADER = struct.Struct("<4sII")
GRAPH_HEADER = struct.Struct("<4sIQQII")
TENSOR_HEADER = struct.Struct("<II")


def _read_bytes(path):
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_bytes(path, data):
    try:
        with open(path, "wb") as f:
            f.write(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _header(raw, fmt, magic, path):
    if len(raw) < fmt.size:
        raise IoError(f"{path}: truncated header")
    fields = fmt.unpack_from(raw)
    if fields[0] != magic:
        raise BadMagic(f"{path}: expected magic {magic!r}, got {fields[0]!r}")
    if fields[1] != VERSION:
        raise FormatVersionMismatch(f"{path}: unsupported version {fields[1]}")
    return fields


def write_features(path, fs):
    x = np.ascontiguousarray(fs.data if isinstance(fs, FeatureSet) else fs, dtype="<f4")
    n, d = x.shape
    _write_bytes(path, FEATURE_HEADER.pack(b"STFC", VERSION, n, d, 0) + x.tobytes())


def read_features(path, normalize=True):
    raw = _read_bytes(path)
    _, _, n, d, _ = _header(raw, FEATURE_HEADER, b"STFC", path)
    if len(raw) - FEATURE_HEADER.size != n * d * 4:
        raise LengthMismatch(
            f"{path}: header says {n}x{d} floats, payload has {len(raw) - FEATURE_HEADER.size} bytes"
        )
    x = np.frombuffer(raw, dtype="<f4", offset=FEATURE_HEADER.size).reshape(n, d)
    return FeatureSet.from_array(x.astype(np.float32), normalize=normalize)


def write_labels(path, labels):
    labels = labels.labels if isinstance(labels, Partition) else np.asarray(labels)
    text = "".join(f"{int(v)}\n" for v in labels)
    _write_bytes(path, text.encode("utf-8"))


def read_labels(path):
    raw = _read_bytes(path)
    try:
        text = raw.decode("utf-8")
        values = [int(line) for line in text.splitlines() if line.strip()]
    except (UnicodeDecodeError, ValueError) as exc:
        raise IoError(f"{path}: malformed label file: {exc}") from exc
    return Partition(np.array(values, dtype=np.int64))


def write_partition(path, partition):
    """Canonicalized predicted labels, one per input row."""
    write_labels(path, canonicalize(partition))


def _tensor_bytes(a):
    a = np.atleast_2d(np.asarray(a, dtype="<f8"))
    return TENSOR_HEADER.pack(*a.shape) + np.ascontiguousarray(a).tobytes()


def model_to_bytes(model):
    payload = b"".join(_tensor_bytes(p) for p in model.params())
    header = MODEL_HEADER.pack(b"STFM", VERSION, len(model.gcn_weights))
    return header + payload + struct.pack("<I", zlib.crc32(payload))


def model_from_bytes(raw, path="<bytes>", expect_dims=None):
    _, _, layers = _header(raw, MODEL_HEADER, b"STFM", path)
    if len(raw) < MODEL_HEADER.size + 4:
        raise IoError(f"{path}: truncated checkpoint")
    payload = raw[MODEL_HEADER.size : -4]
    (crc,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) != crc:
        raise CrcMismatch(f"{path}: checksum does not match payload")
    tensors = []
    off = 0
    for _ in range(layers + 4):
        if off + TENSOR_HEADER.size > len(payload):
            raise IoError(f"{path}: truncated tensor header")
        rows, cols = TENSOR_HEADER.unpack_from(payload, off)
        off += TENSOR_HEADER.size
        size = rows * cols * 8
        if off + size > len(payload):
            raise IoError(f"{path}: truncated tensor data")
        tensors.append(
            np.frombuffer(payload, dtype="<f8", count=rows * cols, offset=off)
            .reshape(rows, cols)
            .astype(np.float64)
        )
        off += size
    if off != len(payload):
        raise IoError(f"{path}: trailing bytes after tensors")
    *gcn, w1, b1, w2, b2 = tensors
    model = EdgeModel(gcn, w1, b1.reshape(-1), w2, b2.reshape(-1))
    if expect_dims is not None and tuple(model.dims) != tuple(expect_dims):
        raise ShapeMismatch(f"{path}: model dims {model.dims} differ from expected {expect_dims}")
    return model


def write_model(path, model):
    _write_bytes(path, model_to_bytes(model))


def read_model(path, expect_dims=None):
    return model_from_bytes(_read_bytes(path), path, expect_dims)


def write_graph(path, graph):
    flags = (graph.weights is not None) | (bool(graph.symmetric) << 1)
    parts = [
        GRAPH_HEADER.pack(b"STFG", VERSION, graph.n, graph.nnz, flags, 0),
        graph.indptr.astype("<i8").tobytes(),
        graph.indices.astype("<i8").tobytes(),
    ]
    if graph.weights is not None:
        parts.append(graph.weights.astype("<f8").tobytes())
    _write_bytes(path, b"".join(parts))


def read_graph(path):
    raw = _read_bytes(path)
    _, _, n, nnz, flags, _ = _header(raw, GRAPH_HEADER, b"STFG", path)
    weighted = bool(flags & 1)
    expected = (n + 1) * 8 + nnz * 8 + (nnz * 8 if weighted else 0)
    if len(raw) - GRAPH_HEADER.size != expected:
        raise LengthMismatch(f"{path}: payload size does not match header")
    off = GRAPH_HEADER.size
    indptr = np.frombuffer(raw, dtype="<i8", count=n + 1, offset=off)
    off += (n + 1) * 8
    indices = np.frombuffer(raw, dtype="<i8", count=nnz, offset=off)
    off += nnz * 8
    weights = np.frombuffer(raw, dtype="<f8", count=nnz, offset=off) if weighted else None
    return SparseGraph(int(n), indptr.copy(), indices.copy(),
                       None if weights is None else weights.copy(), bool(flags & 2))


def checkpoint(model, path):
    """Write ``model`` atomically (temp file, then rename)."""
    tmp = f"{path}.tmp"
    write_model(tmp, model)
    try:
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def restore(path, expect_dims=None):
    return read_model(path, expect_dims)
