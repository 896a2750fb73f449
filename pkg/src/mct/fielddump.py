"""Raw binary field dumps.

Layout (little endian): ``b"PFMF"``, u32 dim, u32 resolution, f64 epsilon,
f64 time, then ``resolution**dim`` f64 values in row-major order.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"PFMF"
_HEADER = struct.Struct("<4sIIdd")


@dataclass(frozen=True)
class FieldDump:
    dim: int
    resolution: int
    epsilon: float
    time: float
    data: np.ndarray


def write_field(path, data: np.ndarray, epsilon: float, time: float) -> Path:
    data = np.asarray(data, dtype=np.float64)
    res = data.shape[0]
    if data.ndim not in (1, 2, 3) or any(n != res for n in data.shape):
        raise ValueError(f"field must be a cube of side resolution, got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to dump a field with non-finite values")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, data.ndim, res, float(epsilon), float(time)))
        fh.write(np.ascontiguousarray(data).astype("<f8").tobytes())
    return path


def read_field(path) -> FieldDump:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, dim, res, eps, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    n = res ** dim
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise ValueError(f"{path}: expected {n} values, found {len(body) // 8}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape((res,) * dim)
    return FieldDump(dim, res, eps, t, data)
