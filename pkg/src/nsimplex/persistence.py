"""Binary container for fitted transforms.

Layout (all little-endian)::

    magic    4 bytes  b"NSXF"
    version  u16      1
    type     u8       1 = nsimplex, 2 = linear, 3 = lmds
    flags    u8       bit 0: a quadratic-form matrix follows the arrays
    kind     u16 length + UTF-8 metric kind ("euclidean-coordinates" for linear)
    scale    f64      linear scale factor (1.0 otherwise)
    count    u16      number of arrays
    arrays   count x (u8 dtype code: 8 = f64, 4 = f32; u64 rows; u64 cols; row-major data)

Array order: nsimplex ``references, base``; linear ``matrix, centering,
offset`` (absent vectors stored as 0 x 0); lmds ``landmarks, embedding,
mean_sq, pseudo_inverse``. The QF matrix, when flagged, is one extra array.
"""
from __future__ import annotations

import struct

import numpy as np

from .baselines import LinearTransform, LMDSTransform
from .metrics import Metric
from .simplex import BaseSimplex, NSimplexTransform

__all__ = ["MAGIC", "VERSION", "save_transform", "load_transform", "dumps", "loads"]

MAGIC = b"NSXF"
VERSION = 1
_TYPES = {NSimplexTransform: 1, LinearTransform: 2, LMDSTransform: 3}
_LINEAR_KIND = "euclidean-coordinates"


def _pack_array(a, single: bool) -> bytes:
    if a is None:
        a = np.zeros((0, 0))
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    dt, code = ("<f4", 4) if single else ("<f8", 8)
    return struct.pack("<BQQ", code, *a.shape) + np.ascontiguousarray(a, dtype=dt).tobytes()


def dumps(t, single: bool = False) -> bytes:
    """Serialise a fitted transform; ``single`` stores arrays as float32."""
    try:
        ttype = _TYPES[type(t)]
    except KeyError:
        raise TypeError(f"cannot persist {type(t).__name__}") from None
    if ttype == 1:
        metric, arrays, scale = t.metric, [t.references, t.base.coords], 1.0
    elif ttype == 2:
        metric, arrays, scale = None, [t.matrix, t.centering, t.offset], float(t.scale)
    else:
        metric = t.metric
        arrays = [t.landmarks, t.landmark_embedding, t.mean_sq_landmark_dists, t.pseudo_inverse_factor]
        scale = 1.0
    kind = _LINEAR_KIND if metric is None else metric.kind
    qf = metric.qf_matrix if metric is not None else None
    if qf is not None:
        arrays.append(qf)
    k = kind.encode()
    head = MAGIC + struct.pack("<HBBH", VERSION, ttype, int(qf is not None), len(k)) + k
    head += struct.pack("<dH", scale, len(arrays))
    # the QF matrix always stays f64 so the metric survives its PSD check
    body = b"".join(_pack_array(a, single and i < len(arrays) - (qf is not None)) for i, a in enumerate(arrays))
    return head + body


class _Reader:
    def __init__(self, raw: bytes):
        self.raw, self.pos = raw, 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.raw):
            raise ValueError("truncated transform file")
        out = struct.unpack_from(fmt, self.raw, self.pos)
        self.pos += size
        return out

    def bytes(self, n):
        if self.pos + n > len(self.raw):
            raise ValueError("truncated transform file")
        b = self.raw[self.pos : self.pos + n]
        self.pos += n
        return b

    def array(self):
        code, r, c = self.take("<BQQ")
        if code not in (4, 8):
            raise ValueError(f"unknown array dtype code {code}")
        data = self.bytes(r * c * code)
        return np.frombuffer(data, dtype="<f4" if code == 4 else "<f8").astype(np.float64).reshape(r, c)


def loads(raw: bytes):
    rd = _Reader(raw)
    if rd.bytes(4) != MAGIC:
        raise ValueError("not an NSXF transform file")
    version, ttype, flags, klen = rd.take("<HBBH")
    if version != VERSION:
        raise ValueError(f"unsupported transform file version {version}")
    kind = rd.bytes(klen).decode()
    scale, count = rd.take("<dH")
    arrays = [rd.array() for _ in range(count)]
    if rd.pos != len(raw):
        raise ValueError("trailing bytes after transform data")
    qf = arrays.pop() if flags & 1 else None
    if ttype == 1:
        refs, base = arrays
        return NSimplexTransform(Metric(kind, qf), refs, BaseSimplex(base))
    if ttype == 2:
        M, c, o = arrays
        return LinearTransform(M, c.ravel() if c.size else None, scale, o.ravel() if o.size else None)
    if ttype == 3:
        L, emb, msq, pinv = arrays
        return LMDSTransform(L, Metric(kind, qf), emb, msq.ravel(), pinv)
    raise ValueError(f"unknown transform type {ttype}")


def save_transform(path, t, single: bool = False) -> None:
    with open(path, "wb") as f:
        f.write(dumps(t, single))


def load_transform(path):
    with open(path, "rb") as f:
        return loads(f.read())
