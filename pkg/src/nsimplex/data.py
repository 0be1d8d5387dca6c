"""Datasets: generation, normalisation, file I/O, witness sampling, kNN ground truth.

Generators use numpy's ``default_rng`` (PCG64), so a seed reproduces the same
matrix on any platform.
"""
from __future__ import annotations

import csv
import io
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .metrics import EUCLIDEAN, DomainError, Metric

__all__ = [
    "Dataset",
    "WitnessSplit",
    "FormatError",
    "gen_uniform",
    "gen_gaussian",
    "l1_normalize",
    "l2_normalize",
    "load_fvecs",
    "write_fvecs",
    "load_csv",
    "write_csv",
    "load",
    "sample_witness",
    "knn_ground_truth",
]


class FormatError(ValueError):
    """Malformed data file."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x m`` row matrix with the metric it is meant to be used under."""

    rows: np.ndarray
    metric: Metric = EUCLIDEAN
    name: str = "data"

    def __post_init__(self):
        R = np.array(self.rows, dtype=np.float64)
        if R.ndim != 2:
            raise ValueError(f"rows must be a 2-d matrix, got shape {R.shape}")
        R = self.metric.prepare(R) if R.shape[0] else R
        R.setflags(write=False)
        object.__setattr__(self, "rows", R)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx) -> np.ndarray:
        return self.rows[np.asarray(idx, dtype=np.intp)]


@dataclass(frozen=True)
class WitnessSplit:
    witness: np.ndarray
    evaluation: np.ndarray
    seed: object = None


def _rows(data) -> np.ndarray:
    return data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)


def _rewrap(data, rows, metric=None):
    if isinstance(data, Dataset):
        return Dataset(rows, metric or data.metric, data.name)
    return rows


def gen_uniform(n: int, m: int, seed=None, metric: Metric = EUCLIDEAN, name: str | None = None) -> Dataset:
    """i.i.d. uniform ``[0, 1)`` entries."""
    if n < 1 or m < 1:
        raise ValueError(f"need n, m >= 1, got n={n}, m={m}")
    X = np.random.default_rng(seed).random((n, m))
    if metric.needs_probability:
        X = X / X.sum(axis=1, keepdims=True)
    return Dataset(X, metric, name or f"uniform-{m}d")


def gen_gaussian(n: int, m: int, seed=None, metric: Metric = EUCLIDEAN, name: str | None = None) -> Dataset:
    """i.i.d. standard normal entries (absolute values when a probability metric needs them)."""
    if n < 1 or m < 1:
        raise ValueError(f"need n, m >= 1, got n={n}, m={m}")
    X = np.random.default_rng(seed).standard_normal((n, m))
    if metric.needs_probability:
        X = np.abs(X)
        X = X / X.sum(axis=1, keepdims=True)
    return Dataset(X, metric, name or f"gaussian-{m}d")


def l1_normalize(data):
    """Scale each nonnegative row to sum 1."""
    X = _rows(data)
    if np.any(X < 0):
        raise DomainError("l1 normalisation needs nonnegative rows")
    s = X.sum(axis=1, keepdims=True)
    if np.any(s == 0):
        raise DomainError(f"row {int(np.flatnonzero(s == 0)[0])} is all zero")
    return _rewrap(data, X / s)


def l2_normalize(data):
    """Scale each row to unit Euclidean norm."""
    X = _rows(data)
    s = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(s == 0):
        raise DomainError(f"row {int(np.flatnonzero(s == 0)[0])} is all zero")
    return _rewrap(data, X / s)


# fvecs: per record, int32 LE dimension then that many float32 LE values


def load_fvecs(path, metric: Metric = EUCLIDEAN, name: str | None = None) -> Dataset:
    raw = open(path, "rb").read()
    if not raw:
        raise FormatError(f"{path}: empty file")
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated header in record 0")
    (dim,) = struct.unpack_from("<i", raw, 0)
    if dim < 1:
        raise FormatError(f"{path}: record 0 has dimension {dim}")
    rec = 4 + 4 * dim
    n, tail = divmod(len(raw), rec)
    a = np.frombuffer(raw[: n * rec], dtype="<i4").reshape(n, dim + 1)
    bad = np.flatnonzero(a[:, 0] != dim)
    if bad.size:
        i = int(bad[0])
        raise FormatError(f"{path}: record {i} has dimension {int(a[i, 0])}, expected {dim}")
    if tail:
        raise FormatError(f"{path}: record {n} is truncated ({tail} trailing bytes)")
    X = a[:, 1:].copy().view("<f4").astype(np.float64)
    return Dataset(X, metric, name or os.path.basename(str(path)))


def write_fvecs(path, data) -> None:
    X = np.asarray(_rows(data), dtype="<f4")
    n, m = X.shape
    out = np.empty((n, m + 1), dtype="<i4")
    out[:, 0] = m
    out[:, 1:] = X.view("<i4")
    with open(path, "wb") as f:
        f.write(out.tobytes())


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(path, metric: Metric = EUCLIDEAN, name: str | None = None) -> Dataset:
    """Comma-separated reals; a first row that is not all numeric is a header."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise FormatError(f"{path}: no data rows")
    m = len(rows[0])
    X = np.empty((len(rows), m))
    for i, r in enumerate(rows):
        if len(r) != m:
            raise FormatError(f"{path}: row {i} has {len(r)} fields, expected {m}")
        for j, c in enumerate(r):
            try:
                X[i, j] = float(c)
            except ValueError:
                raise FormatError(f"{path}: row {i} column {j}: {c!r} is not a number") from None
    return Dataset(X, metric, name or os.path.basename(str(path)))


def write_csv(path, data, header=None) -> None:
    X = _rows(data)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for r in X:
        w.writerow([repr(float(v)) for v in r])
    with open(path, "w", newline="") as f:
        f.write(buf.getvalue())


def load(path, metric: Metric = EUCLIDEAN) -> Dataset:
    """Dispatch on extension: ``.fvecs`` or CSV."""
    if str(path).endswith(".fvecs"):
        return load_fvecs(path, metric)
    return load_csv(path, metric)


def sample_witness(dataset, witness_size: int, eval_size: int, seed=None) -> WitnessSplit:
    """Disjoint uniformly sampled witness and evaluation index sets."""
    n = len(dataset) if isinstance(dataset, Dataset) else int(dataset) if np.isscalar(dataset) else len(dataset)
    if witness_size < 0 or eval_size < 0 or witness_size + eval_size > n:
        raise ValueError(f"witness {witness_size} + evaluation {eval_size} exceeds n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return WitnessSplit(perm[:witness_size], perm[witness_size : witness_size + eval_size], seed)


def _knn_one(D_row, ids, K, exclude):
    d = D_row
    if exclude is not None:
        keep = ids != exclude
        d, ids = d[keep], ids[keep]
    if K < d.size:
        # everything strictly below the K-th value plus all ties at it
        kth = np.partition(d, K - 1)[K - 1]
        sel = d <= kth
        d, ids = d[sel], ids[sel]
    order = np.lexsort((ids, d))[:K]
    return ids[order]


def knn_ground_truth(corpus, query_indices, K: int, metric: Metric | None = None,
                     queries=None, workers: int = 1, chunk: int = 16) -> np.ndarray:
    """``K`` nearest corpus ids per query, ascending (distance, id).

    Queries are corpus rows ``query_indices`` (excluded from their own list)
    unless explicit ``queries`` vectors are given. Output is independent of
    ``workers``.
    """
    X = _rows(corpus)
    if metric is None:
        metric = corpus.metric if isinstance(corpus, Dataset) else EUCLIDEAN
    qi = np.asarray(query_indices, dtype=np.intp).ravel()
    Q = X[qi] if queries is None else metric.prepare(np.atleast_2d(queries))
    available = X.shape[0] - (1 if queries is None else 0)
    if not 1 <= K <= available:
        raise ValueError(f"K={K} must be in 1..{available}")
    ids = np.arange(X.shape[0])

    def block(s):
        D = metric.cross(Q[s : s + chunk], X, prepared=True)
        return [
            _knn_one(D[r], ids, K, qi[s + r] if queries is None else None)
            for r in range(D.shape[0])
        ]

    starts = range(0, Q.shape[0], chunk)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(block, starts))
    else:
        parts = [block(s) for s in starts]
    return np.array([row for p in parts for row in p], dtype=np.int64).reshape(-1, K)
