"""Hilbert-embeddable distance functions over real vectors.

Five metrics are provided, each usable as a plain function on two vectors or
through a :class:`Metric` object, which adds input validation and vectorised
``cross`` / ``paired`` evaluation over row matrices.

Conventions:

* ``h(0) = 0`` in the Jensen-Shannon entropy term, ``0/0 = 0`` in the
  triangular term. For unit-sum rows ``1 - 1/2 sum(h(v) + h(w) - h(v + w))``
  equals ``1/2 sum(v log2(2v / (v + w)) + w log2(2w / (v + w)))``; the second
  form is used because it is exactly zero when ``v == w``.
* Probability inputs (Jensen-Shannon, triangular) must be nonnegative and sum
  to one within ``L1_TOLERANCE``; inputs inside the tolerance are renormalised.
* Radicands in ``[-RADICAND_TOLERANCE, 0)`` are clamped to zero before the
  square root; anything more negative raises :class:`RadicandError`.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "KINDS",
    "L1_TOLERANCE",
    "RADICAND_TOLERANCE",
    "DomainError",
    "RadicandError",
    "Metric",
    "euclidean",
    "cosine_l2normed",
    "jensen_shannon",
    "triangular",
    "quadratic_form",
]

L1_TOLERANCE = 1e-9
RADICAND_TOLERANCE = 1e-12
_LN2 = math.log(2.0)

KINDS = ("euclidean", "cosine", "jsd", "triangular", "quadratic_form")
_ALIASES = {
    "euclidean": "euclidean",
    "l2": "euclidean",
    "cosine": "cosine",
    "cosine_l2normed": "cosine",
    "jsd": "jsd",
    "jensen_shannon": "jsd",
    "jensen-shannon": "jsd",
    "triangular": "triangular",
    "quadratic_form": "quadratic_form",
    "qf": "quadratic_form",
}


class DomainError(ValueError):
    """Input vectors violate the metric's domain constraints."""


class RadicandError(ArithmeticError):
    """A squared distance came out negative beyond floating-point noise."""


def _sqrt_clamped(r):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < -RADICAND_TOLERANCE):
        raise RadicandError(f"negative radicand {r.min():.3e}")
    return np.sqrt(np.maximum(r, 0.0))


def _jsd_half(x, y):
    # x log2(2x / (x + y)) with 0 log 0 = 0; log1p keeps x == y exactly zero
    s = x + y
    out = np.zeros(np.broadcast(x, y).shape)
    pos = np.broadcast_to(x > 0, out.shape)
    xb, sb = np.broadcast_to(x, out.shape), np.broadcast_to(s, out.shape)
    yb = np.broadcast_to(y, out.shape)
    out[pos] = xb[pos] * np.log1p((xb[pos] - yb[pos]) / sb[pos]) / _LN2
    return out


def _jsd_radicand(X, Y):
    # 1 - 1/2 sum(h(x) + h(y) - h(x + y)) rewritten for unit-sum rows
    return 0.5 * (_jsd_half(X, Y) + _jsd_half(Y, X)).sum(axis=1)


def _as_rows(x, name="data"):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] < 1:
        raise DomainError(f"{name} must be a vector or a 2-d row matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains NaN or Inf")
    return a


def _check_probability(a):
    if np.any(a < 0):
        raise DomainError("probability vector has a negative component")
    sums = a.sum(axis=1)
    bad = np.abs(sums - 1.0) > L1_TOLERANCE
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DomainError(f"row {i} sums to {sums[i]!r}, not 1 within {L1_TOLERANCE}")
    return a / sums[:, None]


class Metric:
    """A named distance function plus its domain constraints.

    ``kind`` is one of :data:`KINDS` (aliases such as ``"jensen_shannon"`` are
    accepted). ``qf_matrix`` is required for, and only allowed with, the
    quadratic-form metric; it must be symmetric PSD.
    """

    def __init__(self, kind: str, qf_matrix=None):
        try:
            kind = _ALIASES[kind.lower()]
        except KeyError:
            raise ValueError(f"unknown metric kind {kind!r}; expected one of {KINDS}") from None
        self.kind = kind
        self._factor = None
        if kind == "quadratic_form":
            if qf_matrix is None:
                raise ValueError("quadratic_form metric needs qf_matrix")
            M = np.array(qf_matrix, dtype=np.float64)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ValueError(f"qf_matrix must be square, got {M.shape}")
            if not np.all(np.isfinite(M)):
                raise ValueError("qf_matrix has non-finite entries")
            if np.max(np.abs(M - M.T)) > 1e-12:
                raise ValueError("qf_matrix is not symmetric")
            w, V = np.linalg.eigh(M)
            if w.min() < -1e-10:
                raise ValueError(f"qf_matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
            # M = F^T F, so (v-w)^T M (v-w) = |F (v-w)|^2 is never negative
            self._factor = np.sqrt(np.clip(w, 0.0, None))[:, None] * V.T
            M.setflags(write=False)
            self.qf_matrix = M
        elif qf_matrix is not None:
            raise ValueError(f"qf_matrix given for a {kind} metric")
        else:
            self.qf_matrix = None

    def __repr__(self):
        if self.qf_matrix is None:
            return f"Metric({self.kind!r})"
        return f"Metric('quadratic_form', dim={self.qf_matrix.shape[0]})"

    def __eq__(self, other):
        if not isinstance(other, Metric) or other.kind != self.kind:
            return False
        if self.qf_matrix is None:
            return other.qf_matrix is None
        return other.qf_matrix is not None and np.array_equal(self.qf_matrix, other.qf_matrix)

    def __hash__(self):
        return hash(self.kind)

    @property
    def needs_probability(self) -> bool:
        return self.kind in ("jsd", "triangular")

    @property
    def has_coordinates(self) -> bool:
        """True when distances are plain Euclidean over the stored vectors."""
        return self.kind == "euclidean"

    def prepare(self, x) -> np.ndarray:
        """Validate rows for this metric and return them as float64.

        Probability rows are renormalised; cosine rows are checked for zeros.
        A 1-d input comes back 1-d.
        """
        one = np.ndim(x) == 1
        a = _as_rows(x)
        if self.needs_probability:
            a = _check_probability(a)
        elif self.kind == "cosine":
            if np.any(np.all(a == 0, axis=1)):
                raise DomainError("cosine distance is undefined for a zero vector")
        elif self.kind == "quadratic_form" and a.shape[1] != self.qf_matrix.shape[0]:
            raise DomainError(f"dimension {a.shape[1]} does not match qf_matrix {self.qf_matrix.shape}")
        return a[0] if one else a

    def _radicands(self, X, y):
        # X: (n, m) prepared rows, y: (m,) prepared row
        if self.kind == "euclidean":
            d = X - y
            return np.einsum("ij,ij->i", d, d)
        if self.kind == "cosine":
            # both sides normalised by the same code path so d(u,v) == d(v,u) exactly
            Xn = X / np.linalg.norm(X, axis=1)[:, None]
            yn = y[None, :] / np.linalg.norm(y[None, :], axis=1)[:, None]
            d = Xn - yn
            return np.einsum("ij,ij->i", d, d)
        if self.kind == "jsd":
            return _jsd_radicand(X, y[None, :])
        if self.kind == "triangular":
            num = (X - y) ** 2
            den = X + y
            q = np.zeros_like(num)
            np.divide(num, den, out=q, where=den > 0)
            return 0.5 * q.sum(axis=1)
        d = (X - y) @ self._factor.T
        return np.einsum("ij,ij->i", d, d)

    def _check_dims(self, X, Y):
        if X.shape[1] != Y.shape[1]:
            raise DomainError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")

    def __call__(self, u, v) -> float:
        U = self.prepare(_as_rows(u, "u"))
        V = self.prepare(_as_rows(v, "v"))
        self._check_dims(U, V)
        return float(_sqrt_clamped(self._radicands(U, V[0]))[0])

    def cross(self, X, Y, prepared: bool = False) -> np.ndarray:
        """Distance matrix of shape (len(X), len(Y))."""
        if not prepared:
            X, Y = self.prepare(_as_rows(X)), self.prepare(_as_rows(Y))
        else:
            X, Y = np.atleast_2d(X), np.atleast_2d(Y)
        self._check_dims(X, Y)
        out = np.empty((X.shape[0], Y.shape[0]))
        # loop over the shorter side; radicands are exactly symmetric
        if Y.shape[0] <= X.shape[0]:
            for j in range(Y.shape[0]):
                out[:, j] = self._radicands(X, Y[j])
        else:
            for i in range(X.shape[0]):
                out[i, :] = self._radicands(Y, X[i])
        return _sqrt_clamped(out)

    def paired(self, X, Y, prepared: bool = False) -> np.ndarray:
        """Row-wise distances ``d(X[i], Y[i])``."""
        if not prepared:
            X, Y = self.prepare(_as_rows(X)), self.prepare(_as_rows(Y))
        self._check_dims(X, Y)
        if X.shape != Y.shape:
            raise DomainError(f"paired inputs differ in shape: {X.shape} vs {Y.shape}")
        if self.kind == "euclidean":
            d = X - Y
            r = np.einsum("ij,ij->i", d, d)
        elif self.kind == "cosine":
            d = X / np.linalg.norm(X, axis=1)[:, None] - Y / np.linalg.norm(Y, axis=1)[:, None]
            r = np.einsum("ij,ij->i", d, d)
        elif self.kind == "jsd":
            r = _jsd_radicand(X, Y)
        elif self.kind == "triangular":
            num = (X - Y) ** 2
            den = X + Y
            q = np.zeros_like(num)
            np.divide(num, den, out=q, where=den > 0)
            r = 0.5 * q.sum(axis=1)
        else:
            d = (X - Y) @ self._factor.T
            r = np.einsum("ij,ij->i", d, d)
        return _sqrt_clamped(r)

    def pdist(self, X, prepared: bool = False) -> np.ndarray:
        """Full symmetric distance matrix among the rows of X, zero diagonal."""
        if not prepared:
            X = self.prepare(_as_rows(X))
        D = self.cross(X, X, prepared=True)
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
        return D


EUCLIDEAN = Metric("euclidean")
COSINE = Metric("cosine")
JSD = Metric("jsd")
TRIANGULAR = Metric("triangular")


def euclidean(u, v) -> float:
    return EUCLIDEAN(u, v)


def cosine_l2normed(u, v) -> float:
    """Euclidean distance between the l2-normalised vectors, in [0, 2]."""
    return COSINE(u, v)


def jensen_shannon(u, v) -> float:
    """Jensen-Shannon distance (base-2), in [0, 1]."""
    return JSD(u, v)


def triangular(u, v) -> float:
    return TRIANGULAR(u, v)


def quadratic_form(M) -> Metric:
    """Quadratic-form distance ``sqrt((u-v)^T M (u-v))`` as a callable metric."""
    return Metric("quadratic_form", M)
