"""Simplex construction and the nSimplex transform.

A set of ``k`` reference objects from any Hilbert-embeddable metric space is
laid out as a base simplex in ``R^(k-1)``: a lower-triangular coordinate matrix
whose row distances reproduce the reference distances. Any further object is
mapped to the apex it forms over that base, a point of ``R^k`` whose last
coordinate is its (nonnegative) altitude. Three distance estimators act on
pairs of apexes:

* ``lwb``: plain Euclidean distance, a lower bound of the true distance;
* ``upb``: distance to the apex reflected through the base hyperplane, an
  upper bound;
* ``zen``: distance when the two apexes are taken to be perpendicular, which
  is the estimate high-dimensional angle concentration favours.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import Metric

__all__ = [
    "DEGENERACY_TOLERANCE",
    "EMBED_TOLERANCE",
    "DegenerateSimplex",
    "NotEmbeddable",
    "BaseSimplex",
    "NSimplexTransform",
    "build_base_simplex",
    "apex_addition",
    "apex_addition_batch",
    "fit",
    "fit_random",
    "transform",
    "reduced_distances",
    "estimates",
    "cross_estimates",
    "implied_cos_theta",
]

DEGENERACY_TOLERANCE = 1e-10
EMBED_TOLERANCE = 1e-7


class DegenerateSimplex(ValueError):
    """A base altitude is (numerically) zero; the references do not span."""


class NotEmbeddable(ValueError):
    """Distances cannot be realised in Euclidean space (negative radicand)."""


@dataclass(frozen=True)
class BaseSimplex:
    """Lower-triangular vertex coordinates, shape ``(k, k-1)``.

    ``coords[i, j] == 0`` for ``j >= i`` and ``coords[i, i-1] >= 0`` is the
    altitude of vertex ``i`` over the simplex of the vertices before it.
    """

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != c.shape[0] - 1:
            raise ValueError(f"base simplex must have shape (k, k-1), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def ref_count(self) -> int:
        return self.coords.shape[0]

    @property
    def altitudes(self) -> np.ndarray:
        k = self.ref_count
        return self.coords[np.arange(1, k), np.arange(0, k - 1)]

    def vertex_distances(self) -> np.ndarray:
        """Pairwise l2 distances between the rows (all rows share width k-1)."""
        c = self.coords
        diff = c[:, None, :] - c[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _base_array(base) -> np.ndarray:
    return base.coords if isinstance(base, BaseSimplex) else np.asarray(base, dtype=np.float64)


def apex_addition_batch(base, distances) -> np.ndarray:
    """Apex coordinates for many objects at once.

    ``base`` has ``n`` rows and ``n-1`` columns; ``distances`` has shape
    ``(p, n)`` with ``distances[:, i]`` the distance to vertex ``i``. Returns a
    ``(p, n)`` array whose last column is the nonnegative altitude.
    """
    B = _base_array(base)
    n = B.shape[0]
    D = np.atleast_2d(np.asarray(distances, dtype=np.float64))
    if B.shape != (n, n - 1):
        raise ValueError(f"base must have shape (n, n-1), got {B.shape}")
    if D.shape[1] != n:
        raise ValueError(f"expected {n} distances per object, got {D.shape[1]}")
    if np.any(D < 0) or not np.all(np.isfinite(D)):
        raise ValueError("distances must be finite and nonnegative")

    p = D.shape[0]
    out = np.zeros((p, n))
    out[:, 0] = D[:, 0]
    # absolute scale for the embedding tolerance: largest squared length in play
    scale = np.maximum(D.max(axis=1) ** 2, np.max(np.einsum("ij,ij->i", B, B)))
    for i in range(1, n):
        row = B[i, :i]
        diff = row[None, :] - out[:, :i]
        l2 = np.einsum("ij,ij->i", diff, diff)
        delta = D[:, i]
        x = B[i, i - 1]
        if x <= DEGENERACY_TOLERANCE:
            raise DegenerateSimplex(f"base altitude {i} is {x:.3e}")
        y = out[:, i - 1].copy()
        o = y - (delta * delta - l2) / (2.0 * x)
        out[:, i - 1] = o
        # (y - o)(y + o) == y^2 - o^2 with less cancellation
        rad = (y - o) * (y + o)
        if np.any(rad < -EMBED_TOLERANCE * scale):
            j = int(np.argmin(rad + EMBED_TOLERANCE * scale))
            raise NotEmbeddable(
                f"object {j}: radicand {rad[j]:.3e} at coordinate {i} "
                "(distances violate the n-point property)"
            )
        out[:, i] = np.sqrt(np.maximum(rad, 0.0))
    return out


def apex_addition(base, distances) -> np.ndarray:
    """Apex of one new point over ``base`` given its distances to each vertex."""
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1:
        raise ValueError("distances must be a 1-d sequence")
    return apex_addition_batch(base, d[None, :])[0]


def build_base_simplex(distances) -> BaseSimplex:
    """Lay out ``k`` points with the given distance matrix as a simplex."""
    D = np.asarray(distances, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got {D.shape}")
    k = D.shape[0]
    if k < 2:
        raise ValueError("need at least two reference points")
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise ValueError("distances must be finite and nonnegative")
    if np.any(np.diag(D) != 0):
        raise ValueError("distance matrix must have a zero diagonal")
    if np.max(np.abs(D - D.T)) > 1e-12 * max(1.0, D.max()):
        raise ValueError("distance matrix is not symmetric")

    S = np.zeros((k, k - 1))
    S[1, 0] = D[1, 0]
    if S[1, 0] <= DEGENERACY_TOLERANCE:
        raise DegenerateSimplex("references 0 and 1 coincide")
    for j in range(2, k):
        S[j, :j] = apex_addition(S[:j, : j - 1], D[j, :j])
        if S[j, j - 1] <= DEGENERACY_TOLERANCE:
            raise DegenerateSimplex(f"reference {j} lies in the span of the previous ones")
    return BaseSimplex(S)


@dataclass(frozen=True, eq=False)
class NSimplexTransform:
    """Reference objects, their metric and their base simplex.

    Immutable once fitted; :meth:`transform` is pure and thread-safe.
    """

    metric: Metric
    references: np.ndarray
    base: BaseSimplex
    reference_distances: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        R = np.array(self.references, dtype=np.float64)
        R.setflags(write=False)
        object.__setattr__(self, "references", R)
        if self.base.ref_count != R.shape[0]:
            raise ValueError("base simplex and reference set disagree on k")

    @property
    def target_dim(self) -> int:
        return self.base.ref_count

    def distances_to_references(self, X) -> np.ndarray:
        X = self.metric.prepare(np.atleast_2d(X))
        return self.metric.cross(X, self.references, prepared=True)

    def transform(self, X, chunk: int = 4096) -> np.ndarray:
        """Map rows of X (or a single vector) to apex coordinates in R^k."""
        one = np.ndim(X) == 1
        X = np.atleast_2d(X)
        out = np.empty((X.shape[0], self.target_dim))
        for s in range(0, X.shape[0], chunk):
            D = self.distances_to_references(X[s : s + chunk])
            out[s : s + chunk] = apex_addition_batch(self.base, D)
        return out[0] if one else out


def fit(references, metric: Metric) -> NSimplexTransform:
    """Build the transform for an ordered sequence of reference objects."""
    R = metric.prepare(np.atleast_2d(np.asarray(references, dtype=np.float64)))
    if R.shape[0] < 2:
        raise ValueError("need at least two references")
    D = metric.pdist(R, prepared=True)
    return NSimplexTransform(metric, R, build_base_simplex(D), D)


def fit_random(pool, k: int, metric: Metric, rng=None, max_attempts: int = 10) -> NSimplexTransform:
    """Fit on ``k`` references drawn uniformly without replacement from ``pool``.

    Re-draws on :class:`DegenerateSimplex`, up to ``max_attempts`` times.
    """
    pool = np.asarray(pool, dtype=np.float64)
    if k > pool.shape[0]:
        raise ValueError(f"cannot draw {k} references from {pool.shape[0]} objects")
    rng = np.random.default_rng(rng)
    last = None
    for _ in range(max_attempts):
        idx = rng.choice(pool.shape[0], size=k, replace=False)
        try:
            return fit(pool[idx], metric)
        except DegenerateSimplex as e:
            last = e
    raise DegenerateSimplex(f"no usable reference set after {max_attempts} attempts: {last}")


def transform(t: NSimplexTransform, u) -> np.ndarray:
    return t.transform(u)


def _split(X, Y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[-1] != Y.shape[-1]:
        raise ValueError(f"dimension mismatch: {X.shape[-1]} vs {Y.shape[-1]}")
    return X, Y


def estimates(X, Y):
    """Row-wise ``(lwb, zen, upb)`` for paired apex arrays of equal shape."""
    X, Y = _split(X, Y)
    d = X[:, :-1] - Y[:, :-1]
    base_dist = np.einsum("ij,ij->i", d, d)
    a, b = X[:, -1], Y[:, -1]
    lwb = np.sqrt(base_dist + (a - b) ** 2)
    zen = np.sqrt(base_dist + a * a + b * b)
    upb = np.sqrt(base_dist + (a + b) ** 2)
    return lwb, zen, upb


def cross_estimates(X, Y, which: str = "zen") -> np.ndarray:
    """Estimator matrix between every row of X and every row of Y."""
    X, Y = _split(X, Y)
    bx, by = X[:, :-1], Y[:, :-1]
    base_dist = (
        np.einsum("ij,ij->i", bx, bx)[:, None]
        + np.einsum("ij,ij->i", by, by)[None, :]
        - 2.0 * bx @ by.T
    )
    np.maximum(base_dist, 0.0, out=base_dist)
    a, b = X[:, -1][:, None], Y[:, -1][None, :]
    if which == "zen":
        sq = base_dist + a * a + b * b
    elif which == "lwb":
        sq = base_dist + (a - b) ** 2
    elif which == "upb":
        sq = base_dist + (a + b) ** 2
    else:
        raise ValueError(f"unknown estimator {which!r}")
    return np.sqrt(sq)


def reduced_distances(x, y) -> tuple[float, float, float]:
    """``(lwb, zen, upb)`` for two apex points."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"expected two vectors of equal length, got {x.shape} and {y.shape}")
    lwb, zen, upb = estimates(x, y)
    return float(lwb[0]), float(zen[0]), float(upb[0])


def implied_cos_theta(x, y, true_d: float) -> float:
    """Cosine of the rotation angle that makes the apexes ``true_d`` apart."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    a, b = x[-1], y[-1]
    if a <= 0 or b <= 0:
        raise ValueError("angle undefined: an apex has zero altitude")
    _, zen, _ = reduced_distances(x, y)
    return float((zen * zen - true_d * true_d) / (2.0 * a * b))
