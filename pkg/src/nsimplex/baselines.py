"""Comparison transforms: random projection, PCA, classical MDS, Landmark MDS.

RP, PCA and the extended MDS all reduce to a :class:`LinearTransform`
(``(x - centering) @ matrix * scale + offset``). LMDS works from distances only
and therefore applies to any metric.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .metrics import Metric

__all__ = [
    "EIGEN_RELATIVE_TOLERANCE",
    "RankDeficiencyWarning",
    "LinearTransform",
    "LMDSTransform",
    "rp_fit",
    "pca_fit",
    "pca_spectrum",
    "dimension_for_variance",
    "mds_fit",
    "mds_extend",
    "lmds_fit",
    "lmds_transform",
    "apply_linear",
]

EIGEN_RELATIVE_TOLERANCE = 1e-10


class RankDeficiencyWarning(UserWarning):
    """Fewer independent directions than requested; trailing axes are arbitrary."""


@dataclass(frozen=True, eq=False)
class LinearTransform:
    matrix: np.ndarray
    centering: np.ndarray | None = None
    scale: float = 1.0
    offset: np.ndarray | None = None
    rank_deficient: bool = False

    def __post_init__(self):
        M = np.array(self.matrix, dtype=np.float64, order="C")
        if M.ndim != 2:
            raise ValueError(f"matrix must be 2-d, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix has non-finite entries")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        for name, size in (("centering", M.shape[0]), ("offset", M.shape[1])):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=np.float64).ravel()
                if v.size != size:
                    raise ValueError(f"{name} has length {v.size}, expected {size}")
                v.setflags(write=False)
                object.__setattr__(self, name, v)

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[1]

    def transform(self, X) -> np.ndarray:
        return apply_linear(self, X)


def apply_linear(t: LinearTransform, data) -> np.ndarray:
    """Project rows of ``data`` (or one vector) through ``t``."""
    X = np.asarray(data, dtype=np.float64)
    one = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != t.input_dim:
        raise ValueError(f"data has dimension {X.shape[1]}, transform expects {t.input_dim}")
    # row-by-row so a single-row call is bit-identical to the batch row
    Y = np.empty((X.shape[0], t.target_dim))
    c = t.centering
    for i in range(X.shape[0]):
        x = X[i] - c if c is not None else X[i]
        Y[i] = x @ t.matrix
    if t.scale != 1.0:
        Y *= t.scale
    if t.offset is not None:
        Y += t.offset
    return Y[0] if one else Y


def apply_linear_fast(t: LinearTransform, data) -> np.ndarray:
    """Single matrix product over the whole batch (not bit-matched to rows)."""
    X = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if t.centering is not None:
        X = X - t.centering
    Y = X @ t.matrix
    if t.scale != 1.0:
        Y *= t.scale
    if t.offset is not None:
        Y += t.offset
    return Y


def rp_fit(m: int, k: int, seed=None) -> LinearTransform:
    """Achlioptas projection: entries sqrt(3) * {+1, 0, -1} w.p. 1/6, 2/3, 1/6.

    The 1/sqrt(k) factor that preserves expected squared norms is held in
    ``scale`` so the stored matrix keeps the raw three-valued entries.
    """
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    rng = np.random.default_rng(seed)
    draw = rng.integers(0, 6, size=(m, k))
    R = np.zeros((m, k))
    R[draw == 0] = np.sqrt(3.0)
    R[draw == 1] = -np.sqrt(3.0)
    return LinearTransform(R, None, scale=1.0 / np.sqrt(k))


def pca_spectrum(witness):
    """Eigenvalues (descending), eigenvectors and mean of the witness covariance."""
    X = np.asarray(witness, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("witness must be an (n, m) matrix with n >= 2")
    if not np.all(np.isfinite(X)):
        raise ValueError("witness contains NaN or Inf")
    mean = X.mean(axis=0)
    Xc = X - mean
    C = Xc.T @ Xc / (X.shape[0] - 1)
    w, V = np.linalg.eigh(C)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    w[w < EIGEN_RELATIVE_TOLERANCE * max(w[0], 0.0)] = 0.0
    return w, V, mean


def dimension_for_variance(witness, fraction: float = 0.8) -> int:
    """Smallest k whose leading components explain at least ``fraction``."""
    w, _, _ = pca_spectrum(witness)
    cum = np.cumsum(w) / w.sum()
    return int(np.searchsorted(cum, fraction - 1e-12) + 1)


def pca_fit(witness, k: int):
    """Principal-component projection fitted on ``witness``.

    Returns ``(transform, explained)`` where ``explained`` is the share of
    total variance carried by the first ``k`` components.
    """
    X = np.asarray(witness, dtype=np.float64)
    n, m = X.shape
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if n <= k:
        raise ValueError(f"need more witness rows than k (n={n}, k={k})")
    w, V, mean = pca_spectrum(X)
    total = w.sum()
    explained = float(w[:k].sum() / total) if total > 0 else 1.0
    deficient = bool(np.count_nonzero(w) < k)
    if deficient:
        warnings.warn(
            f"witness has rank {np.count_nonzero(w)} < k={k}; trailing components are arbitrary",
            RankDeficiencyWarning,
        )
    return LinearTransform(V[:, :k], mean, rank_deficient=deficient), explained


def _classical_embedding(sq, k: int):
    """Double-centred eigen-embedding of a squared-distance matrix."""
    n = sq.shape[0]
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ sq @ J
    B = 0.5 * (B + B.T)
    w, V = np.linalg.eigh(B)
    order = np.argsort(w)[::-1][:k]
    w, V = w[order], V[:, order]
    top = max(w[0], 0.0) if w.size else 0.0
    w = np.where(w > EIGEN_RELATIVE_TOLERANCE * top, w, 0.0)
    return w, V


def mds_fit(witness_distances, k: int) -> np.ndarray:
    """Classical MDS embedding (n, k) of a symmetric zero-diagonal matrix.

    Non-positive eigenvalues (non-Euclidean input, or rank below k) give zero
    columns.
    """
    D = np.asarray(witness_distances, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got {D.shape}")
    if np.max(np.abs(D - D.T)) > 1e-9 * max(1.0, np.abs(D).max()) or np.any(np.diag(D) != 0):
        raise ValueError("distance matrix must be symmetric with a zero diagonal")
    if not 1 <= k <= D.shape[0]:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    w, V = _classical_embedding(D * D, k)
    return V * np.sqrt(w)


def mds_extend(witness, embedding) -> LinearTransform:
    """Linear out-of-sample map into an MDS space.

    An orthogonal Procrustes fit with uniform scaling maps the embedding back
    onto the (centred) witness coordinates; the pseudo-inverse of that map
    sends new m-vectors into the embedding space.
    """
    X = np.asarray(witness, dtype=np.float64)
    Y = np.asarray(embedding, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("witness and embedding must have the same number of rows")
    mx, my = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - mx, Y - my
    U, S, Wt = np.linalg.svd(Yc.T @ Xc, full_matrices=False)
    R = U @ Wt  # (k, m), orthonormal rows when k <= m
    ny = float(np.sum(Yc * Yc))
    s = float(S.sum() / ny) if ny > 0 else 1.0
    rank = np.count_nonzero(S > EIGEN_RELATIVE_TOLERANCE * (S[0] if S.size else 0.0))
    deficient = bool(rank < Y.shape[1])
    if deficient:
        warnings.warn(f"Procrustes fit has rank {rank} < k={Y.shape[1]}", RankDeficiencyWarning)
    P = np.linalg.pinv(s * R)  # (m, k)
    return LinearTransform(P, mx, offset=my, rank_deficient=deficient)


@dataclass(frozen=True, eq=False)
class LMDSTransform:
    landmarks: np.ndarray
    metric: Metric
    landmark_embedding: np.ndarray
    mean_sq_landmark_dists: np.ndarray
    pseudo_inverse_factor: np.ndarray
    rank_deficient: bool = False
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def target_dim(self) -> int:
        return self.landmark_embedding.shape[1]

    def transform(self, X, chunk: int = 4096) -> np.ndarray:
        one = np.ndim(X) == 1
        X = self.metric.prepare(np.atleast_2d(X))
        out = np.empty((X.shape[0], self.target_dim))
        for s in range(0, X.shape[0], chunk):
            D = self.metric.cross(X[s : s + chunk], self.landmarks, prepared=True)
            out[s : s + chunk] = -0.5 * (D * D - self.mean_sq_landmark_dists) @ self.pseudo_inverse_factor.T
        return out[0] if one else out


def lmds_fit(landmarks, metric: Metric, k: int) -> LMDSTransform:
    """Classical MDS on the landmarks plus the triangulation operator."""
    L = metric.prepare(np.atleast_2d(np.asarray(landmarks, dtype=np.float64)))
    l = L.shape[0]
    if not 1 <= k < l:
        raise ValueError(f"need 1 <= k < number of landmarks, got k={k}, l={l}")
    D = metric.pdist(L, prepared=True)
    sq = D * D
    w, V = _classical_embedding(sq, k)
    positive = w > 0
    off_diag = D[~np.eye(l, dtype=bool)]
    deficient = bool(np.any(off_diag == 0) or positive.sum() < k)
    if deficient:
        warnings.warn(
            f"landmark configuration is rank deficient ({positive.sum()} positive eigenvalues, "
            f"{int(np.sum(off_diag == 0) // 2)} duplicate pairs)",
            RankDeficiencyWarning,
        )
    emb = V * np.sqrt(w)
    inv = np.zeros_like(V)
    inv[:, positive] = V[:, positive] / np.sqrt(w[positive])
    return LMDSTransform(
        landmarks=L,
        metric=metric,
        landmark_embedding=emb,
        mean_sq_landmark_dists=sq.mean(axis=0),
        pseudo_inverse_factor=inv.T,
        rank_deficient=deficient,
        eigenvalues=w,
    )


def lmds_transform(t: LMDSTransform, u) -> np.ndarray:
    return t.transform(u)
