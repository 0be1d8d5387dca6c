"""Quality measures for a dimensionality-reducing transform.

All measures compare a sample of original distances ``delta`` with the
corresponding reduced distances ``zeta``:

* Kruskal stress-1 against an isotonic (monotone) fit, so only the ordering
  relation between the two matters;
* Sammon stress and quadratic loss, which see absolute differences;
* Spearman rho over the two rankings of the pairs;
* a DCG-style kNN recall over logistic rank relevance.

Every stress/correlation can be converted to a quality in ``[0, 1]`` (1 is a
perfect reduction) with the ``*_quality`` helpers.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.stats import rankdata

__all__ = [
    "DistancePairSample",
    "QualityReport",
    "DegenerateMeasureWarning",
    "isotonic_fit",
    "kruskal_stress",
    "sammon_stress",
    "quadratic_loss",
    "normalize_quadratic",
    "spearman_rho",
    "relevance",
    "dcg",
    "ideal_dcg",
    "dcg_recall",
    "angle_distribution",
    "kruskal_quality",
    "sammon_quality",
    "spearman_quality",
    "evaluate",
]


class DegenerateMeasureWarning(UserWarning):
    """A measure is undefined on this sample and a fallback value was used."""


@dataclass(frozen=True)
class DistancePairSample:
    """Parallel arrays of original (``delta``) and reduced (``zeta``) distances."""

    delta: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        d = np.array(self.delta, dtype=np.float64).ravel()
        z = np.array(self.zeta, dtype=np.float64).ravel()
        if d.shape != z.shape:
            raise ValueError(f"delta and zeta differ in length: {d.size} vs {z.size}")
        if d.size == 0:
            raise ValueError("empty sample")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(z))):
            raise ValueError("sample contains NaN or Inf")
        if np.any(d < 0) or np.any(z < 0):
            raise ValueError("distances must be nonnegative")
        d.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "zeta", z)

    def __len__(self):
        return self.delta.size


def _sample(sample_or_delta, zeta=None) -> DistancePairSample:
    if isinstance(sample_or_delta, DistancePairSample):
        return sample_or_delta
    return DistancePairSample(sample_or_delta, zeta)


def isotonic_fit(zeta, delta) -> np.ndarray:
    """Least-squares non-decreasing fit of ``delta`` as a function of ``zeta``.

    Pairs tied in ``zeta`` are pooled first (they must share a fitted value).
    The result is returned in the input order. Swapping the arguments gives
    the stress disparities.
    """
    z = np.asarray(zeta, dtype=np.float64).ravel()
    d = np.asarray(delta, dtype=np.float64).ravel()
    if z.shape != d.shape or z.size == 0:
        raise ValueError("zeta and delta must be nonempty and of equal length")
    keys, inverse, counts = np.unique(z, return_inverse=True, return_counts=True)
    means = np.bincount(inverse, weights=d) / counts
    fitted = isotonic_regression(means, weights=counts.astype(np.float64), increasing=True).x
    return fitted[inverse]


def kruskal_stress(sample, zeta=None) -> float:
    """Stress-1: ``sqrt(sum (zeta - d*)^2 / sum zeta^2)``.

    The disparities ``d*`` are the least-squares non-decreasing fit of the
    reduced distances taken in order of the original ones, so stress is zero
    exactly when ``zeta`` is a monotone function of ``delta``, whatever its
    shape. It is unchanged by any strictly increasing transform of ``delta``
    and by positive rescaling of ``zeta``.
    """
    s = _sample(sample, zeta)
    denom = float(np.dot(s.zeta, s.zeta))
    if denom == 0:
        raise ValueError("kruskal stress undefined: all reduced distances are zero")
    r = s.zeta - isotonic_fit(s.delta, s.zeta)
    return math.sqrt(float(np.dot(r, r)) / denom)


def sammon_stress(sample, zeta=None, return_excluded: bool = False):
    """Sammon stress; pairs with zero original distance are left out."""
    s = _sample(sample, zeta)
    keep = s.delta > 0
    excluded = int(s.delta.size - keep.sum())
    if not keep.any():
        raise ValueError("sammon stress undefined: every original distance is zero")
    d, z = s.delta[keep], s.zeta[keep]
    value = float(np.sum((d - z) ** 2 / d) / np.sum(d))
    return (value, excluded) if return_excluded else value


def quadratic_loss(sample, zeta=None) -> float:
    s = _sample(sample, zeta)
    r = s.delta - s.zeta
    return float(np.dot(r, r))


def normalize_quadratic(values) -> np.ndarray:
    """Map raw losses to ``(q_max - q) / q_max`` over the given profile."""
    q = np.asarray(values, dtype=np.float64)
    finite = q[np.isfinite(q)]
    q_max = finite.max() if finite.size else 0.0
    if q_max <= 0:
        return np.where(np.isfinite(q), 1.0, np.nan)
    return np.clip((q_max - q) / q_max, 0.0, 1.0)


def spearman_rho(sample, zeta=None) -> float:
    """``1 - 6 sum (z - z_hat)^2 / (T^3 - T)`` over average ranks."""
    s = _sample(sample, zeta)
    T = s.delta.size
    if T < 2:
        raise ValueError("spearman rho needs at least two pairs")
    if np.all(s.delta == s.delta[0]) or np.all(s.zeta == s.zeta[0]):
        warnings.warn("constant sequence: spearman rho undefined, reporting 0", DegenerateMeasureWarning)
        return 0.0
    z = rankdata(s.delta)
    zh = rankdata(s.zeta)
    diff = z - zh
    return float(1.0 - 6.0 * np.dot(diff, diff) / (float(T) ** 3 - T))


def relevance(i, length: int = 1000):
    """Logistic relevance of the ``i``-th true neighbour.

    For the standard list length of 1000 this is ``1 - 1/(1 + e^-((i-500)/100))``;
    other lengths rescale the midpoint and width proportionally.
    """
    mid, width = length / 2.0, length / 10.0
    i = np.asarray(i, dtype=np.float64)
    r = 1.0 - 1.0 / (1.0 + np.exp(-(i - mid) / width))
    return float(r) if r.ndim == 0 else r


def dcg(true_nn, reduced_nn) -> float:
    """Raw discounted cumulative gain of ``reduced_nn`` against ``true_nn``.

    Each reduced-list entry earns the relevance of its (zero-based) position in
    the true list, or nothing if absent, discounted by ``log2(i + 1)`` for its
    one-based position ``i`` in the reduced list.
    """
    t = np.asarray(true_nn).ravel()
    r = np.asarray(reduced_nn).ravel()
    if t.size != r.size:
        raise ValueError(f"list lengths differ: {t.size} vs {r.size}")
    if np.unique(t).size != t.size:
        raise ValueError("true neighbour list contains duplicates")
    L = t.size
    order = np.argsort(t, kind="stable")
    st = t[order]
    loc = np.clip(np.searchsorted(st, r), 0, L - 1)
    found = st[loc] == r
    rel = np.zeros(L)
    rel[found] = relevance(order[loc[found]], L)
    gain = np.exp2(rel) - 1.0
    return float(np.sum(gain / np.log2(np.arange(1, L + 1) + 1.0)))


def ideal_dcg(length: int = 1000) -> float:
    """DCG of a perfectly ordered list (66.0435 for length 1000)."""
    rel = relevance(np.arange(length), length)
    return float(np.sum((np.exp2(rel) - 1.0) / np.log2(np.arange(1, length + 1) + 1.0)))


def dcg_recall(true_nn, reduced_nn) -> float:
    """DCG normalised into ``[0, 1]`` by the ideal value for the list length."""
    return dcg(true_nn, reduced_nn) / ideal_dcg(np.asarray(true_nn).size)


def angle_distribution(dim: int, samples: int, seed=None, mode: str = "sphere"):
    """Mean and standard deviation of a sampled angle in ``dim`` dimensions.

    ``mode="sphere"``: ``a`` and ``b`` are uniform points of the unit cube and
    ``c`` lies at distance ``|a-b|`` from ``b`` in a uniformly random direction;
    the angle is taken at ``b``. ``mode="chords"``: the angle between two
    independent difference vectors ``a-b`` and ``c-e`` of uniform cube points,
    which keeps the boundedness of the data. Returns ``(mean, std, thetas)``.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    rng = np.random.default_rng(seed)
    thetas = np.empty(samples)
    chunk = max(1, min(samples, 2_000_000 // dim))
    for s in range(0, samples, chunk):
        n = min(chunk, samples - s)
        a = rng.random((n, dim))
        b = rng.random((n, dim))
        u = a - b
        if mode == "sphere":
            v = rng.standard_normal((n, dim))
        elif mode == "chords":
            v = rng.random((n, dim)) - rng.random((n, dim))
        else:
            raise ValueError(f"unknown mode {mode!r}")
        cos = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        thetas[s : s + n] = np.arccos(np.clip(cos, -1.0, 1.0))
    return float(thetas.mean()), float(thetas.std(ddof=1)), thetas


def kruskal_quality(stress):
    return np.clip(1.0 - np.asarray(stress, dtype=np.float64), 0.0, 1.0)


def sammon_quality(stress):
    return np.clip(1.0 - np.asarray(stress, dtype=np.float64), 0.0, 1.0)


def spearman_quality(rho):
    return np.clip(np.asarray(rho, dtype=np.float64), 0.0, 1.0)


@dataclass
class QualityReport:
    """Raw measures for one (method, target dimension) cell.

    Normalised values need the profile-wide maximum quadratic loss, so they are
    produced by :meth:`normalized` rather than stored.
    """

    method: str
    k: int
    kruskal: float
    sammon: float
    quadratic_raw: float
    spearman: float
    recall: float = float("nan")
    excluded_pairs: int = 0
    extra: dict = field(default_factory=dict)

    def normalized(self, q_max: float) -> dict:
        quad = 1.0 if q_max <= 0 else float(np.clip((q_max - self.quadratic_raw) / q_max, 0.0, 1.0))
        return {
            "kruskal": float(kruskal_quality(self.kruskal)),
            "sammon": float(sammon_quality(self.sammon)),
            "quadloss": quad,
            "spearman": float(spearman_quality(self.spearman)),
            "recall": self.recall,
        }

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(method: str, k: int, sample: DistancePairSample, recall: float = float("nan")) -> QualityReport:
    """All pair-based measures for one sample."""
    sammon, excluded = sammon_stress(sample, return_excluded=True)
    return QualityReport(
        method=method,
        k=int(k),
        kruskal=kruskal_stress(sample),
        sammon=sammon,
        quadratic_raw=quadratic_loss(sample),
        spearman=spearman_rho(sample),
        recall=recall,
        excluded_pairs=excluded,
    )
