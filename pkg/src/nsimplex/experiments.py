"""Experiment runners behind the command-line interface.

Each runner takes an :class:`ExperimentConfig`, returns plain rows, and never
touches global state, so the CLI and the tests share the same calls.
Every random choice draws from a seed derived from ``(config.seed, purpose)``
so outputs do not depend on the order or parallelism of the work.
"""
from __future__ import annotations

import dataclasses
import hashlib
import logging
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines as bl
from . import data as dt
from . import quality as qm
from . import simplex as sx
from .metrics import EUCLIDEAN, Metric

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "Reducer",
    "CellResult",
    "cell_seed",
    "sample_pairs",
    "make_dataset",
    "rows_needed",
    "fit_reducer",
    "reduced_knn",
    "mean_recall",
    "run_shepard",
    "run_profile",
    "profile_rows",
    "recall_rows",
    "ground_truth",
    "make_metric",
    "run_recall",
    "run_angles",
    "run_bench",
]

METHODS = ("zen", "lwb", "upb", "pca", "mds", "lmds", "rp")
NSIMPLEX_METHODS = ("zen", "lwb", "upb")
COORDINATE_METHODS = ("pca", "mds", "rp")
# zen/lwb/upb share one family so they use the same references at a given k
_FAMILY = {"zen": 0, "lwb": 0, "upb": 0, "pca": 1, "mds": 2, "lmds": 3, "rp": 4}
_SPLIT, _PAIRS, _DATA, _SHEPARD, _QF = 100, 101, 102, 103, 104


def _int_list(v) -> tuple:
    if isinstance(v, str):
        v = [p for p in v.replace(";", ",").split(",") if p.strip()]
    return tuple(int(x) for x in v)


def _str_list(v) -> tuple:
    if isinstance(v, str):
        v = [p.strip() for p in v.replace(";", ",").split(",") if p.strip()]
    return tuple(str(x).lower() for x in v)


@dataclass
class ExperimentConfig:
    """All experiment parameters; defaults are the standard experiment sample sizes."""

    dataset: str = "uniform"  # "uniform", "gaussian" or a .fvecs/.csv path
    dim: int = 100
    metric: str = "euclidean"
    qf_matrix: str = ""  # CSV path; random PSD from the seed when empty
    methods: tuple = ("zen", "pca", "rp")
    dims: tuple = (80, 40, 20, 10, 5, 2)
    witness: int = 1000
    eval_objects: int = 10_000
    pairs: int = 100_000
    shepard_objects: int = 50
    recall_corpus: int = 1_000_000
    queries: int = 100
    neighbours: int = 1000
    profile_recall: bool = True
    lmds_landmarks: int = 0  # 0: min(witness, max(2k, 200))
    angle_dims: tuple = (10, 100, 1000)
    angle_samples: int = 100_000
    angle_bins: int = 50
    angle_mode: str = "sphere"
    bench_dims: tuple = (50, 100, 200, 400)
    bench_reps: int = 5
    bench_objects: int = 200
    seed: int = 0
    workers: int = 1
    out: str = "results"
    cache: bool = True

    def __post_init__(self):
        self.methods = _str_list(self.methods)
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown method(s) {unknown}; expected a subset of {METHODS}")
        self.methods = tuple(dict.fromkeys(self.methods))
        # dimensions: any order in, deduplicated and decreasing out
        self.dims = tuple(sorted(set(_int_list(self.dims)), reverse=True))
        self.angle_dims = tuple(sorted(set(_int_list(self.angle_dims))))
        self.bench_dims = tuple(sorted(set(_int_list(self.bench_dims))))
        if any(k < 1 for k in self.dims + self.bench_dims):
            raise ValueError("target dimensions must be positive")
        if any(m < 2 for m in self.angle_dims):
            raise ValueError("angle dimensions must be at least 2")
        for name in ("dim", "witness", "queries", "neighbours", "bench_reps", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.angle_samples < 1000:
            raise ValueError("angle_samples must be at least 1000")

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def provenance(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


def cell_seed(seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in key]]))


def make_metric(cfg: ExperimentConfig) -> Metric:
    if cfg.metric.lower() in ("quadratic_form", "qf"):
        if cfg.qf_matrix:
            M = dt.load_csv(cfg.qf_matrix).rows
        else:
            A = cell_seed(cfg.seed, _QF).standard_normal((cfg.dim, cfg.dim)) / np.sqrt(cfg.dim)
            M = A.T @ A
            M = 0.5 * (M + M.T)
        return Metric("quadratic_form", M)
    return Metric(cfg.metric)


def make_dataset(cfg: ExperimentConfig, n: int) -> dt.Dataset:
    """Generate ``n`` rows, or load the configured file (which must hold ``n``)."""
    metric = make_metric(cfg)
    rng = cell_seed(cfg.seed, _DATA)
    if cfg.dataset == "uniform":
        ds = dt.gen_uniform(n, cfg.dim, rng, metric)
    elif cfg.dataset == "gaussian":
        ds = dt.gen_gaussian(n, cfg.dim, rng, metric)
    else:
        ds = dt.load(cfg.dataset, metric)
        if ds.n < n:
            raise ValueError(f"{cfg.dataset} has {ds.n} rows, experiment needs {n}")
    if metric.kind == "cosine" and cfg.dataset in ("uniform", "gaussian"):
        ds = dt.l2_normalize(ds)
    return ds


def sample_pairs(n: int, count: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``count`` distinct unordered pairs ``i < j`` of ``range(n)``.

    Draws linear indices into the strict lower triangle without replacement
    and unranks them; all pairs are returned (sorted) when ``count`` covers them.
    """
    total = n * (n - 1) // 2
    if total == 0:
        raise ValueError("need at least two objects to form a pair")
    if count >= total:
        lin = np.arange(total, dtype=np.int64)
    else:
        lin = np.sort(rng.choice(total, size=count, replace=False)).astype(np.int64)
    j = ((1 + np.sqrt(1 + 8.0 * lin)) // 2).astype(np.int64)
    # float rounding can land one off either way
    j -= j * (j - 1) // 2 > lin
    j += (j + 1) * j // 2 <= lin
    i = lin - j * (j - 1) // 2
    return i, j


@dataclass
class Reducer:
    """A fitted transform plus how distances are measured in its output space."""

    method: str
    k: int
    model: object
    fit_seconds: float = 0.0

    @property
    def estimator(self) -> str | None:
        return self.method if self.method in NSIMPLEX_METHODS else None

    def transform(self, X) -> np.ndarray:
        if isinstance(self.model, bl.LinearTransform):
            return bl.apply_linear_fast(self.model, X)
        return self.model.transform(X)

    def paired(self, A, B) -> np.ndarray:
        if self.estimator:
            lwb, zen, upb = sx.estimates(A, B)
            return {"lwb": lwb, "zen": zen, "upb": upb}[self.estimator]
        return EUCLIDEAN.paired(A, B, prepared=True)

    def cross(self, Q, X) -> np.ndarray:
        if self.estimator:
            return sx.cross_estimates(Q, X, self.estimator)
        return EUCLIDEAN.cross(Q, X, prepared=True)


def _coordinates(rows, metric: Metric):
    if metric.kind == "euclidean":
        return rows
    if metric.kind == "cosine":
        return rows / np.linalg.norm(rows, axis=1, keepdims=True)
    raise ValueError(f"method needs vector coordinates; unavailable under the {metric.kind} metric")


def fit_reducer(method: str, k: int, witness, metric: Metric, seed: int = 0,
                lmds_landmarks: int = 0) -> Reducer:
    """Fit ``method`` at target dimension ``k`` on the witness rows."""
    rng = cell_seed(seed, _FAMILY[method], k)
    W = np.asarray(witness, dtype=np.float64)
    t0 = time.perf_counter()
    if method in NSIMPLEX_METHODS:
        model = sx.fit_random(W, k, metric, rng)
    elif method == "lmds":
        l = lmds_landmarks or min(W.shape[0], max(2 * k, 200))
        if l > W.shape[0]:
            raise ValueError(f"{l} landmarks requested from a witness of {W.shape[0]}")
        model = bl.lmds_fit(W[:l], metric, k)
    elif method in COORDINATE_METHODS:
        C = _coordinates(W, metric)
        if method == "pca":
            model, _ = bl.pca_fit(C, k)
        elif method == "rp":
            model = bl.rp_fit(C.shape[1], k, rng)
        else:
            model = bl.mds_extend(C, bl.mds_fit(EUCLIDEAN.pdist(C, prepared=True), k))
        if metric.kind == "cosine":
            model = _CosineWrapped(model)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Reducer(method, k, model, time.perf_counter() - t0)


@dataclass(frozen=True)
class _CosineWrapped:
    """Linear map applied to l2-normalised input rows."""

    inner: bl.LinearTransform

    def transform(self, X):
        X = np.atleast_2d(X)
        return bl.apply_linear_fast(self.inner, X / np.linalg.norm(X, axis=1, keepdims=True))


def rows_needed(cfg: ExperimentConfig, recall: bool):
    """Rows a generated dataset needs for witness, evaluation and recall corpus."""
    w, e = cfg.witness, cfg.eval_objects
    c = cfg.recall_corpus if recall else 0
    if recall and c < 10 * cfg.neighbours:
        raise ValueError(f"recall corpus {c} must be at least 10x the neighbour count {cfg.neighbours}")
    if recall and cfg.queries > c:
        raise ValueError("more queries than corpus objects")
    n = w + max(e, c)
    return n


def _split_indices(cfg, n_rows, recall):
    w, e = cfg.witness, cfg.eval_objects
    c = cfg.recall_corpus if recall else 0
    need = w + max(e, c)
    if need > n_rows:
        raise ValueError(f"dataset has {n_rows} rows, experiment needs {need}")
    perm = cell_seed(cfg.seed, _SPLIT).permutation(n_rows)
    witness = perm[:w]
    evaluation = perm[w : w + e]
    corpus = perm[w : w + c]
    return witness, evaluation, corpus


def reduced_knn(reducer: Reducer, corpus_reduced, query_positions, K: int, chunk: int = 8) -> np.ndarray:
    """kNN lists in the reduced space, queries being corpus members."""
    out = np.empty((len(query_positions), K), dtype=np.int64)
    ids = np.arange(corpus_reduced.shape[0])
    qp = np.asarray(query_positions)
    for s in range(0, qp.size, chunk):
        D = reducer.cross(corpus_reduced[qp[s : s + chunk]], corpus_reduced)
        for r in range(D.shape[0]):
            out[s + r] = dt._knn_one(D[r], ids, K, qp[s + r])
    return out


def mean_recall(true_lists, reduced_lists) -> float:
    return float(np.mean([qm.dcg_recall(t, r) for t, r in zip(true_lists, reduced_lists)]))


def _gt_cache_path(cfg, ds, corpus_idx, query_pos, K):
    h = hashlib.sha256()
    h.update(ds.name.encode())
    h.update(ds.metric.kind.encode())
    if ds.metric.qf_matrix is not None:
        h.update(ds.metric.qf_matrix.tobytes())
    h.update(np.ascontiguousarray(ds.rows[corpus_idx[:64]]).tobytes())
    h.update(np.asarray(corpus_idx, dtype=np.int64).tobytes())
    h.update(np.asarray(query_pos, dtype=np.int64).tobytes())
    h.update(str((cfg.seed, K, ds.n, ds.m)).encode())
    return os.path.join(cfg.out, ".gt-cache", h.hexdigest()[:24] + ".npy")


def ground_truth(cfg: ExperimentConfig, ds: dt.Dataset, corpus_idx, query_pos) -> np.ndarray:
    """True kNN lists (positions within the corpus), cached on disk."""
    K = cfg.neighbours
    path = _gt_cache_path(cfg, ds, corpus_idx, query_pos, K)
    if cfg.cache and os.path.exists(path):
        gt = np.load(path)
        if gt.shape == (len(query_pos), K):
            return gt
        log.warning("ignoring ground-truth cache %s with shape %s", path, gt.shape)
    gt = dt.knn_ground_truth(ds.rows[corpus_idx], query_pos, K, ds.metric, workers=cfg.workers)
    if cfg.cache:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        np.save(path, gt)
    return gt


@dataclass
class CellResult:
    method: str
    k: int
    report: qm.QualityReport | None = None
    error: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.error


def _cells(cfg):
    return [(m, k) for m in cfg.methods for k in cfg.dims]


def _map(cfg, fn, items):
    if cfg.workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _safe_cell(method, k, body) -> CellResult:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", bl.RankDeficiencyWarning)
            return body()
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        log.warning("cell %s k=%d failed: %s", method, k, e)
        return CellResult(method, k, error=f"{type(e).__name__}: {e}")


def run_profile(cfg: ExperimentConfig, dataset: dt.Dataset | None = None):
    """Quality profile over ``cfg.methods`` x ``cfg.dims``.

    Returns ``(cells, q_max)``; normalised values come from
    ``cell.report.normalized(q_max)``.
    """
    recall = cfg.profile_recall
    ds = dataset if dataset is not None else make_dataset(cfg, rows_needed(cfg, recall))
    w_idx, e_idx, c_idx = _split_indices(cfg, ds.n, recall)
    W, E = ds.rows[w_idx], ds.rows[e_idx]
    pi, pj = sample_pairs(E.shape[0], cfg.pairs, cell_seed(cfg.seed, _PAIRS))
    delta = ds.metric.paired(E[pi], E[pj], prepared=True)
    if recall:
        C = ds.rows[c_idx]
        qpos = np.arange(cfg.queries)
        gt = ground_truth(cfg, ds, c_idx, qpos)

    def cell(mk):
        method, k = mk

        def body():
            r = fit_reducer(method, k, W, ds.metric, cfg.seed, cfg.lmds_landmarks)
            Z = r.transform(E)
            zeta = r.paired(Z[pi], Z[pj])
            rec = float("nan")
            if recall:
                CZ = r.transform(C)
                rec = mean_recall(gt, reduced_knn(r, CZ, qpos, cfg.neighbours))
            rep = qm.evaluate(method, k, qm.DistancePairSample(delta, zeta), rec)
            return CellResult(method, k, rep)

        return _safe_cell(method, k, body)

    cells = _map(cfg, cell, _cells(cfg))
    raws = [c.report.quadratic_raw for c in cells if c.ok]
    q_max = max(raws) if raws else 0.0
    return cells, q_max


def profile_rows(cells, q_max):
    header = ["method", "k", "kruskal", "sammon_norm", "quadloss_norm", "spearman", "recall",
              "kruskal_norm", "spearman_norm", "sammon", "quadloss", "excluded_pairs", "status"]
    rows = []
    for c in cells:
        if not c.ok:
            rows.append([c.method, c.k] + [""] * 10 + [c.error])
            continue
        r, n = c.report, c.report.normalized(q_max)
        rows.append([c.method, c.k, r.kruskal, n["sammon"], n["quadloss"], r.spearman, r.recall,
                     n["kruskal"], n["spearman"], r.sammon, r.quadratic_raw, r.excluded_pairs, "ok"])
    return header, rows


def run_recall(cfg: ExperimentConfig, dataset: dt.Dataset | None = None):
    """Mean DCG recall per (method, k); returns the cell list."""
    n = cfg.witness + cfg.recall_corpus
    if cfg.recall_corpus < 10 * cfg.neighbours:
        raise ValueError(f"recall corpus {cfg.recall_corpus} must be at least 10x the neighbour count {cfg.neighbours}")
    ds = dataset if dataset is not None else make_dataset(cfg, n)
    sub = cfg.replace(eval_objects=0)
    w_idx, _, c_idx = _split_indices(sub, ds.n, True)
    W, C = ds.rows[w_idx], ds.rows[c_idx]
    qpos = np.arange(cfg.queries)
    gt = ground_truth(cfg, ds, c_idx, qpos)

    def cell(mk):
        method, k = mk

        def body():
            r = fit_reducer(method, k, W, ds.metric, cfg.seed, cfg.lmds_landmarks)
            rec = mean_recall(gt, reduced_knn(r, r.transform(C), qpos, cfg.neighbours))
            return CellResult(method, k, extra={"recall": rec})

        return _safe_cell(method, k, body)

    return _map(cfg, cell, _cells(cfg))


def recall_rows(cells):
    header = ["method", "k", "recall", "status"]
    return header, [[c.method, c.k, c.extra.get("recall", ""), c.error or "ok"] for c in cells]


def run_shepard(cfg: ExperimentConfig, dataset: dt.Dataset | None = None):
    """Shepard data per (method, k): 50-object scatter, its PAVA fit, and S_K.

    Returns ``(scatter_rows, fit_rows, stress_cells)``.
    """
    ds = dataset if dataset is not None else make_dataset(cfg, rows_needed(cfg, False))
    w_idx, e_idx, _ = _split_indices(cfg, ds.n, False)
    W, E = ds.rows[w_idx], ds.rows[e_idx]
    s = min(cfg.shepard_objects, E.shape[0])
    small = np.sort(cell_seed(cfg.seed, _SHEPARD).choice(E.shape[0], size=s, replace=False))
    si, sj = sample_pairs(s, s * (s - 1) // 2, None)
    S = E[small]
    sdelta = ds.metric.paired(S[si], S[sj], prepared=True)
    pi, pj = sample_pairs(E.shape[0], cfg.pairs, cell_seed(cfg.seed, _PAIRS))
    delta = ds.metric.paired(E[pi], E[pj], prepared=True)

    def cell(mk):
        method, k = mk

        def body():
            r = fit_reducer(method, k, W, ds.metric, cfg.seed, cfg.lmds_landmarks)
            ZS = r.transform(S)
            szeta = r.paired(ZS[si], ZS[sj])
            Z = r.transform(E)
            zeta = r.paired(Z[pi], Z[pj])
            stress = qm.kruskal_stress(delta, zeta)
            return CellResult(method, k, extra={"szeta": szeta, "kruskal": stress})

        return _safe_cell(method, k, body)

    cells = _map(cfg, cell, _cells(cfg))
    scatter, fits = [], []
    for c in cells:
        if not c.ok:
            continue
        z = c.extra["szeta"]
        for a, b, d, zz in zip(small[si], small[sj], sdelta, z):
            scatter.append([c.method, c.k, int(a), int(b), float(zz), float(d)])
        f = qm.isotonic_fit(z, sdelta)
        order = np.lexsort((sdelta, z))
        for o in order:
            fits.append([c.method, c.k, float(z[o]), float(f[o])])
    return scatter, fits, cells


def run_angles(cfg: ExperimentConfig):
    """Per dimension: mean and sd of the angle, plus a histogram over [0, pi]."""
    stats, hist = [], []
    edges = np.linspace(0.0, np.pi, cfg.angle_bins + 1)
    for m in cfg.angle_dims:
        mean, sd, th = qm.angle_distribution(m, cfg.angle_samples, cell_seed(cfg.seed, 200, m), cfg.angle_mode)
        stats.append([m, cfg.angle_samples, mean, sd, 1.0 / np.sqrt(m)])
        counts, _ = np.histogram(th, bins=edges)
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            hist.append([m, float(lo), float(hi), int(c)])
    return stats, hist


def _median_time(fn, reps):
    ts = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def run_bench(cfg: ExperimentConfig, dataset: dt.Dataset | None = None):
    """Fit time and per-object transform time (batch and one-at-a-time).

    Timing always runs single-threaded so the cells do not compete. Generated
    data gets at least ``max(bench_dims)`` columns so every k is reachable.
    """
    n = cfg.witness + cfg.bench_objects
    if dataset is None and cfg.dataset in ("uniform", "gaussian"):
        cfg = cfg.replace(dim=max(cfg.dim, max(cfg.bench_dims)))
    ds = dataset if dataset is not None else make_dataset(cfg, n)
    W = ds.rows[: cfg.witness]
    X = ds.rows[cfg.witness : cfg.witness + cfg.bench_objects]
    loop_n = min(X.shape[0], 50)
    rows = []
    for method in cfg.methods:
        for k in cfg.bench_dims:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", bl.RankDeficiencyWarning)
                    r = fit_reducer(method, k, W, ds.metric, cfg.seed, cfg.lmds_landmarks)
                    fit_s = _median_time(
                        lambda: fit_reducer(method, k, W, ds.metric, cfg.seed, cfg.lmds_landmarks), cfg.bench_reps
                    )
                    batch = _median_time(lambda: r.transform(X), cfg.bench_reps) / X.shape[0]
                    if isinstance(r.model, bl.LinearTransform):
                        one = lambda: [bl.apply_linear(r.model, x) for x in X[:loop_n]]  # noqa: E731
                    else:
                        one = lambda: [r.model.transform(x) for x in X[:loop_n]]  # noqa: E731
                    looped = _median_time(one, cfg.bench_reps) / loop_n
                rows.append([method, k, ds.m, X.shape[0], fit_s, batch, looped, "ok"])
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
                rows.append([method, k, ds.m, X.shape[0], "", "", "", f"{type(e).__name__}: {e}"])
    header = ["method", "k", "m", "objects", "fit_s", "per_object_s", "per_object_looped_s", "status"]
    return header, rows
