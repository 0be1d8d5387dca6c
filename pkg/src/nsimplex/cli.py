"""Command-line driver: ``nsimplex <command> [options]``.

Settings come from, in increasing priority: built-in defaults, a flat
``key=value`` file given with ``--config``, ``NSIMPLEX_<KEY>`` environment
variables, ``--set key=value`` pairs, and the dedicated flags.

Every CSV starts with ``# key=value`` provenance lines; the rows after them
depend only on the configuration. Exit status is 0 when every requested cell
was produced, 1 when some cell failed, 2 on configuration or input errors.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import io
import logging
import os
import sys

import numpy as np

from . import __version__
from . import data as dt
from . import experiments as ex
from . import persistence
from .metrics import Metric

log = logging.getLogger("nsimplex")

ENV_PREFIX = "NSIMPLEX_"
COMMANDS = ("shepard", "profile", "recall", "angles", "bench", "generate", "fit", "transform")


class ConfigError(ValueError):
    pass


def _coerce(name, raw, default):
    if isinstance(default, bool):
        v = str(raw).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(str(raw).replace("_", ""))
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from None
    return str(raw).strip()


def parse_config_text(text: str, source: str = "config") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().lower().replace("-", "_")] = v.strip()
    return out


def build_config(file_path=None, env=None, overrides=None) -> ex.ExperimentConfig:
    """Layer the file, environment and overrides over the defaults."""
    fields = {f.name: f.default for f in dataclasses.fields(ex.ExperimentConfig)}
    merged = {}
    if file_path:
        try:
            text = open(file_path).read()
        except OSError as e:
            raise ConfigError(f"cannot read config {file_path}: {e}") from None
        merged.update(parse_config_text(text, file_path))
    env = os.environ if env is None else env
    for k, v in env.items():
        if k.startswith(ENV_PREFIX):
            merged[k[len(ENV_PREFIX):].lower()] = v
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(fields))
    if unknown:
        raise ConfigError(f"unknown setting(s): {', '.join(unknown)}")
    kw = {}
    for k, v in merged.items():
        d = fields[k]
        kw[k] = v if isinstance(d, tuple) or not isinstance(v, str) else _coerce(k, v, d)
    try:
        return ex.ExperimentConfig(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ",".join(str(x) for x in v)
    return str(v)


def write_csv(path, header, rows, cfg: ex.ExperimentConfig, command: str) -> str:
    """CSV with a provenance block; returns the text written."""
    buf = io.StringIO()
    buf.write(f"# command={command}\n")
    buf.write(f"# version={__version__}\n")
    buf.write(f"# timestamp={datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')}\n")
    for k, v in cfg.provenance().items():
        buf.write(f"# {k}={_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(buf.getvalue())
    log.info("wrote %s (%d rows)", path, len(rows))
    return buf.getvalue()


def csv_body(text: str) -> str:
    """The part of an emitted CSV that must be reproducible."""
    return "".join(l for l in text.splitlines(keepends=True) if not l.startswith("#"))


def _out(cfg, name):
    return os.path.join(cfg.out, name)


def cmd_shepard(cfg, args) -> int:
    """Shepard scatter, isotonic fit and Kruskal stress per method and k."""
    scatter, fits, cells = ex.run_shepard(cfg)
    write_csv(_out(cfg, "shepard_scatter.csv"), ["method", "k", "i", "j", "zeta", "delta"], scatter, cfg, "shepard")
    write_csv(_out(cfg, "shepard_fit.csv"), ["method", "k", "zeta", "fit"], fits, cfg, "shepard")
    stress = [[c.method, c.k, c.extra.get("kruskal", ""), c.error or "ok"] for c in cells]
    write_csv(_out(cfg, "shepard_stress.csv"), ["method", "k", "kruskal", "status"], stress, cfg, "shepard")
    for c in cells:
        if c.ok:
            print(f"{c.method:>5} k={c.k:<4} kruskal={c.extra['kruskal']:.6f}")
    return 0 if all(c.ok for c in cells) else 1


def cmd_profile(cfg, args) -> int:
    """Quality profile over methods and target dimensions."""
    cells, q_max = ex.run_profile(cfg)
    header, rows = ex.profile_rows(cells, q_max)
    write_csv(_out(cfg, "profile.csv"), header, rows, cfg, "profile")
    return 0 if all(c.ok for c in cells) else 1


def cmd_recall(cfg, args) -> int:
    """Mean DCG kNN recall per method and k."""
    cells = ex.run_recall(cfg)
    header, rows = ex.recall_rows(cells)
    write_csv(_out(cfg, "recall.csv"), header, rows, cfg, "recall")
    return 0 if all(c.ok for c in cells) else 1


def cmd_angles(cfg, args) -> int:
    """Angle concentration statistics per dimension."""
    stats, hist = ex.run_angles(cfg)
    write_csv(_out(cfg, "angles.csv"), ["dim", "samples", "mean", "std", "model_std"], stats, cfg, "angles")
    write_csv(_out(cfg, "angles_hist.csv"), ["dim", "lo", "hi", "count"], hist, cfg, "angles")
    return 0


def cmd_bench(cfg, args) -> int:
    """Fit and per-object transform timings."""
    header, rows = ex.run_bench(cfg)
    write_csv(_out(cfg, "bench.csv"), header, rows, cfg, "bench")
    return 0 if all(r[-1] == "ok" for r in rows) else 1


def cmd_generate(cfg, args) -> int:
    """Write a generated dataset as fvecs or CSV."""
    n = args.rows or cfg.witness + cfg.eval_objects
    ds = ex.make_dataset(cfg.replace(dataset=cfg.dataset if cfg.dataset in ("uniform", "gaussian") else "uniform"), n)
    path = args.output or _out(cfg, f"{ds.name}-{n}.{args.format}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if args.format == "fvecs":
        dt.write_fvecs(path, ds)
    else:
        dt.write_csv(path, ds)
    print(path)
    return 0


def cmd_fit(cfg, args) -> int:
    """Fit one transform and save it."""
    if len(cfg.methods) != 1 or len(cfg.dims) != 1:
        raise ConfigError("fit needs exactly one --method and one --dims value")
    method, k = cfg.methods[0], cfg.dims[0]
    ds = ex.make_dataset(cfg, cfg.witness) if cfg.dataset in ("uniform", "gaussian") else dt.load(cfg.dataset, ex.make_metric(cfg))
    w_idx, _, _ = ex._split_indices(cfg.replace(eval_objects=0), ds.n, False)
    r = ex.fit_reducer(method, k, ds.rows[w_idx], ds.metric, cfg.seed, cfg.lmds_landmarks)
    if isinstance(r.model, ex._CosineWrapped):
        raise ConfigError(f"{method} under the cosine metric cannot be saved; l2-normalise the data and use euclidean")
    path = args.output or _out(cfg, f"{method}-{k}.nsxf")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    persistence.save_transform(path, r.model, single=args.single)
    print(path)
    return 0


def cmd_transform(cfg, args) -> int:
    """Apply a saved transform to a data file."""
    if not args.transform:
        raise ConfigError("transform needs --transform PATH")
    t = persistence.load_transform(args.transform)
    metric = getattr(t, "metric", None) or Metric("euclidean")
    if cfg.dataset in ("uniform", "gaussian"):
        raise ConfigError("transform needs --dataset pointing at a data file")
    ds = dt.load(cfg.dataset, metric)
    Y = t.transform(ds.rows)
    path = args.output or _out(cfg, "transformed.csv")
    header = [f"x{i}" for i in range(Y.shape[1])]
    write_csv(path, header, Y.tolist(), cfg, "transform")
    print(path)
    return 0


HANDLERS = {
    "shepard": cmd_shepard,
    "profile": cmd_profile,
    "recall": cmd_recall,
    "angles": cmd_angles,
    "bench": cmd_bench,
    "generate": cmd_generate,
    "fit": cmd_fit,
    "transform": cmd_transform,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value settings file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--method", help="comma-separated subset of " + ",".join(ex.METHODS))
    common.add_argument("--dims", help="comma-separated target dimensions")
    common.add_argument("--metric", help="euclidean, cosine, jsd, triangular or quadratic_form")
    common.add_argument("--dataset", help="uniform, gaussian, or a .fvecs/.csv file")
    common.add_argument("--workers", type=int)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any setting")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nsimplex", description="nSimplex Zen dimensionality-reduction experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__)
        if name == "generate":
            sp.add_argument("--rows", type=int, help="number of rows (default witness + eval_objects)")
            sp.add_argument("--format", choices=("fvecs", "csv"), default="fvecs")
        if name in ("generate", "fit", "transform"):
            sp.add_argument("--output", help="output file path")
        if name == "fit":
            sp.add_argument("--single", action="store_true", help="store arrays as float32")
        if name == "transform":
            sp.add_argument("--transform", help="saved transform file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "methods": args.method,
        "dims": args.dims,
        "metric": args.metric,
        "dataset": args.dataset,
        "workers": args.workers,
    }
    try:
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            k = k.strip().lower().replace("-", "_")
            if overrides.get(k) is None:
                overrides[k] = v
        cfg = build_config(args.config, overrides=overrides)
        return HANDLERS[args.command](cfg, args)
    except (ConfigError, dt.FormatError, OSError) as e:
        print(f"nsimplex: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"nsimplex: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
