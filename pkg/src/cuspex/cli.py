"""cuspex command line: simulate, verify, birkhoff, export-plot."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .plotting import SERIES_COLUMNS, SchemaError, export_plot, plot_birkhoff, plot_ratio_bands

log = logging.getLogger("cuspex")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_CONVERGENCE = 0, 1, 2, 3
SUMMARY_SCHEMA = 1


def _threads() -> int:
    raw = os.environ.get("CUSPEX_THREADS", "")
    try:
        n = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        n = 1
    return max(1, min(n, os.cpu_count() or 1))


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return str(x)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_WORKER_STATE = {}


def _worker_objects(cfg_dict):
    key = json.dumps(cfg_dict, sort_keys=True, default=str)
    hit = _WORKER_STATE.get(key)
    if hit is None:
        from .config import BirkhoffConfig
        from .horoworld import HoroballCollection
        from .lattice import ambient_preset

        cfg = ExperimentConfig(**{**cfg_dict, "birkhoff": BirkhoffConfig(**cfg_dict["birkhoff"])})
        G = cfg.preset()
        coll = HoroballCollection(ambient_preset(G), cfg.height)
        hit = (cfg, cfg.measure(), coll)
        _WORKER_STATE.clear()
        _WORKER_STATE[key] = hit
    return hit


def run_trial(cfg_dict, trial: int):
    """All series rows for one trial; the streams depend only on (seed, trial)."""
    from .excursion import rho_series
    from .samplers import sample_lebesgue_direction, sample_rw_ray

    cfg, mu, coll = _worker_objects(cfg_dict)
    ss = np.random.SeedSequence(cfg.seed).spawn(trial + 1)[trial]
    rw_seed, leb_seed = ss.spawn(2)
    t_max = cfg.t_grid[-1]
    rows = []
    for kind in cfg.kinds:
        if kind == "rw":
            ray = sample_rw_ray(mu, t_max, rw_seed)
        else:
            ray = sample_lebesgue_direction(seed=leb_seed, dim=coll.dim, t_max=t_max)
        for k in cfg.k:
            if cfg.backend == "bfs":
                series = _bfs_series(ray, k, cfg, coll)
            else:
                series = rho_series(ray, k, cfg.t_grid, coll, cfg.epsilon)
            for r in series.to_rows():
                rows.append({"trial": trial, "kind": kind, **r})
    return rows


def _bfs_series(ray, k, cfg, coll):
    from .excursion import ExcursionSeries, excursion_sum

    vals, bounds, counts = [], [], []
    for t in cfg.t_grid:
        s = excursion_sum(ray.geodesic, t, k, coll, cfg.epsilon, backend="bfs")
        vals.append(s.value)
        bounds.append(s.truncation_bound)
        counts.append(s.n_horoballs)
    return ExcursionSeries(k, list(cfg.t_grid), vals, [v / t for v, t in zip(vals, cfg.t_grid)],
                           bounds, counts)


def _map_trials(fn, cfg: ExperimentConfig, n: int):
    cfg_dict = cfg.to_dict()
    workers = min(_threads(), n)
    if workers <= 1:
        return [fn(cfg_dict, i) for i in range(n)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, [cfg_dict] * n, range(n)))


def summarize(rows: List[dict]) -> List[dict]:
    groups = {}
    for r in rows:
        groups.setdefault((r["kind"], r["k"], r["t"]), []).append(r["ratio"])
    out = []
    for (kind, k, t) in sorted(groups, key=lambda key: (key[0], key[1], key[2])):
        v = np.asarray(groups[(kind, k, t)])
        out.append({"kind": kind, "k": k, "t": t, "median_ratio": float(np.median(v)),
                    "q25": float(np.quantile(v, 0.25)), "q75": float(np.quantile(v, 0.75)),
                    "trials": int(v.size)})
    return out


def trend_labels(medians: List[dict]) -> List[dict]:
    """Convergence and divergence heuristics on the median ratios."""
    by = {}
    for m in medians:
        by.setdefault((m["kind"], m["k"]), []).append(m)
    out = []
    for (kind, k), ms in sorted(by.items()):
        ms.sort(key=lambda m: m["t"])
        med = [m["median_ratio"] for m in ms]
        change = abs(med[-1] - med[-2]) / med[-2] if len(med) > 1 and med[-2] > 0 else None
        incr = [b > a for a, b in zip(med, med[1:])]
        run = 0
        for up in reversed(incr):
            if not up:
                break
            run += 1
        label = "undetermined"
        if run >= 3:
            label = "diverging (heuristic: increasing over >= 3 doublings)"
        elif change is not None and change < 0.10:
            label = "converging (heuristic: last doubling changed < 10%)"
        out.append({"kind": kind, "k": k, "last_doubling_change": change,
                    "increasing_doublings": run, "label": label})
    return out


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    from .samplers import NotConverged
    from .verify import RadiusExhausted

    out.mkdir(parents=True, exist_ok=True)
    try:
        chunks = _map_trials(run_trial, cfg, cfg.trials)
    except (NotConverged, RadiusExhausted) as e:
        print(f"cuspex: convergence failure: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    rows = [r for chunk in chunks for r in chunk]
    kind_order = {k: i for i, k in enumerate(cfg.kinds)}
    rows.sort(key=lambda r: (r["trial"], kind_order[r["kind"]], r["k"], r["t"]))
    csv_path = out / "series.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in SERIES_COLUMNS])
    medians = summarize(rows)
    summary = {"schema_version": SUMMARY_SCHEMA, "cuspex_version": __version__,
               "config": cfg.to_dict(), "medians": medians, "trends": trend_labels(medians)}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n")
    plot_ratio_bands(rows, out / "ratios.svg", title=f"{cfg.group}, h={cfg.height:g}")
    print(f"wrote {csv_path} ({len(rows)} rows), {out / 'summary.json'}, {out / 'ratios.svg'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# birkhoff
# ---------------------------------------------------------------------------


def run_birkhoff_trial(cfg_dict, trial: int):
    from .excursion import birkhoff_integral, sample_liouville

    cfg, _, coll = _worker_objects(cfg_dict)
    ss = np.random.SeedSequence([cfg.seed, 1]).spawn(trial + 1)[trial]
    grid = cfg.birkhoff.t_grid
    ray = sample_liouville(ss, t_max=grid[-1], dim=coll.dim)
    gamma = ray.geodesic
    return [[birkhoff_integral(gamma, t, k, coll) / t for t in grid] for k in cfg.birkhoff.k]


def cmd_birkhoff(cfg: ExperimentConfig, out: Path) -> int:
    from .excursion import birkhoff_target

    out.mkdir(parents=True, exist_ok=True)
    b = cfg.birkhoff
    if cfg.group not in ("psl2z", "psl2zi") or cfg.group_file:
        print("cuspex: flow averages need a preset group", file=sys.stderr)
        return EXIT_CONFIG
    res = _map_trials(run_birkhoff_trial, cfg, b.trials)
    arr = np.asarray(res)  # trials x k x t
    table = []
    for i, k in enumerate(b.k):
        target = birkhoff_target(k, cfg.height, cfg.group)
        for j, t in enumerate(b.t_grid):
            table.append({"k": k, "t": t, "average": float(np.median(arr[:, i, j])), "target": target})
    path = out / "birkhoff.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "t", "average", "target"])
        for r in table:
            w.writerow([_fmt(r["k"]), _fmt(r["t"]), _fmt(r["average"]), _fmt(r["target"])])
    with open(out / "birkhoff_trials.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "k", "t", "average"])
        for tr in range(arr.shape[0]):
            for i, k in enumerate(b.k):
                for j, t in enumerate(b.t_grid):
                    w.writerow([tr, _fmt(k), _fmt(t), _fmt(float(arr[tr, i, j]))])
    plot_birkhoff(table, out / "birkhoff.svg")
    print(f"wrote {path}, {out / 'birkhoff_trials.csv'}, {out / 'birkhoff.svg'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify / export-plot
# ---------------------------------------------------------------------------


def cmd_verify(out: Path, seed: int = 0, scale: float = 1.0) -> int:
    from .verify import reports_to_json, run_all

    out.mkdir(parents=True, exist_ok=True)
    reports = run_all(seed, scale)
    path = out / "verify_report.json"
    path.write_text(reports_to_json(reports) + "\n")
    for r in reports:
        print(r.line())
    ok = all(r.passed for r in reports)
    print(f"wrote {path}: {'all passed' if ok else 'FAILURES'}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_export_plot(csv_path: Path, out_path: Path) -> int:
    try:
        export_plot(csv_path, out_path)
    except (SchemaError, OSError) as e:
        print(f"cuspex: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {out_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cuspex", description="Cusp excursions of random geodesics.")
    p.add_argument("--version", action="version", version=f"cuspex {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", type=Path, help="experiment JSON")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--backend", choices=("cf", "bfs"))
        sp.add_argument("--epsilon", type=float)

    common(sub.add_parser("simulate", help="excursion series for RW and Lebesgue rays"))
    common(sub.add_parser("birkhoff", help="flow averages of f_k from Liouville starts"))
    v = sub.add_parser("verify", help="run the oracle and lemma suites")
    common(v, config=False)
    v.add_argument("--scale", type=float, default=1.0, help="shrink trial counts (quick runs)")
    e = sub.add_parser("export-plot", help="SVG of median ratio bands from a series CSV")
    e.add_argument("csv", type=Path)
    e.add_argument("--out", type=Path, help="output file (default: CSV name with .svg)")
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative", None, "<command line>")
        cfg.seed = args.seed
    if args.backend is not None:
        cfg.backend = args.backend
    if args.epsilon is not None:
        if not args.epsilon > 0:
            raise ConfigError("--epsilon must be positive", None, "<command line>")
        cfg.epsilon = args.epsilon
    if args.out is not None:
        cfg.out = str(args.out)
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "export-plot":
            return cmd_export_plot(args.csv, args.out or args.csv.with_suffix(".svg"))
        if args.verb == "verify":
            if args.epsilon is not None or args.backend is not None:
                log.info("verify ignores --epsilon and --backend")
            return cmd_verify(args.out or Path("out"), args.seed or 0, args.scale)
        cfg = _config(args)
        if args.verb == "simulate":
            return cmd_simulate(cfg, Path(cfg.out))
        return cmd_birkhoff(cfg, Path(cfg.out))
    except ConfigError as e:
        print(f"cuspex: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
