"""Figures rendered to files; byte-identical for identical input."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SERIES_COLUMNS = ["trial", "kind", "k", "t", "excursion_sum", "ratio", "truncation_bound", "n_horoballs"]


class SchemaError(ValueError):
    pass


def _setup():
    matplotlib.rcParams["svg.hashsalt"] = "cuspex"
    matplotlib.rcParams["svg.fonttype"] = "none"
    matplotlib.rcParams["path.simplify"] = False


def read_series_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SERIES_COLUMNS:
            raise SchemaError(f"expected columns {SERIES_COLUMNS}, got {reader.fieldnames}")
        rows = list(reader)
    if not rows:
        raise SchemaError("CSV has no data rows")
    out = []
    for i, r in enumerate(rows, start=2):
        try:
            out.append({"trial": int(r["trial"]), "kind": r["kind"], "k": float(r["k"]),
                        "t": float(r["t"]), "ratio": float(r["ratio"])})
        except (TypeError, ValueError) as e:
            raise SchemaError(f"line {i}: {e}") from None
    return out


def quantile_bands(rows: Sequence[dict]) -> Dict[Tuple[str, float], Dict[str, np.ndarray]]:
    groups = defaultdict(lambda: defaultdict(list))
    for r in rows:
        groups[(r["kind"], r["k"])][r["t"]].append(r["ratio"])
    out = {}
    for key in sorted(groups):
        ts = sorted(groups[key])
        vals = [np.asarray(groups[key][t]) for t in ts]
        out[key] = {
            "t": np.asarray(ts),
            "median": np.array([np.median(v) for v in vals]),
            "q25": np.array([np.quantile(v, 0.25) for v in vals]),
            "q75": np.array([np.quantile(v, 0.75) for v in vals]),
        }
    return out


def plot_ratio_bands(rows: Sequence[dict], path, title: str = "") -> Path:
    """Median running average against log t with the interquartile band."""
    _setup()
    bands = quantile_bands(rows)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (kind, k), b in bands.items():
        x = np.log(b["t"])
        line, = ax.plot(x, b["median"], marker="o", label=f"{kind}, k={k:g}")
        ax.fill_between(x, b["q25"], b["q75"], color=line.get_color(), alpha=0.2, linewidth=0)
    ax.set_xlabel("log t")
    ax.set_ylabel("excursion sum / t")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_birkhoff(table: Sequence[dict], path) -> Path:
    _setup()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_k = defaultdict(list)
    for r in table:
        by_k[r["k"]].append(r)
    for k in sorted(by_k):
        rs = sorted(by_k[k], key=lambda r: r["t"])
        x = np.log([r["t"] for r in rs])
        line, = ax.plot(x, [r["average"] for r in rs], marker="o", label=f"k={k:g}")
        target = rs[0]["target"]
        if math.isfinite(target):
            ax.axhline(target, color=line.get_color(), linestyle="--", linewidth=1)
    ax.set_xlabel("log t")
    ax.set_ylabel("median flow average of f_k")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".") or "svg"
    meta = {"Date": None} if fmt == "svg" else {}
    if fmt == "png":
        meta = {"Software": None}
    fig.savefig(path, format=fmt, metadata=meta)
    plt.close(fig)
    return path


def export_plot(csv_path, out_path) -> Path:
    rows = read_series_csv(csv_path)
    return plot_ratio_bands(rows, out_path)
