"""Experiment configuration: one JSON document, validated with line numbers."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import lattice
from .horoworld import DEFAULT_EPSILON, DEFAULT_HEIGHT

KNOWN_KEYS = {
    "group", "group_file", "height", "step_measure", "k", "t_grid", "trials", "seed",
    "epsilon", "kinds", "backend", "out", "birkhoff", "notes",
}
KINDS = ("rw", "lebesgue")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass
class BirkhoffConfig:
    k: List[float] = field(default_factory=lambda: [0.5, 1.0])
    t_grid: List[float] = field(default_factory=lambda: [1250.0, 2500.0, 5000.0, 10000.0])
    trials: int = 50


@dataclass
class ExperimentConfig:
    group: str = "psl2z"
    group_file: Optional[str] = None
    height: float = DEFAULT_HEIGHT
    step_measure: Optional[Dict[str, float]] = None
    k: List[float] = field(default_factory=lambda: [1.0])
    t_grid: List[float] = field(default_factory=lambda: [250.0 * 2 ** j for j in range(6)])
    trials: int = 50
    seed: int = 0
    epsilon: float = DEFAULT_EPSILON
    kinds: List[str] = field(default_factory=lambda: list(KINDS))
    backend: str = "cf"
    out: str = "out"
    birkhoff: BirkhoffConfig = field(default_factory=BirkhoffConfig)
    notes: object = None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["birkhoff"] = dict(self.birkhoff.__dict__)
        return d

    # -- group objects -----------------------------------------------------

    def preset(self) -> lattice.GroupPreset:
        if self.group_file:
            return lattice.load_custom_group(Path(self.group_file))
        return lattice.preset(self.group)

    def measure(self):
        from .samplers import StepMeasure, checked_measure, default_measure

        G = self.preset()
        if self.step_measure is None:
            return checked_measure(default_measure(G), G)
        support = [(G.word(w), float(p)) for w, p in self.step_measure.items()]
        return checked_measure(StepMeasure(support, list(self.step_measure)), G)


def _line_of(text: str, key: str) -> Optional[int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return None
    return text.count("\n", 0, m.start()) + 1


def _num_list(value, name, err) -> List[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        err(name, f"{name} must be a number or a nonempty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            err(name, f"{name} entries must be finite numbers, got {v!r}")
        out.append(float(v))
    return out


def _grid(value, name, err) -> List[float]:
    if isinstance(value, dict):
        extra = set(value) - {"base", "doublings"}
        if extra:
            err(name, f"unknown {name} keys: {sorted(extra)}")
        base = value.get("base", 250.0)
        n = value.get("doublings", 5)
        if not isinstance(n, int) or n < 0:
            err(name, "doublings must be a nonnegative integer")
        if not isinstance(base, (int, float)) or not base > 0:
            err(name, "base must be positive")
        return [float(base) * 2 ** j for j in range(n + 1)]
    grid = _num_list(value, name, err)
    if any(t <= 0 for t in grid):
        err(name, f"{name} entries must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        err(name, f"{name} must be increasing")
    return grid


def parse_config(text: str, source: str = "<config>", base_dir: Optional[Path] = None) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", e.lineno, source) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", 1, source)

    def err(key, msg):
        raise ConfigError(msg, _line_of(text, key), source)

    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        key = sorted(unknown)[0]
        err(key, f"unknown key {key!r}")
    cfg = ExperimentConfig()
    if "group" in raw:
        if not isinstance(raw["group"], str):
            err("group", "group must be a preset name")
        try:
            lattice.preset(raw["group"])
        except lattice.UnknownPreset:
            err("group", f"unknown group preset {raw['group']!r} (psl2z, psl2zi)")
        cfg.group = raw["group"]
    if "group_file" in raw:
        p = Path(raw["group_file"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        try:
            G = lattice.load_custom_group(p)
        except (OSError, lattice.GroupSpecError, ValueError) as e:
            err("group_file", f"cannot load custom group: {e}")
        cfg.group_file = str(p)
        cfg.group = G.name
    if "height" in raw:
        h = raw["height"]
        if isinstance(h, bool) or not isinstance(h, (int, float)) or not h > 1:
            err("height", f"height must be a number > 1, got {h!r}")
        cfg.height = float(h)
    if "k" in raw:
        cfg.k = _num_list(raw["k"], "k", err)
        if any(k < 1 for k in cfg.k):
            err("k", "every k must be >= 1")
    if "t_grid" in raw:
        cfg.t_grid = _grid(raw["t_grid"], "t_grid", err)
    if "trials" in raw:
        n = raw["trials"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            err("trials", f"trials must be a positive integer, got {n!r}")
        cfg.trials = n
    if "seed" in raw:
        s = raw["seed"]
        if isinstance(s, bool) or not isinstance(s, int) or s < 0:
            err("seed", f"seed must be a nonnegative integer, got {s!r}")
        cfg.seed = s
    if "epsilon" in raw:
        e = raw["epsilon"]
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not e > 0:
            err("epsilon", f"epsilon must be positive, got {e!r}")
        cfg.epsilon = float(e)
    if "kinds" in raw:
        ks = raw["kinds"]
        if not isinstance(ks, list) or not ks or any(k not in KINDS for k in ks):
            err("kinds", f"kinds must be a nonempty subset of {list(KINDS)}")
        cfg.kinds = [k for k in KINDS if k in ks]
    if "backend" in raw:
        if raw["backend"] not in ("cf", "bfs"):
            err("backend", "backend must be 'cf' or 'bfs'")
        cfg.backend = raw["backend"]
    if "out" in raw:
        if not isinstance(raw["out"], str) or not raw["out"]:
            err("out", "out must be a directory path")
        cfg.out = raw["out"]
    if "notes" in raw:
        cfg.notes = raw["notes"]
    if "step_measure" in raw:
        sm = raw["step_measure"]
        if not isinstance(sm, dict) or not sm:
            err("step_measure", "step_measure maps words to probabilities")
        G = cfg.preset()
        for w, p in sm.items():
            try:
                G.word(w)
            except (lattice.GroupSpecError, ValueError) as e:
                err("step_measure", str(e))
            if isinstance(p, bool) or not isinstance(p, (int, float)) or not p > 0:
                err("step_measure", f"probability of {w!r} must be positive")
        if abs(sum(sm.values()) - 1.0) > 1e-9:
            err("step_measure", f"probabilities sum to {sum(sm.values())}, not 1")
        cfg.step_measure = {w: float(p) for w, p in sm.items()}
    if "birkhoff" in raw:
        b = raw["birkhoff"]
        if not isinstance(b, dict):
            err("birkhoff", "birkhoff must be an object")
        extra = set(b) - {"k", "t_grid", "trials"}
        if extra:
            err("birkhoff", f"unknown birkhoff keys: {sorted(extra)}")
        bc = BirkhoffConfig()
        if "k" in b:
            bc.k = _num_list(b["k"], "birkhoff", err)
            if any(k <= 0 for k in bc.k):
                err("birkhoff", "birkhoff k must be positive")
        if "t_grid" in b:
            bc.t_grid = _grid(b["t_grid"], "birkhoff", err)
        if "trials" in b:
            if isinstance(b["trials"], bool) or not isinstance(b["trials"], int) or b["trials"] < 1:
                err("birkhoff", "birkhoff trials must be a positive integer")
            bc.trials = b["trials"]
        cfg.birkhoff = bc
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", None, str(path)) from None
    return parse_config(text, str(path), path.parent)
