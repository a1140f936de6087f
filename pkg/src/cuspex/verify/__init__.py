"""Independent oracles and lemma checks."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from ..horoworld import (
    Horoball,
    HoroballCollection,
    enumerate_horoballs,
    record_for,
)
from ..hypgeom import BoundaryPoint, Geodesic, InteriorPoint, geodesic_between
from .bfs import DEFAULT_MAX_NORM, RadiusExhausted, bfs_records

__all__ = [
    "OracleReport", "QuadratureFailure", "RadiusExhausted", "arc_length_excursion_oracle",
    "arc_length_report", "backend_equivalence_report", "bfs_enumeration_oracle",
    "lemma_suite", "run_all", "bfs_records", "DEFAULT_MAX_NORM",
]


class QuadratureFailure(RuntimeError):
    pass


@dataclass
class OracleReport:
    name: str
    trials: int
    value: float
    tolerance: float
    passed: bool
    kind: str = "max_rel_error"
    worst_input: Optional[dict] = None
    details: Dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self):
        d = asdict(self)
        for key in ("value", "tolerance"):
            if isinstance(d[key], float) and not math.isfinite(d[key]):
                d[key] = repr(d[key])
        return d

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: {self.kind}={self.value:.3g} (tol {self.tolerance:g}, n={self.trials})"


def reports_to_json(reports: List[OracleReport]) -> str:
    return json.dumps({"schema": 1, "reports": [r.to_dict() for r in reports],
                       "passed": all(r.passed for r in reports)}, indent=2, default=str)


# ---------------------------------------------------------------------------
# Arc-length oracle
# ---------------------------------------------------------------------------


def _geodesic_param(gamma: Geodesic):
    """theta -> (z, y) on the semicircle (or vertical line) and the theta range."""
    al, be = gamma.alpha, gamma.beta
    if al is None or be is None:
        w = be if al is None else al
        return (lambda s: (w, math.exp(s))), (-60.0, 60.0)
    m = 0.5 * (al + be)
    r = 0.5 * abs(be - al)
    u = (al - m) / r
    return (lambda th: (m + r * math.cos(th) * u, r * math.sin(th))), (0.0, math.pi)


def _inside_fn(H: Horoball):
    if H.at_infinity:
        h = H.size
        return lambda z, y: y - h
    w, D = H.base.z, H.size
    return lambda z, y: D * y - abs(z - w) ** 2 - y * y


def _crossing_points(gamma: Geodesic, H: Horoball, grid: int = 4000):
    f, (lo, hi) = _geodesic_param(gamma)
    g = _inside_fn(H)

    def vals(s):
        return g(*f(s))

    ss = np.linspace(lo, hi, grid + 1)[1:-1]
    v = np.array([vals(s) for s in ss])
    i = int(np.argmax(v))
    top = ss[i]
    if v[i] <= 0:
        # a thin crossing can hide between grid nodes
        res = minimize_scalar(lambda s: -vals(s), bounds=(ss[max(i - 1, 0)], ss[min(i + 1, grid - 2)]),
                              method="bounded", options={"xatol": 1e-14})
        if -res.fun <= 0:
            return None
        top = res.x
    left = np.nonzero(v[: i + 1] <= 0)[0]
    right = np.nonzero(v[i:] <= 0)[0]
    a = ss[left[-1]] if left.size else lo
    b = ss[i + right[0]] if right.size else hi
    s1 = brentq(vals, a, top, xtol=1e-15, rtol=1e-15, maxiter=500)
    s2 = brentq(vals, top, b, xtol=1e-15, rtol=1e-15, maxiter=500)
    return f(s1), f(s2)


def arc_length_excursion_oracle(gamma: Geodesic, H: Horoball) -> float:
    """Length of the shortest horospherical path between entry and exit, by quadrature."""
    pts = _crossing_points(gamma, H)
    if pts is None:
        return 0.0
    (z1, y1), (z2, y2) = pts
    if H.at_infinity:
        h = H.size
        speed = abs(z2 - z1)
        val, err = quad(lambda s: speed / h, 0.0, 1.0, epsabs=1e-9)
        return val
    w = H.base.z

    def invert(z, y):
        n = abs(z) ** 2 + y * y
        return z / n, y / n

    # inversion about the base point maps the horosphere to a horizontal
    # plane; shortest paths there are straight, so pull a straight segment back
    a = invert(z1 - w, y1)
    b = invert(z2 - w, y2)

    def path(s):
        z = a[0] + s * (b[0] - a[0])
        y = a[1] + s * (b[1] - a[1])
        zz, yy = invert(z, y)
        return zz + w, yy

    va = (b[0] - a[0], b[1] - a[1])

    def integrand(s):
        # Euclidean speed through the Jacobian of the inversion, over height
        z = a[0] + s * va[0]
        y = a[1] + s * va[1]
        n = abs(z) ** 2 + y * y
        dot = (z.real * va[0].real + z.imag * va[0].imag + y * va[1])
        jz = (va[0] * n - 2.0 * z * dot) / (n * n)
        jy = (va[1] * n - 2.0 * y * dot) / (n * n)
        speed = math.sqrt(abs(jz) ** 2 + jy * jy)
        return speed / path(s)[1]

    val, err = quad(integrand, 0.0, 1.0, epsabs=1e-9, epsrel=1e-10, limit=200)
    if not math.isfinite(val) or err > 1e-6 * max(1.0, val):
        raise QuadratureFailure(f"quadrature error estimate {err:.3g}")
    return val


def random_crossing_config(rng, dim: int):
    """A random geodesic with a horoball it crosses."""
    def rnd_boundary():
        if dim == 2:
            return complex(rng.normal() * 2.0, 0.0)
        return complex(rng.normal() * 2.0, rng.normal() * 2.0)

    while True:
        al, be = rnd_boundary(), rnd_boundary()
        if abs(al - be) > 1e-3:
            break
    gamma = geodesic_between(BoundaryPoint(al, dim), BoundaryPoint(be, dim),
                             InteriorPoint(0.5 * (al + be), 1.0, dim))
    p = gamma.point(float(rng.uniform(-2.0, 2.0)))
    if rng.random() < 0.2:
        H = Horoball(BoundaryPoint(None, dim), p.height * float(rng.uniform(0.2, 0.98)))
        return gamma, H
    w = p.z + complex(*(rng.normal(size=2) * p.height)) if dim == 3 else p.z + rng.normal() * p.height
    w = complex(w)
    if dim == 2:
        w = complex(w.real, 0.0)
    d_min = (abs(p.z - w) ** 2 + p.height ** 2) / p.height
    H = Horoball(BoundaryPoint(w, dim), d_min * float(1.0 + rng.uniform(0.05, 3.0)))
    return gamma, H


def arc_length_report(trials: int = 1000, seed: int = 0, tol: float = 1e-6) -> OracleReport:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, worst_in = 0.0, None
    for dim in (2, 3):
        for _ in range(trials):
            gamma, H = random_crossing_config(rng, dim)
            rec = record_for(gamma, H)
            ref = arc_length_excursion_oracle(gamma, H)
            val = rec.excursion if rec is not None else 0.0
            err = abs(val - ref) / max(ref, 1e-300) if ref > 0 else abs(val)
            if err > worst or not math.isfinite(err):
                worst = err if math.isfinite(err) else math.inf
                worst_in = {"dim": dim, "alpha": str(gamma.alpha), "beta": str(gamma.beta),
                            "base": str(H.base.z), "size": H.size, "closed_form": val, "oracle": ref}
    return OracleReport("closed-form excursion vs arc length", 2 * trials, worst, tol,
                        worst <= tol, "max_rel_error", worst_in,
                        seconds=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Enumeration cross-check
# ---------------------------------------------------------------------------


def bfs_enumeration_oracle(gamma: Geodesic, window, epsilon: float, collection=None,
                           max_norm: float = DEFAULT_MAX_NORM):
    collection = collection or HoroballCollection("psl2z" if gamma.dim == 2 else "psl2zi")
    a, b = (0.0, float(window)) if isinstance(window, (int, float)) else window
    if b <= a:
        return []
    recs = bfs_records(gamma, (a, b), collection, max_norm)
    return [r for r in recs if r.excursion >= epsilon]


def random_window(rng, collection, max_len: float = 20.0):
    """Geodesic and window around the top of its semicircle, with thick ends."""
    dim = collection.dim
    while True:
        c = complex(rng.uniform(-3, 3), rng.uniform(-3, 3) if dim == 3 else 0.0)
        r = float(np.exp(rng.uniform(math.log(0.3), math.log(3.0))))
        ang = rng.uniform(0, 2 * math.pi) if dim == 3 else (0.0 if rng.random() < 0.5 else math.pi)
        u = complex(math.cos(ang), math.sin(ang))
        al, be = c - r * u, c + r * u
        if dim == 2:
            al, be = complex(al.real, 0.0), complex(be.real, 0.0)
        gamma = geodesic_between(BoundaryPoint(al, dim), BoundaryPoint(be, dim),
                                 InteriorPoint(c, r, dim))
        L = float(rng.uniform(1.0, max_len))
        a = -0.5 * L
        pa, pb = gamma.point(a), gamma.point(a + L)
        if collection.is_thick(pa) and collection.is_thick(pb):
            return gamma, (a, a + L)


def _key(rec, nd=9):
    H = rec.horoball
    return (H.key, round(rec.t_entry, nd), round(rec.t_exit, nd))


def backend_equivalence_report(group: str = "psl2z", windows: int = 100, epsilon: float = 1e-4,
                               seed: int = 0, height: float = 1.2) -> OracleReport:
    t0 = time.perf_counter()
    coll = HoroballCollection(group, height)
    rng = np.random.default_rng(seed)
    mismatches, worst_in, total = 0, None, 0
    for _ in range(windows):
        gamma, win = random_window(rng, coll)
        cf = enumerate_horoballs(gamma, win, epsilon, backend="cf", collection=coll)
        bf = bfs_enumeration_oracle(gamma, win, epsilon, coll)
        total += len(cf)
        a = sorted(_key(r, 6) for r in cf)
        b = sorted(_key(r, 6) for r in bf)
        if a != b:
            mismatches += 1
            if worst_in is None:
                worst_in = {"alpha": str(gamma.alpha), "beta": str(gamma.beta), "window": win,
                            "cf": len(a), "bfs": len(b)}
    return OracleReport(f"cf vs bfs enumeration ({group})", windows, float(mismatches), 0.0,
                        mismatches == 0, "mismatched_windows", worst_in,
                        {"records_compared": total}, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Lemma suite
# ---------------------------------------------------------------------------


def recurrence_report(trials: int = 10, steps: int = 10_000, seed: int = 0) -> OracleReport:
    """d_{i+1} = d_i + c exp(-d_i/2) stays above 2 log(1 + i c / 2)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    violations, worst, worst_in = 0, -math.inf, None
    with mpmath.workdps(30):
        for _ in range(trials):
            c = mpmath.mpf(float(rng.uniform(1e-3, 2.0 - 1e-3)))
            d = mpmath.mpf(float(rng.exponential(2.0))) if rng.random() < 0.7 else mpmath.mpf(0)
            c0, d0 = c, d
            for i in range(steps + 1):
                bound = 2 * mpmath.log1p(i * c / 2)
                gap = bound - d
                if gap > 0:
                    violations += 1
                if gap > worst:
                    worst, worst_in = float(gap), {"c": float(c0), "d0": float(d0), "i": i}
                d = d + c * mpmath.exp(-d / 2)
    return OracleReport("recurrence lower bound", trials * (steps + 1), float(violations), 0.0,
                        violations == 0, "violations", worst_in, {"max_gap": worst},
                        time.perf_counter() - t0)


def powers_k_report(trials: int = 10_000, seed: int = 0) -> OracleReport:
    """(x+y)^k <= x^k + 2^(k-1) k y (x^(k-1) + y^(k-1)) for x, y >= 0, k >= 1."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    violations, worst_in = 0, None
    with mpmath.workdps(50):
        for _ in range(trials):
            x = mpmath.mpf(float(rng.exponential(1.0)) * 10 ** float(rng.uniform(-3, 3)))
            y = mpmath.mpf(float(rng.exponential(1.0)) * 10 ** float(rng.uniform(-3, 3)))
            if rng.random() < 0.05:
                x = mpmath.mpf(0)
            if rng.random() < 0.05:
                y = mpmath.mpf(0)
            k = mpmath.mpf(1 + float(rng.exponential(1.5)))
            lhs = (x + y) ** k
            rhs = x ** k + 2 ** (k - 1) * k * y * (x ** (k - 1) + y ** (k - 1))
            if lhs > rhs:
                violations += 1
                worst_in = {"x": float(x), "y": float(y), "k": float(k)}
    return OracleReport("powers inequality", trials, float(violations), 0.0, violations == 0,
                        "violations", worst_in, seconds=time.perf_counter() - t0)


def chord_config(y1: float, ell: float):
    """Horoball left of {x = 0} entering at i y1 with chord ell: (R, S, base)."""
    s = math.tanh(0.5 * ell)
    c = 1.0 / math.cosh(0.5 * ell)
    R = y1 / (1.0 - s)
    S = R * (1.0 - c)
    return R, S, S - R


def compute_report(trials: int = 1000, seed: int = 0, band: float = 1e-9) -> OracleReport:
    """Chord bound 2 log(1 + sqrt(2 delta / y1)) holds iff the horoball misses {x = delta}."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    bad, skipped, worst_in = 0, 0, None
    for _ in range(trials):
        y1 = float(np.exp(rng.uniform(0.0, 5.0)))
        ell = float(np.exp(rng.uniform(-6.0, 2.0)))
        R, S, base = chord_config(y1, ell)
        # delta on either side of tangency, some extremely close
        eta = float(10 ** rng.uniform(-12, 0)) * (1 if rng.random() < 0.5 else -1)
        delta = S * (1.0 + eta)
        if abs(delta - S) <= band * S:
            skipped += 1
            continue
        disjoint = delta - base >= R
        inequality = ell <= 2.0 * math.log1p(math.sqrt(2.0 * delta / y1))
        if disjoint != inequality:
            bad += 1
            worst_in = {"y1": y1, "ell": ell, "delta": delta, "S": S}
    return OracleReport("chord bound iff disjoint", trials, float(bad), 0.0, bad == 0,
                        "misclassifications", worst_in, {"inside_band": skipped},
                        time.perf_counter() - t0)


def _stability(fit: Callable[[int, int], float], n: int, seed: int, tol: float = 0.10):
    c1 = fit(n, seed)
    c2 = fit(2 * n, seed + 1)
    rel = abs(c2 - c1) / max(abs(c1), 1e-300)
    return c1, c2, rel, rel <= tol


def _vertical_crossing(R: float, bx: float, bz: float, x: float):
    """Heights where {x} x {0} meets the horoball of radius R at (bx, bz); None if it misses."""
    disc = R * R - (bx - x) ** 2 - bz * bz
    if disc <= 0:
        return None
    s = math.sqrt(disc)
    return R - s, R + s


def _exc(y1, y2):
    return 2.0 * math.sinh(0.5 * math.log(y2 / y1))


def comparison_sample(rng, delta: float, dim: int = 3):
    """Horoball meeting {x = 0} at y1 >= 1 and missing {x = delta}."""
    while True:
        y1 = float(np.exp(rng.uniform(0.0, 8.0)))
        ell_max = 2.0 * math.log1p(math.sqrt(2.0 * delta / y1))
        ell = ell_max * float(rng.uniform(0.0, 1.0) ** 0.5)
        if ell <= 0:
            continue
        R, S, base = chord_config(y1, ell)
        # rotate the base out of the plane about the geodesic
        phi = float(rng.uniform(-math.pi / 2, math.pi / 2)) if dim == 3 else 0.0
        bx, bz = base * math.cos(phi), base * math.sin(phi)
        hit = _vertical_crossing(R, bx, bz, 0.0)
        if hit is None or hit[0] < 1.0:
            continue
        if _vertical_crossing(R, bx, bz, delta) is not None:
            continue
        return hit, (R, bx, bz)


def excursion_comparison_fit(n: int, seed: int, k: float = 2.0, delta: float = 1.0) -> float:
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n):
        (y1, y2), _ = comparison_sample(rng, delta)
        E = _exc(y1, y2)
        e = (k - 1) / 2
        integral = (y1 ** -e - y2 ** -e) / e
        best = max(best, E ** k / integral)
    return best


def dist1_sample(rng, delta: float, dim: int = 3):
    """Horoball meeting {x=0} and {x=delta} with both entry heights >= 1 + delta."""
    while True:
        R = float(np.exp(rng.uniform(math.log(1.0 + delta), 10.0)))
        bx = float(rng.uniform(-R, R + delta))
        bz = float(rng.uniform(-R, R)) if dim == 3 else 0.0
        h0 = _vertical_crossing(R, bx, bz, 0.0)
        h1 = _vertical_crossing(R, bx, bz, delta)
        if h0 is None or h1 is None:
            continue
        if h0[0] < 1.0 + delta or h1[0] < 1.0 + delta:
            continue
        return h0, h1, (R, bx, bz)


def dist1_fit(n: int, seed: int, delta: float = 1.0) -> float:
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n):
        (a1, a2), (b1, b2), _ = dist1_sample(rng, delta)
        d = math.log(a1)
        best = max(best, abs(_exc(a1, a2) - _exc(b1, b2)) * math.exp(0.5 * d))
    return best


def disjoint_family(rng, delta: float, attempts: int = 400):
    """Random sequential family of disjoint horoballs meeting {x=0, y>=1}, missing {x=delta}.

    Works in the plane; returns a list of (y1, y2, base, diameter).
    """
    fam = []
    for _ in range(attempts):
        y1 = float(np.exp(rng.exponential(1.5)))
        ell_max = 2.0 * math.log1p(math.sqrt(2.0 * delta / y1))
        # extremal families are made of horoballs nearly tangent to {x = delta}
        ell = ell_max * (1.0 - float(rng.uniform(0.0, 1.0)) ** 16)
        if ell <= 0:
            continue
        R, S, base = chord_config(y1, ell)
        if base + R > delta:
            continue
        D = 2.0 * R
        if all((base - b) ** 2 >= D * d for _, _, b, d in fam):
            y2 = y1 * math.exp(ell)
            fam.append((y1, y2, base, D))
    return fam


def disjoint_family_fit(n: int, seed: int, k: float = 2.0, delta: float = 1.0) -> float:
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n):
        fam = disjoint_family(rng, delta)
        total = math.fsum(_exc(y1, y2) ** k for y1, y2, _, _ in fam)
        best = max(best, total / (2.0 / (k - 1)))
    return best


def _fit_report(name: str, fit, n: int, seed: int) -> OracleReport:
    t0 = time.perf_counter()
    c1, c2, rel, ok = _stability(fit, n, seed)
    return OracleReport(name, 3 * n, c2, 0.10, ok, "fitted_constant", None,
                        {"c_n": c1, "c_2n": c2, "relative_change": rel},
                        time.perf_counter() - t0)


def lemma_suite(seed: int = 0, scale: float = 1.0) -> List[OracleReport]:
    n = max(10, int(1000 * scale))
    return [
        recurrence_report(seed=seed),
        powers_k_report(trials=max(100, int(10_000 * scale)), seed=seed),
        compute_report(trials=n, seed=seed),
        _fit_report("disjoint-family bound (k=2, delta=1)", disjoint_family_fit, n, seed),
        _fit_report("entry-distance excursion gap (delta=1)", dist1_fit, n, seed),
        _fit_report("excursion vs height integral (k=2, delta=1)", excursion_comparison_fit, n, seed),
    ]


def run_all(seed: int = 0, scale: float = 1.0) -> List[OracleReport]:
    """Every oracle; scale < 1 shrinks trial counts for quick runs."""
    n = max(10, int(1000 * scale))
    reports = [arc_length_report(n, seed)]
    reports.append(backend_equivalence_report("psl2z", max(5, int(100 * scale)), seed=seed))
    reports.append(backend_equivalence_report("psl2zi", max(3, int(50 * scale)), seed=seed))
    reports.extend(lemma_suite(seed, scale))
    return reports
