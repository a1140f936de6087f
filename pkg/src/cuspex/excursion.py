"""kth excursion sums along geodesics and sample paths, and flow averages."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import mpmath
import numpy as np
from scipy.special import beta as beta_fn, betainc

from . import lattice
from .horoworld import (
    DEFAULT_EPSILON,
    ExcursionRecord,
    FiniteHoroballCollection,
    HoroballCollection,
    _walker_for,
    enumerate_horoballs,
    exact_pair,
    record_for,
)
from .hypgeom import (
    BoundaryPoint,
    Geodesic,
    InteriorPoint,
    Isometry,
    TangentVector,
    _through,
    geodesic_between,
    geodesic_from_tangent,
    hyp_distance,
    mobius_apply_interior,
)
from .lattice import GroupElement
from .samplers import RaySample, TwoSidedPath, make_rng, sample_lebesgue_direction


class EndpointInHoroball(ValueError):
    pass


# ---------------------------------------------------------------------------
# Records along a geodesic
# ---------------------------------------------------------------------------


def _default_collection(gamma: Geodesic):
    return HoroballCollection("psl2z" if gamma.dim == 2 else "psl2zi")


def _records(gamma: Geodesic, a: float, b: float, collection) -> List[ExcursionRecord]:
    """Every record with midpoint in [a, b], no cutoff."""
    if isinstance(collection, FiniteHoroballCollection):
        recs = [r for r in (record_for(gamma, H) for H in collection.horoballs) if r is not None]
        return sorted((r for r in recs if a <= r.midpoint_time <= b), key=lambda r: r.midpoint_time)
    return _walker_for(gamma, collection).records_between(a, b)


def _overlapping(gamma: Geodesic, a: float, b: float, collection) -> List[ExcursionRecord]:
    """Records whose chord meets (a, b)."""
    if isinstance(collection, FiniteHoroballCollection):
        recs = [r for r in (record_for(gamma, H) for H in collection.horoballs) if r is not None]
    else:
        w = _walker_for(gamma, collection)
        w.cover(a - 1.0, b + 1.0)
        recs = list(w.records.values())
    out = [r for r in recs if r.t_exit > a and r.t_entry < b]
    out.sort(key=lambda r: r.midpoint_time)
    return out


def slide_to_thick(gamma: Geodesic, t: float, collection) -> float:
    """First time >= t at which gamma is outside every horoball."""
    if isinstance(collection, FiniteHoroballCollection):
        recs = [r for r in (record_for(gamma, H) for H in collection.horoballs) if r is not None]
        moved = True
        while moved:
            moved = False
            for r in recs:
                if r.t_entry < t < r.t_exit:
                    t = r.t_exit
                    moved = True
        return t
    return _walker_for(gamma, collection).slide_to_thick(t)


class ExcursionSum:
    """Value and neglected-tail bound of one kth excursion sum.

    Unpacks as ``value, truncation_bound``.
    """

    __slots__ = ("value", "truncation_bound", "n_horoballs", "n_skipped", "t_start", "t_end")

    def __init__(self, value, truncation_bound, n_horoballs=0, n_skipped=0, t_start=0.0, t_end=0.0):
        self.value = value
        self.truncation_bound = truncation_bound
        self.n_horoballs = n_horoballs
        self.n_skipped = n_skipped
        self.t_start = t_start
        self.t_end = t_end

    def __iter__(self):
        yield self.value
        yield self.truncation_bound

    def __repr__(self):
        return (f"ExcursionSum(value={self.value!r}, truncation_bound={self.truncation_bound!r}, "
                f"n_horoballs={self.n_horoballs}, window=[{self.t_start}, {self.t_end}])")


def excursion_sum(gamma: Geodesic, t: float, k: float, collection=None,
                  epsilon: float = DEFAULT_EPSILON, backend: str = "cf") -> ExcursionSum:
    """Sum of E^k over horoballs with midpoint time in [0, t].

    Both window ends are moved forward to the next thick time when they
    fall inside a horoball.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    collection = collection or _default_collection(gamma)
    if t == 0:
        return ExcursionSum(0.0, 0.0)
    a = slide_to_thick(gamma, 0.0, collection)
    b = slide_to_thick(gamma, max(t, a), collection)
    kept, skipped = enumerate_horoballs(gamma, (a, b), epsilon, backend=backend,
                                        collection=collection, with_skipped=True)
    value = math.fsum(r.excursion ** k for r in kept)
    return ExcursionSum(value, skipped * epsilon ** k, len(kept), skipped, a, b)


@dataclass
class ExcursionSeries:
    k: float
    times: List[float]
    values: List[float]
    ratios: List[float]
    truncation_bound: List[float]
    n_horoballs: List[int] = field(default_factory=list)
    effective_times: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be increasing")

    def to_rows(self):
        for i, t in enumerate(self.times):
            yield {"k": self.k, "t": t, "excursion_sum": self.values[i], "ratio": self.ratios[i],
                   "truncation_bound": self.truncation_bound[i],
                   "n_horoballs": self.n_horoballs[i] if self.n_horoballs else 0}


def default_grid(j_max: int = 5, base: float = 250.0) -> List[float]:
    return [base * 2 ** j for j in range(j_max + 1)]


def rho_series(ray, k: float, t_grid: Optional[Sequence[float]] = None, collection=None,
               epsilon: float = DEFAULT_EPSILON) -> ExcursionSeries:
    """Running averages of the kth excursion along a ray, on a time grid."""
    gamma = ray.geodesic if isinstance(ray, RaySample) else ray
    t_grid = list(t_grid) if t_grid is not None else default_grid()
    collection = collection or _default_collection(gamma)
    a = slide_to_thick(gamma, 0.0, collection)
    ends = []
    for t in t_grid:
        ends.append(slide_to_thick(gamma, max(t, a), collection))
    recs = _records(gamma, a, ends[-1], collection)
    mids = np.array([r.midpoint_time for r in recs])
    exc = np.array([r.excursion for r in recs])
    big = exc >= epsilon
    contrib = np.where(big, exc, 0.0) ** k
    csum = np.cumsum(contrib)
    cbig = np.cumsum(big)
    values, ratios, bounds, counts = [], [], [], []
    for t, b in zip(t_grid, ends):
        n = int(np.searchsorted(mids, b, side="right"))
        v = float(csum[n - 1]) if n else 0.0
        nb = int(cbig[n - 1]) if n else 0
        values.append(v)
        ratios.append(v / t)
        bounds.append((n - nb) * epsilon ** k)
        counts.append(nb)
    return ExcursionSeries(k, list(t_grid), values, ratios, bounds, counts, ends)


# ---------------------------------------------------------------------------
# Sample paths
# ---------------------------------------------------------------------------


def step_excursion(path: TwoSidedPath, n: int, k: float, collection=None) -> float:
    """Sum of E^k over horoballs whose midpoint lies between p_0 and p_n."""
    if n == 0:
        return 0.0
    gamma = path.geodesic()
    collection = collection or _default_collection(gamma)
    t_n = path.projection_times([n])[0]
    lo, hi = min(0.0, t_n), max(0.0, t_n)
    return math.fsum(r.excursion ** k for r in _records(gamma, lo, hi, collection))


# ---------------------------------------------------------------------------
# Isometries acting on geodesics with exact endpoints
# ---------------------------------------------------------------------------


def translate_geodesic(g: GroupElement, gamma: Geodesic) -> Geodesic:
    """g gamma with exact endpoints carried along; times are preserved."""
    ring = g.ring
    out = []
    for xi in (gamma.backward, gamma.forward):
        p, q = exact_pair(ring, xi)
        p, q = lattice.apply_projective(g, p, q)
        out.append(BoundaryPoint.from_exact(ring, p, q))
    anchor = mobius_apply_interior(Isometry.from_group_element(g), gamma.origin_time_anchor)
    return geodesic_between(out[0], out[1], anchor)


# ---------------------------------------------------------------------------
# Thick distance
# ---------------------------------------------------------------------------


def thick_distance(x: InteriorPoint, y: InteriorPoint, collection=None) -> float:
    """Length of [x, y] with each horoball chord replaced by its horospherical arc."""
    collection = collection or HoroballCollection("psl2z" if x.dim == 2 else "psl2zi")
    for p in (x, y):
        if collection.containing_horoball(p) is not None:
            raise EndpointInHoroball("thick distance needs endpoints in the thick part")
    d = hyp_distance(x, y)
    if d == 0.0:
        return 0.0
    gamma = _through(x, y)
    extra = 0.0
    for r in _overlapping(gamma, 0.0, d, collection):
        extra += r.excursion - r.chord
    return d + extra


# ---------------------------------------------------------------------------
# The observable f_k and its flow averages
# ---------------------------------------------------------------------------


def f_k_observable(v, k: float, collection=None) -> float:
    """depth^k of the foot point, 1 in the thick part."""
    p = v.point if isinstance(v, TangentVector) else v
    collection = collection or HoroballCollection("psl2z" if p.dim == 2 else "psl2zi")
    depth = collection.depth(p)
    if depth <= 1.0:
        return 1.0
    return math.exp(k * math.log(depth))


def sech_power_integral(u: float, k: float) -> float:
    """Integral of sech(s)^k over [0, u], signed in u."""
    if u == 0.0:
        return 0.0
    s = math.copysign(1.0, u)
    u = abs(u)
    if math.isinf(u):
        return s * 0.5 * beta_fn(0.5 * k, 0.5)
    x = math.tanh(u) ** 2
    return s * 0.5 * beta_fn(0.5 * k, 0.5) * betainc(0.5, 0.5 * k, x)


def crossing_integral(rec: ExcursionRecord, k: float, a: float = -math.inf,
                      b: float = math.inf) -> float:
    """Integral of f_k along the part of a crossing inside [a, b].

    Inside the horoball the depth at time s is cosh(l/2) sech(s - m), with l
    the chord and m the midpoint time.
    """
    lo = max(rec.t_entry, a)
    hi = min(rec.t_exit, b)
    if hi <= lo:
        return 0.0
    m = rec.midpoint_time
    scale = math.cosh(0.5 * rec.chord) ** k
    return scale * (sech_power_integral(hi - m, k) - sech_power_integral(lo - m, k))


def c_k(k: float) -> float:
    """2 * int_0^1 u^(k-1) (1-u^2)^(-1/2) du."""
    return float(beta_fn(0.5 * k, 0.5))


def birkhoff_integral(gamma: Geodesic, t: float, k: float, collection) -> float:
    """Integral of f_k along gamma over [0, t]."""
    total = 0.0
    inside = 0.0
    for r in _overlapping(gamma, 0.0, t, collection):
        total += crossing_integral(r, k, 0.0, t)
        inside += min(r.t_exit, t) - max(r.t_entry, 0.0)
    return total + (t - inside)


def birkhoff_average(v, k: float, t: float, collection=None) -> float:
    """(1/t) times the integral of f_k along the flow line of v over [0, t].

    ``v`` is a TangentVector or a Geodesic anchored at its foot point.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    gamma = geodesic_from_tangent(v) if isinstance(v, TangentVector) else v
    collection = collection or _default_collection(gamma)
    return birkhoff_integral(gamma, t, k, collection) / t


def sample_liouville(seed=0, t_max: float = 1e4, dim: int = 2) -> RaySample:
    """Unit tangent vector uniform for Liouville measure on the quotient.

    The foot point is uniform in the standard fundamental domain (hyperbolic
    volume), the direction uniform on the unit sphere.
    """
    rng = make_rng(seed)
    if dim == 2:
        y0 = 0.5 * math.sqrt(3.0)
        while True:
            x = float(rng.uniform(-0.5, 0.5))
            y = y0 / float(1.0 - rng.random())
            if x * x + y * y >= 1.0:
                break
        foot = InteriorPoint(x, y, 2)
    else:
        y0 = math.sqrt(0.5)
        while True:
            z = complex(float(rng.uniform(-0.5, 0.5)), float(rng.uniform(0.0, 0.5)))
            y = y0 / math.sqrt(float(1.0 - rng.random()))
            if abs(z) ** 2 + y * y >= 1.0:
                break
        foot = InteriorPoint(z, y, 3)
    return sample_lebesgue_direction(foot, rng, dim, t_max=t_max)


def fundamental_volume(group: str = "psl2z") -> float:
    if group == "psl2z":
        return math.pi / 3.0
    if group == "psl2zi":
        return float(mpmath.catalan) / 3.0
    raise ValueError(f"no volume data for {group!r}")


def birkhoff_target(k: float, height: float = 1.2, group: str = "psl2z") -> float:
    """Average of f_k over the unit tangent bundle; inf when the integral diverges.

    In the cusp chart the volume element is y^-N times the cross-section
    measure, so the cusp part contributes area(C) h^-(N-1) / (N-1-k).
    """
    n1 = 1 if group == "psl2z" else 2
    if k >= n1:
        return math.inf
    vol = fundamental_volume(group)
    cross = 1.0 if group == "psl2z" else 0.5
    cusp_vol = cross * height ** -n1 / n1
    cusp_fk = cross * height ** -n1 / (n1 - k)
    return (vol - cusp_vol + cusp_fk) / vol


def birkhoff_trials(k: float, t: float, trials: int, seed=0, collection=None,
                    grid: Optional[Sequence[float]] = None):
    """Flow averages from Liouville starts; one row of values per trial over the grid."""
    collection = collection or HoroballCollection("psl2z")
    dim = collection.dim
    grid = list(grid) if grid is not None else [t]
    ss = np.random.SeedSequence(seed)
    out = []
    for child in ss.spawn(trials):
        ray = sample_liouville(child, t_max=max(grid), dim=dim)
        gamma = ray.geodesic
        out.append([birkhoff_integral(gamma, s, k, collection) / s for s in grid])
    return out
