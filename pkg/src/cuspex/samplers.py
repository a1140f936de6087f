"""Boundary points from random walks and from the visual (Lebesgue) measure."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from . import exactgeom as xg
from . import lattice
from .hypgeom import BoundaryPoint, Geodesic, InteriorPoint, geodesic_between
from .horoworld import HoroballCollection, rational_pair
from .lattice import GroupElement, GroupPreset, ZZ

ORIGIN2 = InteriorPoint(0.0, 1.0, 2)
ORIGIN3 = InteriorPoint(0j, 1.0, 3)

ENDPOINT_DRIFT_TOL = 1e-6
TRACKING_TOL = 0.5
TAIL_MARGIN = 60.0


class NotConverged(RuntimeError):
    pass


def origin(dim: int) -> InteriorPoint:
    return ORIGIN2 if dim == 2 else ORIGIN3


def make_rng(seed):
    """numpy Generator from an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


# ---------------------------------------------------------------------------
# Step measures and paths
# ---------------------------------------------------------------------------


@dataclass
class StepMeasure:
    support: List[Tuple[GroupElement, float]]
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.support:
            raise ValueError("step measure needs a nonempty support")
        probs = [p for _, p in self.support]
        if any(not p > 0 for p in probs):
            raise ValueError("step probabilities must be positive")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"step probabilities sum to {sum(probs)}, not 1")
        if not self.labels:
            self.labels = [f"g{i}" for i in range(len(self.support))]

    @property
    def ring(self):
        return self.support[0][0].ring

    @property
    def elements(self) -> List[GroupElement]:
        return [g for g, _ in self.support]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.support])

    @classmethod
    def uniform(cls, elements: Sequence[GroupElement], labels: Sequence[str] = ()):
        n = len(elements)
        return cls([(g, 1.0 / n) for g in elements], list(labels))

    def inverse_measure(self) -> "StepMeasure":
        return StepMeasure([(lattice.inverse(g), p) for g, p in self.support],
                           [f"{lab}^-1" for lab in self.labels])

    def generation_check(self, group: GroupPreset, radius: int = 6) -> bool:
        """Semigroup ball of the support reaches every preset generator."""
        targets = set(group.generators[k] for k in group.generators if k in ("S", "T", "U"))
        seen = {GroupElement.identity(self.ring)}
        frontier = list(seen)
        for _ in range(radius):
            nxt = []
            for w in frontier:
                for g in self.elements:
                    x = w * g
                    if x not in seen:
                        seen.add(x)
                        nxt.append(x)
            frontier = nxt
            if targets <= seen:
                return True
        return targets <= seen


def default_measure(group) -> StepMeasure:
    if isinstance(group, str):
        group = lattice.preset(group)
    gens = group.generators
    if group.ring is ZZ:
        els = [gens["S"], gens["T"], lattice.inverse(gens["T"])]
        labels = ["S", "T", "T^-1"]
    else:
        els = [gens["S"], gens["T"], lattice.inverse(gens["T"]), gens["U"], lattice.inverse(gens["U"])]
        labels = ["S", "T", "T^-1", "U", "U^-1"]
    return StepMeasure.uniform(els, labels)


def checked_measure(mu: StepMeasure, group: GroupPreset) -> StepMeasure:
    if not mu.generation_check(group):
        warnings.warn("step measure support does not reach the preset generators within radius 6",
                      stacklevel=2)
    return mu


@dataclass
class SamplePath:
    seed: object
    increments: List[GroupElement]
    positions: List[GroupElement]

    @property
    def n(self) -> int:
        return len(self.increments)

    @property
    def last(self) -> GroupElement:
        return self.positions[-1]


def _draw(mu: StepMeasure, n: int, rng) -> np.ndarray:
    if len(mu.support) == 1:
        return np.zeros(n, dtype=np.int64)
    return rng.choice(len(mu.support), size=n, p=mu.probabilities)


def sample_walk(mu: StepMeasure, n_steps: int, seed=0) -> SamplePath:
    rng = make_rng(seed)
    idx = _draw(mu, n_steps, rng)
    els = mu.elements
    w = GroupElement.identity(mu.ring)
    incs, pos = [], [w]
    for i in idx:
        g = els[int(i)]
        w = w * g
        incs.append(g)
        pos.append(w)
    return SamplePath(seed, incs, pos)


def path_from_increments(increments: Sequence[GroupElement], seed=None) -> SamplePath:
    w = GroupElement.identity(increments[0].ring) if increments else GroupElement.identity()
    pos = [w]
    for g in increments:
        w = w * g
        pos.append(w)
    return SamplePath(seed, list(increments), pos)


# ---------------------------------------------------------------------------
# Rays
# ---------------------------------------------------------------------------


@dataclass
class RaySample:
    kind: str
    endpoint: BoundaryPoint
    anchor: InteriorPoint
    backward: BoundaryPoint
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def geodesic(self) -> Geodesic:
        return geodesic_between(self.backward, self.endpoint, self.anchor)


def _column_endpoint(w: GroupElement) -> BoundaryPoint:
    return BoundaryPoint.from_exact(w.ring, w.a, w.c)


def _pair_distance(ring, p1, q1, p2, q2) -> float:
    """|p1/q1 - p2/q2| for exact pairs with q1, q2 nonzero."""
    num = ring.sub(ring.mul(p1, q2), ring.mul(p2, q1))
    den = ring.mul(q1, q2)
    lnum = math.log(ring.norm(num)) if not ring.is_zero(num) else -math.inf
    return math.exp(0.5 * (lnum - math.log(ring.norm(den))))


def tracking_distance(w: GroupElement, x: InteriorPoint) -> float:
    """Distance from w x to the geodesic through x ending at the column point of w."""
    ring = w.ring
    bp, bq = xg.exact_antipode_pair(ring, x, w.a, w.c)
    # pull back by w^{-1}: the forward end goes to infinity
    wi = lattice.inverse(w)
    up, uq = lattice.apply_projective(wi, bp, bq)
    u = ring.ratio_to_complex(up, uq)
    return math.asinh(abs(u - x.z) / x.height)


def approx_forward_boundary(path: SamplePath, x: Optional[InteriorPoint] = None,
                            drift_tol: float = ENDPOINT_DRIFT_TOL,
                            tracking_tol: float = TRACKING_TOL) -> RaySample:
    """Endpoint estimate a/c of the last position, with convergence diagnostics.

    The tracking diagnostic is the distance from w_N x to the estimated ray
    divided by N.
    """
    ring = path.last.ring
    x = x or origin(ring.dim)
    N = path.n
    wN = path.last
    if N == 0 or ring.is_zero(wN.c):
        raise NotConverged("walk position fixes infinity; no boundary direction")
    wH = path.positions[N // 2]
    if ring.is_zero(wH.c):
        drift = math.inf
    else:
        drift = _pair_distance(ring, wH.a, wH.c, wN.a, wN.c)
    track = tracking_distance(wN, x)
    diag = {"n_steps": N, "endpoint_drift": drift, "tracking_distance": track,
            "tracking_per_step": track / N,
            "log_c2": math.log(ring.norm(wN.c))}
    if not (drift < drift_tol and track / N < tracking_tol):
        raise NotConverged(f"diagnostics failed: drift={drift:.3g}, tracking/N={track / N:.3g}")
    xi = _column_endpoint(wN)
    bp, bq = xg.exact_antipode_pair(ring, x, wN.a, wN.c)
    return RaySample("rw", xi, x, BoundaryPoint.from_exact(ring, bp, bq), diag)


def sample_rw_ray(mu: StepMeasure, t_max: float, seed=0, x: Optional[InteriorPoint] = None,
                  margin: float = TAIL_MARGIN, max_steps: int = 2_000_000) -> RaySample:
    """Random-walk ray whose endpoint is accurate far beyond time t_max."""
    ring = mu.ring
    x = x or origin(ring.dim)
    rng = make_rng(seed)
    els = mu.elements
    target = t_max + margin
    w = GroupElement.identity(ring)
    incs: List[GroupElement] = []
    positions = [w]
    chunk = 256
    while len(incs) < max_steps:
        for i in _draw(mu, chunk, rng):
            g = els[int(i)]
            w = w * g
            incs.append(g)
            positions.append(w)
        if ring.is_zero(w.c):
            continue
        lc = math.log(ring.norm(w.c))
        if lc >= target:
            try:
                ray = approx_forward_boundary(SamplePath(seed, incs, positions), x)
            except NotConverged:
                chunk = 256
                continue
            ray.diagnostics["seed"] = repr(seed)
            return ray
        # growth so far predicts the remaining steps; stay a little short
        rate = max(lc / len(incs), 1e-3)
        chunk = int(min(max(256, 0.9 * (target - lc) / rate), 65536))
    raise NotConverged(f"no convergence within {max_steps} steps")


def _random_fraction(rng, bits: int) -> Fraction:
    words = (bits + 63) // 64
    v = 0
    for w in rng.integers(0, 2 ** 63, size=words, dtype=np.int64):
        v = (v << 63) | int(w)
    return Fraction(v, 1 << (63 * words))


def lebesgue_endpoint_from_direction(x: InteriorPoint, v_horizontal, v_vertical) -> BoundaryPoint:
    """Forward endpoint of the geodesic through x with the given unit direction."""
    z0, y0 = x.z, x.height
    h = abs(v_horizontal)
    if h == 0:
        return BoundaryPoint(None, x.dim) if v_vertical > 0 else BoundaryPoint(z0, x.dim)
    val = z0 + (v_horizontal / h) * y0 * (1 + v_vertical) / h
    if x.dim == 2:
        val = complex(val.real, 0.0)
    return BoundaryPoint(val, x.dim)


def sample_lebesgue_direction(x: Optional[InteriorPoint] = None, seed=0, dim: int = 2,
                              t_max: float = 1e4) -> RaySample:
    """Uniform unit direction at x and the forward endpoint it shoots at.

    The endpoint is computed at enough bits that the ray is exact up to time
    t_max; it is stored as an exact rational.
    """
    x = x or origin(dim)
    dim = x.dim
    ring = ZZ if dim == 2 else lattice.ZI
    rng = make_rng(seed)
    bits = int(math.ceil((t_max + 50.0) / math.log(2.0))) + 64
    z0r, z0i, y0 = Fraction(x.z.real), Fraction(x.z.imag), Fraction(x.height)
    with mpmath.workprec(bits + 64):
        if dim == 2:
            theta = 2 * mpmath.pi * xg.mp_of_fraction(_random_fraction(rng, bits))
            vx, vy = mpmath.cos(theta), mpmath.sin(theta)
            xi_r = xg.mp_of_fraction(z0r) + xg.mp_of_fraction(y0) * (1 + vy) / vx
            xi = (xg.fraction_of_mp(xi_r), Fraction(0))
            direction = (float(vx), 0.0, float(vy))
        else:
            vy = 2 * xg.mp_of_fraction(_random_fraction(rng, bits)) - 1
            psi = 2 * mpmath.pi * xg.mp_of_fraction(_random_fraction(rng, bits))
            rad = mpmath.sqrt((1 + vy) / (1 - vy)) * xg.mp_of_fraction(y0)
            xi_r = xg.mp_of_fraction(z0r) + rad * mpmath.cos(psi)
            xi_i = xg.mp_of_fraction(z0i) + rad * mpmath.sin(psi)
            xi = (xg.fraction_of_mp(xi_r), xg.fraction_of_mp(xi_i))
            s = mpmath.sqrt(1 - vy * vy)
            direction = (float(s * mpmath.cos(psi)), float(s * mpmath.sin(psi)), float(vy))
    if ring is ZZ:
        p, q = rational_pair(ring, xi[0])
    else:
        p, q = rational_pair(ring, xi[0], xi[1])
    bp, bq = xg.exact_antipode_pair(ring, x, p, q)
    diag = {"bits": bits, "direction": direction}
    return RaySample("lebesgue", BoundaryPoint.from_exact(ring, p, q), x,
                     BoundaryPoint.from_exact(ring, bp, bq), diag)


# ---------------------------------------------------------------------------
# Drift and tracking
# ---------------------------------------------------------------------------


def displacement(w: GroupElement, x: Optional[InteriorPoint] = None) -> float:
    """d(x, w x), evaluated without overflow."""
    ring = w.ring
    x = x or origin(ring.dim)
    if x.z == 0 and x.height == 1.0:
        # cosh d = |w|^2 / 2 for the Frobenius norm
        s = sum(ring.norm(e) for e in w.entries())
        if s < 2 ** 60:
            return math.acosh(max(1.0, s / 2.0))
        # acosh(s/2) = log s up to O(1/s^2)
        return math.log(s)
    with mpmath.workprec(xg.working_bits(w)):
        p = xg.MPPoint.from_point(x)
        return float(xg.distance(p, xg.act(w, p)))


def estimate_drift(mu: StepMeasure, n_steps: int, trials: int, seed=0,
                   x: Optional[InteriorPoint] = None) -> float:
    ss = np.random.SeedSequence(seed)
    vals = []
    for child in ss.spawn(trials):
        path = sample_walk(mu, n_steps, child)
        vals.append(displacement(path.last, x) / n_steps)
    return float(np.mean(vals))


def translation_length(g: GroupElement) -> float:
    tr = complex(*g.ring.parts(g.trace()))
    # complex translation length; its real part is the displacement along the axis
    lam = 2 * np.arccosh(tr / 2)
    return float(abs(lam.real))


def sublinear_tracking_diagnostic(path: SamplePath, ray: RaySample, drift: Optional[float] = None,
                                  stride: int = 1) -> Tuple[List[int], List[float]]:
    """Series n -> d(w_n x, gamma(L n)) / n along the ray's geodesic."""
    ring = path.last.ring
    x = ray.anchor
    if drift is None:
        drift = displacement(path.last, x) / max(path.n, 1)
    _, bp, bq = ray.backward.exact
    _, fp, fq = ray.endpoint.exact
    ns, vals = [], []
    with mpmath.workprec(xg.working_bits(path.last) + 64):
        al = xg.pair_to_mpc(ring, bp, bq)
        be = xg.pair_to_mpc(ring, fp, fq)
        x_mp = xg.MPPoint.from_point(x)
        t0 = xg.tau(al, be, x_mp)
        for n in range(stride, path.n + 1, stride):
            wx = xg.act(path.positions[n], x_mp)
            q = xg.point_at(al, be, t0 + drift * n)
            ns.append(n)
            vals.append(float(xg.distance(wx, q)) / n)
    return ns, vals


# ---------------------------------------------------------------------------
# Two-sided paths
# ---------------------------------------------------------------------------


class TwoSidedPath:
    """Increments g_k for lo <= k <= hi, viewed with an index shift.

    Positions satisfy w_0 = id, w_k = w_{k-1} g_k and w_{-k} = w_{-k+1} g_{-k+1}^{-1}.
    """

    def __init__(self, increments: Dict[int, GroupElement], lo: int, hi: int,
                 x: InteriorPoint, offset: int = 0, seed=None):
        self._incs = increments
        self._lo, self._hi = lo, hi
        self.offset = offset
        self.x = x
        self.seed = seed
        self.ring = increments[hi].ring
        self._pos: Dict[int, GroupElement] = {0: GroupElement.identity(self.ring)}
        self._geo = None

    @property
    def lo(self) -> int:
        return self._lo - self.offset

    @property
    def hi(self) -> int:
        return self._hi - self.offset

    def increment(self, k: int) -> GroupElement:
        return self._incs[k + self.offset]

    def position(self, k: int) -> GroupElement:
        pos = self._pos
        if k in pos:
            return pos[k]
        if k > 0:
            j = max(i for i in pos if i >= 0 and i < k) if any(0 <= i < k for i in pos) else 0
            w = pos[j]
            for i in range(j + 1, k + 1):
                w = w * self.increment(i)
                pos[i] = w
            return w
        j = min(i for i in pos if k < i <= 0)
        w = pos[j]
        for i in range(j - 1, k - 1, -1):
            w = w * lattice.inverse(self.increment(i + 1))
            pos[i] = w
        return w

    def shift(self, n: int) -> "TwoSidedPath":
        return TwoSidedPath(self._incs, self._lo, self._hi, self.x, self.offset + n, self.seed)

    def endpoints(self):
        """Exact estimates (pairs) of xi^- and xi^+ from the extreme positions."""
        wf = self.position(self.hi)
        wb = self.position(self.lo - 1)
        return (wb.a, wb.c), (wf.a, wf.c)

    def geodesic(self) -> Geodesic:
        if self._geo is None:
            (bp, bq), (fp, fq) = self.endpoints()
            self._geo = geodesic_between(BoundaryPoint.from_exact(self.ring, bp, bq),
                                         BoundaryPoint.from_exact(self.ring, fp, fq), self.x)
        return self._geo

    def _precision(self, ks) -> int:
        ws = [self.position(k) for k in ks] + [self.position(self.hi), self.position(self.lo - 1)]
        return xg.working_bits(*ws) + 64

    def projection_points(self, ks: Sequence[int]):
        """(times, mp points) of the projections p_k; time 0 is the projection of x."""
        ring = self.ring
        (bp, bq), (fp, fq) = self.endpoints()
        out_t, out_p = [], []
        with mpmath.workprec(self._precision(ks)):
            al = xg.pair_to_mpc(ring, bp, bq)
            be = xg.pair_to_mpc(ring, fp, fq)
            x_mp = xg.MPPoint.from_point(self.x)
            t0 = xg.tau(al, be, x_mp)
            for k in ks:
                t = xg.tau(al, be, xg.act(self.position(k), x_mp))
                out_t.append(t - t0)
                out_p.append(xg.point_at(al, be, t))
        return out_t, out_p

    def projection_times(self, ks: Sequence[int]) -> List[float]:
        ts, _ = self.projection_points(ks)
        return [float(t) for t in ts]


def _walk_until(mu: StepMeasure, rng, target: float, min_steps: int, max_steps: int):
    ring = mu.ring
    els = mu.elements
    w = GroupElement.identity(ring)
    incs = []
    while len(incs) < max_steps:
        for i in _draw(mu, 64, rng):
            g = els[int(i)]
            w = w * g
            incs.append(g)
        if len(incs) >= min_steps and not ring.is_zero(w.c) and math.log(ring.norm(w.c)) >= target:
            return incs
    raise NotConverged("two-sided walk did not reach the target precision")


def sample_two_sided(mu: StepMeasure, seed=0, x: Optional[InteriorPoint] = None,
                     n_forward: int = 0, n_backward: int = 0, precision: float = 120.0,
                     max_steps: int = 200_000) -> TwoSidedPath:
    """Two-sided path long enough that both endpoint estimates carry ``precision`` nats."""
    ring = mu.ring
    x = x or origin(ring.dim)
    rng = make_rng(seed)
    fwd = _walk_until(mu, rng, precision, n_forward, max_steps)
    # backward increments g_0, g_{-1}, ...; the backward positions multiply their inverses
    inv = mu.inverse_measure()
    bwd_inv = _walk_until(inv, rng, precision, n_backward, max_steps)
    incs: Dict[int, GroupElement] = {}
    for k, g in enumerate(fwd, start=1):
        incs[k] = g
    for j, gi in enumerate(bwd_inv):
        incs[-j] = lattice.inverse(gi)
    return TwoSidedPath(incs, -len(bwd_inv) + 1, len(fwd), x, 0, seed)


def return_time(path: TwoSidedPath, collection: HoroballCollection, n_max: int) -> int:
    """First k >= 0 whose projection is past the horoball containing p_0.

    Returns n_max + 1 when no such k <= n_max exists.
    """
    from .horoworld import geodesic_horoball_intersection

    gamma = path.geodesic()
    p0 = gamma.origin_time_anchor
    H = collection.containing_horoball(p0)
    if H is None:
        return 0
    res = geodesic_horoball_intersection(gamma, H)
    if res is None:
        return 0
    t_exit = res[1]
    ks = list(range(1, n_max + 1))
    times = path.projection_times(ks)
    for k, t in zip(ks, times):
        if t >= t_exit:
            return k
    return n_max + 1


@dataclass
class TailEstimate:
    n: List[int]
    tail: List[float]
    lower: List[float]
    upper: List[float]
    trials: int
    slope: float
    intercept: float
    r2: float
    flagged: int


def estimate_return_time_tail(mu: StepMeasure, trials: int, n_max: int, seed=0,
                              collection: Optional[HoroballCollection] = None,
                              x: Optional[InteriorPoint] = None) -> TailEstimate:
    ring = mu.ring
    collection = collection or HoroballCollection("psl2z" if ring is ZZ else "psl2zi")
    ss = np.random.SeedSequence(seed)
    taus = []
    flagged = 0
    for child in ss.spawn(trials):
        path = sample_two_sided(mu, child, x, n_forward=n_max + 1, precision=60.0)
        p0 = path.geodesic().origin_time_anchor
        if abs(collection.depth(p0) - 1.0) < 1e-9:
            flagged += 1
        taus.append(return_time(path, collection, n_max))
    taus = np.array(taus)
    ns = list(range(0, n_max + 1))
    tail, lo, hi = [], [], []
    z = 1.959963984540054
    for n in ns:
        k = int(np.sum(taus >= n))
        p = k / trials
        # Wilson score interval
        den = 1 + z * z / trials
        c = (p + z * z / (2 * trials)) / den
        h = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
        tail.append(p)
        lo.append(max(0.0, c - h))
        hi.append(min(1.0, c + h))
    slope, intercept, r2 = log_linear_fit(ns, tail)
    return TailEstimate(ns, tail, lo, hi, trials, slope, intercept, r2, flagged)


def log_linear_fit(ns: Sequence[int], tail: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares line through (n, log tail) over the positive entries."""
    pts = [(n, math.log(p)) for n, p in zip(ns, tail) if p > 0]
    if len(pts) < 2:
        return math.nan, math.nan, math.nan
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts])
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
