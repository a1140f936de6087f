"""Horoballs, invariant horoball collections and excursion enumeration.

The collections here are the orbits of the horoball {height >= h} based at
infinity under PSL(2, Z) or PSL(2, Z[i]).  The image of infinity under a
coset representative with first column (A, C) is the horoball based at A/C
with Euclidean diameter 1 / (|C|^2 h).

Enumeration along long geodesic segments uses a chart walk: the segment is
sampled at unit spacing, every sample is pulled back into the standard
fundamental domain by exact group elements, and the few horoballs near a
point of the fundamental domain are listed directly.  Times are carried from
chart to chart by an offset, so the float geometry always happens at unit
scale even when the global coordinates need thousands of digits.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import lattice
from .hypgeom import (BoundaryPoint, Geodesic, InteriorPoint, Isometry, chord_tau,
                      point_at_tau, tau_coordinate)
from .lattice import GroupElement, ZZ, normalize_pair

DEFAULT_HEIGHT = 1.2
DEFAULT_EPSILON = 1e-6
DEFAULT_DELTA = math.log(1.0 + math.sqrt(2.0))


class EndpointInHoroballClosure(ValueError):
    """A geodesic endpoint is the base point of the horoball."""


class WindowEndpointInHoroball(ValueError):
    """The start or end of an enumeration window lies inside a horoball."""


class NotDisjoint(ValueError):
    pass


@dataclass(frozen=True)
class Horoball:
    base: BoundaryPoint
    size: float
    cusp_id: int = 0
    coset_word: Optional[str] = None
    key: Optional[tuple] = field(default=None, compare=False, repr=False)
    log_size: Optional[float] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.log_size is None:
            if not self.size > 0:
                raise ValueError("horoball size must be positive")
            object.__setattr__(self, "log_size", math.log(self.size))

    @property
    def at_infinity(self) -> bool:
        return self.base.z is None

    def contains(self, p: InteriorPoint) -> bool:
        if self.base.z is None:
            return p.height > self.size
        r = 0.5 * self.size
        return abs(p.z - self.base.z) ** 2 + (p.height - r) ** 2 < r * r


@dataclass(frozen=True)
class ExcursionRecord:
    horoball: Horoball
    t_entry: float
    t_exit: float
    chord: float
    excursion: float
    midpoint_time: float

    @classmethod
    def from_times(cls, horoball, t1, t2):
        ell = t2 - t1
        return cls(horoball, t1, t2, ell, excursion_from_chord(ell), 0.5 * (t1 + t2))


def excursion_from_chord(ell: float) -> float:
    if ell <= 0.0:
        return 0.0
    if ell > 1400.0:
        return math.inf
    return 2.0 * math.sinh(0.5 * ell)


# ---------------------------------------------------------------------------
# Collections
# ---------------------------------------------------------------------------


class HoroballCollection:
    """Orbit of the height-h horoball at infinity under a Bianchi-type lattice."""

    def __init__(self, group="psl2z", height: float = DEFAULT_HEIGHT,
                 delta: float = DEFAULT_DELTA):
        if isinstance(group, str):
            group = lattice.preset(group)
        if not height > 0:
            raise ValueError("cusp height must be positive")
        self.group = group
        self.ring = group.ring
        self.dim = group.ring.dim
        self.height = float(height)
        self.delta = delta
        self.cusp_reps = group.cusps
        self._cs: List[Tuple[object, int]] = []
        self._cs_bound = 0
        # lower bound for heights of points of the reduced domain
        self.domain_min_height = math.sqrt(3.0) / 2.0 if self.ring is ZZ else math.sqrt(0.5)

    def __repr__(self):
        return f"HoroballCollection({self.group.name!r}, height={self.height})"

    # -- horoballs from exact data ---------------------------------------

    def horoball_for_pair(self, p, q, word: Optional[str] = None) -> Horoball:
        ring = self.ring
        p, q = normalize_pair(ring, p, q)
        key = (p, q)
        if ring.is_zero(q):
            size = self.height * ring.norm(p)
            return Horoball(BoundaryPoint.infinity(self.dim, ring), size, 0, word, key, math.log(size))
        log_size = -math.log(ring.norm(q)) - math.log(self.height)
        base = BoundaryPoint(ring.ratio_to_complex(p, q), self.dim, (ring, p, q))
        return Horoball(base, math.exp(log_size), 0, word, key, log_size)

    def root(self) -> Horoball:
        return self.horoball_for_pair(self.ring.one, self.ring.zero, "1")

    def coset_horoball(self, g: GroupElement) -> Horoball:
        return self.horoball_for_pair(g.a, g.c)

    # -- local enumeration -------------------------------------------------

    def canonical_denominators(self, max_norm: float):
        """Canonical nonzero ring elements (up to units) with norm <= max_norm."""
        if max_norm > self._cs_bound:
            bound = max(int(max_norm) + 1, 2 * self._cs_bound, 4)
            out = []
            if self.ring is ZZ:
                for c in range(1, math.isqrt(bound) + 1):
                    out.append((c, c * c))
            else:
                m = math.isqrt(bound)
                for re in range(1, m + 1):
                    for im in range(0, m + 1):
                        n = re * re + im * im
                        if n <= bound:
                            out.append(((re, im), n))
            out.sort(key=lambda t: t[1])
            self._cs = out
            self._cs_bound = bound
        return [(c, n) for c, n in self._cs if n <= max_norm]

    def local_candidates(self, z: complex, y: float, r: float):
        """Pairs (a, c) whose horoball meets the closed ball B((z, y), r)."""
        ring = self.ring
        h = self.height
        er = math.exp(r)
        out = []
        if y * er >= h:
            out.append((ring.one, ring.zero))
        sr = y * math.sinh(r)
        for c, n in self.canonical_denominators(er / (h * y)):
            D = 1.0 / (n * h)
            if ring is ZZ:
                center = c * z.real
                rad = c * (0.5 * D + sr) + 1e-9
                for a in range(math.ceil(center - rad), math.floor(center + rad) + 1):
                    if math.gcd(a, c) == 1:
                        out.append((a, c))
            else:
                cz = complex(*c) * z
                rad = math.sqrt(n) * (0.5 * D + sr) + 1e-9
                for ar in range(math.ceil(cz.real - rad), math.floor(cz.real + rad) + 1):
                    dr = ar - cz.real
                    rem = rad * rad - dr * dr
                    if rem < 0:
                        continue
                    w = math.sqrt(rem)
                    for ai in range(math.ceil(cz.imag - w), math.floor(cz.imag + w) + 1):
                        a = (ar, ai)
                        if lattice.ring_is_unit(ring, lattice.ring_gcd(ring, a, c)):
                            out.append((a, c))
        return out

    def local_horoball(self, a, c) -> Tuple[Optional[complex], float]:
        """Base and size of the horoball for the coset pair (a, c), in floats."""
        ring = self.ring
        if ring.is_zero(c):
            return None, self.height * ring.norm(a)
        return ring.ratio_to_complex(a, c), 1.0 / (ring.norm(c) * self.height)

    def reduce(self, p: InteriorPoint):
        """Reduce p to the fundamental domain; returns (z, y, g) with p = g (z, y)."""
        z, y, moves = lattice.reduce_point(self.ring, p.z, p.height)
        g = GroupElement.identity(self.ring)
        for mv in moves:
            g = g * lattice.inverse(lattice.move_matrix(self.ring, mv))
        return z, y, g

    def containing_horoball(self, p: InteriorPoint) -> Optional[Horoball]:
        z, y, g = self.reduce(p)
        for a, c in self.local_candidates(z, y, 0.0):
            base, size = self.local_horoball(a, c)
            if _contains(base, size, z, y):
                ring = self.ring
                A = ring.add(ring.mul(g.a, a), ring.mul(g.b, c))
                C = ring.add(ring.mul(g.c, a), ring.mul(g.d, c))
                return self.horoball_for_pair(A, C)
        return None

    def depth(self, p: InteriorPoint) -> float:
        """Height of p in the normalized chart of its horoball (< 1 means thick)."""
        z, y, _ = self.reduce(p)
        for a, c in self.local_candidates(z, y, 0.0):
            base, size = self.local_horoball(a, c)
            if base is None and y > size:
                return y / size
        return min(1.0, y / self.height)

    def is_thick(self, p: InteriorPoint) -> bool:
        return self.containing_horoball(p) is None


def _contains(base, size, z, y) -> bool:
    if base is None:
        return y > size
    r = 0.5 * size
    return abs(z - base) ** 2 + (y - r) ** 2 < r * r


class FiniteHoroballCollection:
    """An explicit finite list of horoballs (toy configurations and tests)."""

    def __init__(self, horoballs: Sequence[Horoball], dim: int = 2, delta: float = DEFAULT_DELTA):
        self.horoballs = list(horoballs)
        self.dim = dim
        self.delta = delta

    def containing_horoball(self, p: InteriorPoint) -> Optional[Horoball]:
        for H in self.horoballs:
            if H.contains(p):
                return H
        return None

    def depth(self, p: InteriorPoint) -> float:
        H = self.containing_horoball(p)
        if H is None:
            return 1.0
        if H.at_infinity:
            return p.height / H.size
        # height in the chart where H is the horoball at infinity of height 1
        w, D = H.base.z, H.size
        return D * p.height / (abs(p.z - w) ** 2 + p.height ** 2)

    def is_thick(self, p: InteriorPoint) -> bool:
        return self.containing_horoball(p) is None


def horoball_distance(H1: Horoball, H2: Horoball) -> float:
    """Signed hyperbolic distance between two horoballs (negative if overlapping)."""
    if H1.at_infinity and H2.at_infinity:
        return -math.inf
    if H1.at_infinity:
        H1, H2 = H2, H1
    if H2.at_infinity:
        return math.log(H2.size) - H1.log_size
    sep = abs(H1.base.z - H2.base.z)
    if sep == 0.0:
        return -math.inf
    return 2.0 * math.log(sep) - H1.log_size - H2.log_size


def min_separation(collection) -> float:
    if isinstance(collection, FiniteHoroballCollection):
        hs = collection.horoballs
        best = math.inf
        for i in range(len(hs)):
            for j in range(i + 1, len(hs)):
                best = min(best, horoball_distance(hs[i], hs[j]))
        if best < 0:
            raise NotDisjoint(f"horoballs overlap (distance {best:.6g})")
        return best
    h = collection.height
    if h < 1.0:
        raise NotDisjoint(f"cusp height {h} < 1 gives overlapping horoballs")
    R = 2.0 * math.log(h)
    if R <= 4.0 * collection.delta:
        warnings.warn(f"horoball separation {R:.4g} <= 4*delta = {4 * collection.delta:.4g}",
                      stacklevel=2)
    return R


# ---------------------------------------------------------------------------
# Single horoball operations
# ---------------------------------------------------------------------------


def _orbit_height(H: Horoball, ring) -> float:
    """Height of the horoball at infinity whose orbit contains H."""
    p, q = H.key
    if ring.is_zero(q):
        return H.size / ring.norm(p)
    return math.exp(-H.log_size - math.log(ring.norm(q)))


def horoball_image(g, H: Horoball) -> Horoball:
    if isinstance(g, GroupElement) and H.key is not None:
        ring = g.ring
        h = _orbit_height(H, ring)
        p, q = normalize_pair(ring, *lattice.apply_projective(g, *H.key))
        if ring.is_zero(q):
            size = h * ring.norm(p)
            return Horoball(BoundaryPoint.infinity(ring.dim, ring), size, H.cusp_id, None,
                            (p, q), math.log(size))
        log_size = -math.log(ring.norm(q)) - math.log(h)
        base = BoundaryPoint(ring.ratio_to_complex(p, q), ring.dim, (ring, p, q))
        return Horoball(base, math.exp(log_size), H.cusp_id, None, (p, q), log_size)
    iso = g if isinstance(g, Isometry) else Isometry.from_group_element(g)
    dim = H.base.dim
    a, b, c, d = iso.a, iso.b, iso.c, iso.d
    if H.at_infinity:
        if c == 0:
            return Horoball(BoundaryPoint(None, dim), H.size * abs(a) ** 2, H.cusp_id)
        return Horoball(_bp(a / c, dim), 1.0 / (abs(c) ** 2 * H.size), H.cusp_id)
    w = H.base.z
    den = c * w + d
    if den == 0:
        return Horoball(BoundaryPoint(None, dim), 1.0 / (abs(c) ** 2 * H.size), H.cusp_id)
    return Horoball(_bp((a * w + b) / den, dim), H.size / abs(den) ** 2, H.cusp_id)


def _bp(z: complex, dim: int) -> BoundaryPoint:
    if dim == 2:
        z = complex(z.real, 0.0)
    return BoundaryPoint(z, dim)


def _exact_equal(p1: BoundaryPoint, p2: BoundaryPoint) -> Optional[bool]:
    """Exact comparison when both points carry exact data over the same ring."""
    if p1.exact is None or p2.exact is None or p1.exact[0] is not p2.exact[0]:
        return None
    ring, a, b = p1.exact
    _, c, d = p2.exact
    return ring.sub(ring.mul(a, d), ring.mul(b, c)) == ring.zero


def _base_matches(endpoint: BoundaryPoint, base: BoundaryPoint) -> bool:
    ex = _exact_equal(endpoint, base)
    if ex is not None:
        return ex
    if endpoint.z is None or base.z is None:
        return endpoint.z is None and base.z is None
    return endpoint.z == base.z


def geodesic_horoball_intersection(gamma: Geodesic, H: Horoball) -> Optional[Tuple[float, float]]:
    at_a = _base_matches(gamma.backward, H.base)
    at_b = _base_matches(gamma.forward, H.base)
    if at_a or at_b:
        raise EndpointInHoroballClosure("a geodesic endpoint is the base point of the horoball")
    res = chord_tau(gamma.alpha, gamma.beta, H.base.z, H.size)
    if res is None:
        return None
    t1, t2 = res
    return t1 - gamma.tau0, t2 - gamma.tau0


def excursion(gamma: Geodesic, H: Horoball) -> float:
    res = geodesic_horoball_intersection(gamma, H)
    if res is None:
        return 0.0
    return excursion_from_chord(res[1] - res[0])


def record_for(gamma: Geodesic, H: Horoball) -> Optional[ExcursionRecord]:
    res = geodesic_horoball_intersection(gamma, H)
    if res is None:
        return None
    return ExcursionRecord.from_times(H, *res)


# ---------------------------------------------------------------------------
# Exact endpoints
# ---------------------------------------------------------------------------


def exact_pair(ring, xi: BoundaryPoint):
    """Exact projective pair for a boundary point (floats are dyadic rationals)."""
    if xi.exact is not None and xi.exact[0] is ring:
        return xi.exact[1], xi.exact[2]
    if xi.z is None:
        return ring.one, ring.zero
    return rational_pair(ring, Fraction(xi.z.real), Fraction(xi.z.imag))


def rational_pair(ring, re: Fraction, im: Fraction = Fraction(0)):
    if ring is ZZ:
        if im != 0:
            raise ValueError("H^2 boundary point with imaginary part")
        return re.numerator, re.denominator
    L = re.denominator * im.denominator // math.gcd(re.denominator, im.denominator)
    return (int(re * L), int(im * L)), (L, 0)


def exact_boundary_point(ring, p, q) -> BoundaryPoint:
    return BoundaryPoint.from_exact(ring, p, q)


# ---------------------------------------------------------------------------
# Chart walk
# ---------------------------------------------------------------------------


class _Chart:
    __slots__ = ("g", "al", "be", "alf", "bef", "K")

    def copy(self):
        c = _Chart()
        c.g, c.al, c.be, c.alf, c.bef, c.K = self.g, self.al, self.be, self.alf, self.bef, self.K
        return c


class ChartWalker:
    """Certified enumeration of the horoballs met by a geodesic.

    Samples are taken every ``step`` time units; a horoball meeting the
    geodesic meets a hyperbolic ball of radius ``step/2`` around some sample,
    and those balls are searched exhaustively in the reduced chart.  Records
    accumulate over the covered time interval, which grows on demand.
    """

    def __init__(self, collection: HoroballCollection, gamma: Geodesic, step: float = 1.0):
        self.collection = collection
        self.ring = ring = collection.ring
        self.gamma = gamma
        self.step = float(step)
        self.radius = 0.5 * self.step + 0.05
        al = exact_pair(ring, gamma.backward)
        be = exact_pair(ring, gamma.forward)
        if ring.sub(ring.mul(al[0], be[1]), ring.mul(al[1], be[0])) == ring.zero:
            raise ValueError("geodesic endpoints coincide")
        ch = _Chart()
        ch.g = GroupElement.identity(ring)
        ch.al, ch.be = al, be
        self._floats(ch)
        p0 = gamma.origin_time_anchor
        z, y, moves = lattice.reduce_point(ring, p0.z, p0.height)
        self._apply(ch, moves)
        ch.K = -tau_coordinate(ch.alf, ch.bef, z, y)
        self.records: Dict[tuple, ExcursionRecord] = {}
        self.lo = self.hi = 0.0
        self._lo_chart = ch
        self._hi_chart = ch.copy()
        self._visit(ch, z, y)

    # -- chart bookkeeping -------------------------------------------------

    def _floats(self, ch: _Chart):
        ring = self.ring
        p, q = ch.al
        ch.alf = None if ring.is_zero(q) else ring.ratio_to_complex(p, q)
        p, q = ch.be
        ch.bef = None if ring.is_zero(q) else ring.ratio_to_complex(p, q)
        if self.collection.dim == 2:
            if ch.alf is not None:
                ch.alf = complex(ch.alf.real, 0.0)
            if ch.bef is not None:
                ch.bef = complex(ch.bef.real, 0.0)

    def _apply(self, ch: _Chart, moves):
        if not moves:
            return
        ring = self.ring
        g = ch.g
        a, b, c, d = g.a, g.b, g.c, g.d
        (pa, qa), (pb, qb) = ch.al, ch.be
        mul, add, sub, neg = ring.mul, ring.add, ring.sub, ring.neg
        for kind, n in moves:
            if kind == "T":
                b = add(b, mul(a, n))
                d = add(d, mul(c, n))
                pa = sub(pa, mul(n, qa))
                pb = sub(pb, mul(n, qb))
            else:
                a, b, c, d = neg(b), a, neg(d), c
                pa, qa = neg(qa), pa
                pb, qb = neg(qb), pb
        ch.g = GroupElement(a, b, c, d, ring)
        ch.al, ch.be = (pa, qa), (pb, qb)
        self._floats(ch)

    def _advance(self, ch: _Chart, s: float):
        """Move the chart to sample time s; returns the reduced point."""
        z, y = point_at_tau(ch.alf, ch.bef, s - ch.K)
        z, y, moves = lattice.reduce_point(self.ring, z, y)
        if moves:
            self._apply(ch, moves)
            ch.K = s - tau_coordinate(ch.alf, ch.bef, z, y)
        return z, y

    def _visit(self, ch: _Chart, z: complex, y: float):
        ring = self.ring
        coll = self.collection
        g = ch.g
        (pa, qa), (pb, qb) = ch.al, ch.be
        for a, c in coll.local_candidates(z, y, self.radius):
            A = ring.add(ring.mul(g.a, a), ring.mul(g.b, c))
            C = ring.add(ring.mul(g.c, a), ring.mul(g.d, c))
            key = normalize_pair(ring, A, C)
            if key in self.records:
                continue
            base, size = coll.local_horoball(a, c)
            at_b = ring.sub(ring.mul(a, qb), ring.mul(c, pb)) == ring.zero
            at_a = ring.sub(ring.mul(a, qa), ring.mul(c, pa)) == ring.zero
            res = chord_tau(ch.alf, ch.bef, base, size, base_is_alpha=at_a, base_is_beta=at_b)
            if res is None:
                continue
            H = coll.horoball_for_pair(*key)
            self.records[key] = ExcursionRecord.from_times(H, res[0] + ch.K, res[1] + ch.K)

    # -- coverage ----------------------------------------------------------

    def cover(self, a: float, b: float):
        """Make sure every horoball meeting gamma([a, b]) is recorded."""
        while self.hi < b:
            s = self.hi + self.step
            z, y = self._advance(self._hi_chart, s)
            self._visit(self._hi_chart, z, y)
            self.hi = s
        while self.lo > a:
            s = self.lo - self.step
            z, y = self._advance(self._lo_chart, s)
            self._visit(self._lo_chart, z, y)
            self.lo = s

    def records_between(self, a: float, b: float) -> List[ExcursionRecord]:
        """Records with midpoint in [a, b], sorted by midpoint."""
        if b < a:
            a, b = b, a
        self.cover(a, b)
        out = [r for r in self.records.values() if a <= r.midpoint_time <= b]
        out.sort(key=lambda r: r.midpoint_time)
        return out

    def containing_record(self, t: float) -> Optional[ExcursionRecord]:
        self.cover(t, t)
        for r in self.records.values():
            if r.t_entry < t < r.t_exit:
                return r
        return None

    def slide_to_thick(self, t: float) -> float:
        """First time >= t outside every horoball."""
        r = self.containing_record(t)
        while r is not None:
            if math.isinf(r.t_exit):
                raise EndpointInHoroballClosure("forward ray ends in a cusp")
            t = r.t_exit
            r = self.containing_record(t)
        return t


def _walker_for(gamma: Geodesic, collection, step: float = 1.0) -> ChartWalker:
    cache = getattr(collection, "_walkers", None)
    if cache is None:
        cache = {}
        try:
            collection._walkers = cache
        except AttributeError:
            return ChartWalker(collection, gamma, step)
    key = (id(gamma), step)
    hit = cache.get(key)
    if hit is not None and hit[0] is gamma:
        return hit[1]
    w = ChartWalker(collection, gamma, step)
    if len(cache) > 64:
        cache.clear()
    cache[key] = (gamma, w)
    return w


def _window(window) -> Tuple[float, float]:
    if isinstance(window, (int, float)):
        return 0.0, float(window)
    a, b = window
    return float(a), float(b)


def enumerate_horoballs(gamma: Geodesic, window, epsilon: float = DEFAULT_EPSILON,
                        backend: str = "cf", collection=None,
                        with_skipped: bool = False):
    """Horoballs with midpoint time in the window and excursion >= epsilon.

    With ``with_skipped`` the number of horoballs below the cutoff is
    returned as a second value.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if collection is None:
        collection = HoroballCollection("psl2z" if gamma.dim == 2 else "psl2zi")
    a, b = _window(window)
    if b < a:
        raise ValueError("window end precedes its start")
    if b == a:
        return ([], 0) if with_skipped else []
    if isinstance(collection, FiniteHoroballCollection):
        recs = [r for r in (record_for(gamma, H) for H in collection.horoballs) if r is not None]
        for t in (a, b):
            if any(r.t_entry < t < r.t_exit for r in recs):
                raise WindowEndpointInHoroball(f"gamma({t}) lies inside a horoball")
        recs = [r for r in recs if a <= r.midpoint_time <= b]
    elif backend == "cf":
        walker = _walker_for(gamma, collection)
        recs = walker.records_between(a, b)
        for t in (a, b):
            if walker.containing_record(t) is not None:
                raise WindowEndpointInHoroball(f"gamma({t}) lies inside a horoball")
    elif backend == "bfs":
        from .verify.bfs import bfs_records
        recs = bfs_records(gamma, (a, b), collection)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    kept = [r for r in recs if r.excursion >= epsilon]
    kept.sort(key=lambda r: r.midpoint_time)
    if with_skipped:
        return kept, len(recs) - len(kept)
    return kept
