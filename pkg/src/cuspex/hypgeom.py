"""Upper half-space model of H^2 and H^3.

Points carry a complex horizontal coordinate and a positive height.  In
dimension 2 the horizontal coordinate is real (imaginary part zero), so the
same formulas serve both dimensions.

Geodesic time is measured with the projection coordinate

    tau(P) = log(|P - alpha| / |P - beta|)

for a geodesic from alpha to beta (Euclidean norms in R^N, height included).
The level sets of tau are the totally geodesic hyperplanes orthogonal to the
geodesic, so tau(P) is also the time of the closest point projection of P.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

TANGENCY_TOL = 1e-9
ANCHOR_TOL = 1e-9


class DegenerateEndpoints(ValueError):
    pass


@dataclass(frozen=True)
class InteriorPoint:
    z: complex
    height: float
    dim: int = 2

    def __post_init__(self):
        if not self.height > 0:
            raise ValueError(f"height must be positive, got {self.height}")
        object.__setattr__(self, "z", complex(self.z))
        if self.dim == 2 and self.z.imag != 0.0:
            raise ValueError("points of H^2 have a real horizontal coordinate")

    @property
    def horizontal(self) -> Tuple[float, ...]:
        if self.dim == 2:
            return (self.z.real,)
        return (self.z.real, self.z.imag)

    @classmethod
    def from_coords(cls, horizontal, height):
        h = list(horizontal) if not isinstance(horizontal, (int, float)) else [horizontal]
        if len(h) == 1:
            return cls(complex(h[0], 0.0), float(height), 2)
        return cls(complex(h[0], h[1]), float(height), 3)


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of R^{N-1} or infinity (``z is None``).

    ``exact`` optionally holds a projective pair ``(ring, P, Q)`` of ring
    elements with P/Q equal to the point; enumeration uses it to avoid
    round-off at large times.
    """

    z: Optional[complex]
    dim: int = 2
    exact: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.z is not None:
            z = complex(self.z)
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise ValueError("finite boundary points need finite coordinates")
            if self.dim == 2 and z.imag != 0.0:
                raise ValueError("boundary of H^2 is the real line")
            object.__setattr__(self, "z", z)

    @property
    def is_infinite(self) -> bool:
        return self.z is None

    @classmethod
    def infinity(cls, dim=2, ring=None):
        exact = None
        if ring is not None:
            exact = (ring, ring.one, ring.zero)
        return cls(None, dim, exact)

    @classmethod
    def finite(cls, value, dim=None):
        z = complex(value)
        if dim is None:
            dim = 2 if z.imag == 0 else 3
        return cls(z, dim)

    @classmethod
    def from_exact(cls, ring, p, q):
        if ring.is_zero(q):
            return cls(None, ring.dim, (ring, p, q))
        return cls(ring.ratio_to_complex(p, q), ring.dim, (ring, p, q))


@dataclass(frozen=True)
class Isometry:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, complex(getattr(self, name)))
        det = self.a * self.d - self.b * self.c
        if abs(det - 1) > 1e-12 * max(1.0, abs(self.a * self.d)):
            raise ValueError(f"determinant {det} != 1")

    @classmethod
    def from_group_element(cls, g):
        return cls(*g.complex_entries())

    @classmethod
    def from_matrix(cls, m):
        (a, b), (c, d) = m
        return cls(a, b, c, d)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
                        self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d)

    def inverse(self) -> "Isometry":
        return Isometry(self.d, -self.b, -self.c, self.a)


def mobius_apply_boundary(g: Isometry, xi: BoundaryPoint) -> BoundaryPoint:
    if xi.z is None:
        if g.c == 0:
            return BoundaryPoint(None, xi.dim)
        return BoundaryPoint(g.a / g.c, xi.dim)
    den = g.c * xi.z + g.d
    if den == 0:
        return BoundaryPoint(None, xi.dim)
    w = (g.a * xi.z + g.b) / den
    if xi.dim == 2:
        w = complex(w.real, 0.0)
    return BoundaryPoint(w, xi.dim)


def mobius_apply_interior(g: Isometry, p: InteriorPoint) -> InteriorPoint:
    z, y = p.z, p.height
    czd = g.c * z + g.d
    den = abs(czd) ** 2 + abs(g.c) ** 2 * y * y
    w = ((g.a * z + g.b) * czd.conjugate() + g.a * g.c.conjugate() * y * y) / den
    if p.dim == 2:
        w = complex(w.real, 0.0)
    return InteriorPoint(w, y / den, p.dim)


def hyp_distance(p: InteriorPoint, q: InteriorPoint) -> float:
    num = abs(p.z - q.z) ** 2 + (p.height - q.height) ** 2
    # 2 asinh(sqrt(.)) is the stable form of arccosh(1 + num / (2 y y'))
    return 2.0 * math.asinh(math.sqrt(num / (4.0 * p.height * q.height)))


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------


def tau_coordinate(alpha: Optional[complex], beta: Optional[complex], z: complex, y: float) -> float:
    """Projection time of (z, y) on the geodesic alpha -> beta (None = infinity)."""
    y2 = y * y
    if beta is None:
        return 0.5 * math.log(abs(z - alpha) ** 2 + y2)
    if alpha is None:
        return -0.5 * math.log(abs(z - beta) ** 2 + y2)
    return 0.5 * (math.log(abs(z - alpha) ** 2 + y2) - math.log(abs(z - beta) ** 2 + y2))


def point_at_tau(alpha: Optional[complex], beta: Optional[complex], tau: float) -> Tuple[complex, float]:
    """Point with projection time tau, computed relative to the nearer endpoint."""
    if beta is None:
        return alpha, math.exp(tau)
    if alpha is None:
        return beta, math.exp(-tau)
    diff = beta - alpha
    r = abs(diff) / 2.0
    u = diff / abs(diff)
    e = math.exp(-abs(tau))
    e2 = e * e
    height = 2.0 * r * e / (1.0 + e2)
    off = 2.0 * r * e2 / (1.0 + e2)
    if tau >= 0:
        return beta - off * u, height
    return alpha + off * u, height


def chord_tau(alpha: Optional[complex], beta: Optional[complex],
              base: Optional[complex], size: float,
              base_is_alpha: bool = False, base_is_beta: bool = False):
    """Interval of projection times spent inside a horoball.

    ``size`` is the Euclidean diameter (finite base) or the height (base at
    infinity).  Returns ``(tau1, tau2)``, possibly with infinite ends when the
    horoball is based at an endpoint, or None if the geodesic misses it.
    """
    if alpha is not None and beta is not None:
        delta = abs(alpha - beta)
        if base is None:
            rho, dd = 1.0, delta / size
        elif base_is_beta or base == beta:
            return math.log(delta / size), math.inf
        elif base_is_alpha or base == alpha:
            return -math.inf, math.log(size * delta / abs(alpha - beta) ** 2)
        else:
            wb = base - beta
            rho = abs(base - alpha) / abs(wb)
            dd = size * delta / abs(wb) ** 2
    elif beta is None:
        if base is None:
            return math.log(size), math.inf
        if base_is_alpha or base == alpha:
            return -math.inf, math.log(size)
        rho, dd = abs(base - alpha), size
    elif alpha is None:
        if base is None:
            return -math.inf, -math.log(size)
        if base_is_beta or base == beta:
            return -math.log(size), math.inf
        wb = abs(beta - base)
        rho, dd = 1.0 / wb, size / (wb * wb)
    else:
        raise DegenerateEndpoints("both endpoints at infinity")
    return _vertical_chord(rho, dd)


def _vertical_chord(rho: float, dd: float):
    # horoball with base at horizontal distance rho from the axis, diameter dd
    if rho == 0.0:
        return -math.inf, math.log(dd)
    q = (dd - 2.0 * rho) * (dd + 2.0 * rho)
    if q <= 0.0:
        return None
    s = math.sqrt(q) / dd
    if s <= TANGENCY_TOL:
        return None
    y2 = 0.5 * dd * (1.0 + s)
    log_y2 = math.log(y2)
    return 2.0 * math.log(rho) - log_y2, log_y2


@dataclass(frozen=True)
class Geodesic:
    backward: BoundaryPoint
    forward: BoundaryPoint
    origin_time_anchor: InteriorPoint
    tau0: float = field(default=0.0, compare=False)

    @property
    def dim(self) -> int:
        return self.origin_time_anchor.dim

    @property
    def alpha(self) -> Optional[complex]:
        return self.backward.z

    @property
    def beta(self) -> Optional[complex]:
        return self.forward.z

    def tau(self, p: InteriorPoint) -> float:
        return tau_coordinate(self.alpha, self.beta, p.z, p.height)

    def time_of(self, p: InteriorPoint) -> float:
        return self.tau(p) - self.tau0

    def point(self, t: float) -> InteriorPoint:
        z, y = point_at_tau(self.alpha, self.beta, self.tau0 + t)
        return InteriorPoint(z, y, self.dim)

    def is_vertical(self) -> bool:
        return self.alpha is None or self.beta is None


def _same_boundary(p: BoundaryPoint, q: BoundaryPoint) -> bool:
    if p.z is None or q.z is None:
        return p.z is None and q.z is None
    return abs(p.z - q.z) < 1e-12


def geodesic_between(xi_minus: BoundaryPoint, xi_plus: BoundaryPoint,
                     anchor: InteriorPoint) -> Geodesic:
    if _same_boundary(xi_minus, xi_plus):
        raise DegenerateEndpoints("geodesic endpoints coincide")
    tau = tau_coordinate(xi_minus.z, xi_plus.z, anchor.z, anchor.height)
    z, y = point_at_tau(xi_minus.z, xi_plus.z, tau)
    return Geodesic(xi_minus, xi_plus, InteriorPoint(z, y, anchor.dim), tau)


def geodesic_point(gamma: Geodesic, t: float) -> InteriorPoint:
    return gamma.point(t)


def closest_point_projection(p: InteriorPoint, gamma: Geodesic) -> Tuple[float, InteriorPoint]:
    t = gamma.time_of(p)
    return t, gamma.point(t)


def distance_to_geodesic(p: InteriorPoint, gamma: Geodesic) -> float:
    return hyp_distance(p, closest_point_projection(p, gamma)[1])


def apply_to_geodesic(g: Isometry, gamma: Geodesic) -> Geodesic:
    """Image geodesic; the anchor is moved along, so times are preserved."""
    xm = mobius_apply_boundary(g, gamma.backward)
    xp = mobius_apply_boundary(g, gamma.forward)
    return geodesic_between(xm, xp, mobius_apply_interior(g, gamma.origin_time_anchor))


# ---------------------------------------------------------------------------
# Tangent vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TangentVector:
    """Unit tangent vector at a point: horizontal part (complex) and vertical part."""

    point: InteriorPoint
    horizontal: complex
    vertical: float

    def __post_init__(self):
        n = math.hypot(abs(self.horizontal), self.vertical)
        if abs(n - 1.0) > 1e-9:
            raise ValueError("tangent vector must have unit length")


def tangent_endpoints(v: TangentVector) -> Tuple[BoundaryPoint, BoundaryPoint]:
    """Backward and forward boundary points of the geodesic tangent to v."""
    z, y = v.point.z, v.point.height
    dim = v.point.dim
    h = abs(v.horizontal)
    s = v.vertical
    if h == 0.0:
        if s > 0:
            return BoundaryPoint(z, dim), BoundaryPoint(None, dim)
        return BoundaryPoint(None, dim), BoundaryPoint(z, dim)
    u = v.horizontal / h
    # in the vertical plane through v the geodesic is a semicircle; its
    # forward end sits at distance y (1 + s) / h along u, the backward one
    # at distance y (1 - s) / h against u
    fwd = z + u * (y * (1.0 + s) / h)
    bwd = z - u * (y * (1.0 - s) / h)
    if dim == 2:
        fwd, bwd = complex(fwd.real, 0.0), complex(bwd.real, 0.0)
    return BoundaryPoint(bwd, dim), BoundaryPoint(fwd, dim)


def geodesic_from_tangent(v: TangentVector) -> Geodesic:
    bwd, fwd = tangent_endpoints(v)
    return geodesic_between(bwd, fwd, v.point)


def delta_thin_check(p: InteriorPoint, q: InteriorPoint, r: InteriorPoint,
                     delta: float = math.log(1.0 + math.sqrt(2.0)), samples: int = 64) -> bool:
    """Every sampled point of [p, q] lies within delta of [q, r] or [r, p]."""
    sides = [(p, q), (q, r), (r, p)]
    for i, (a, b) in enumerate(sides):
        others = [sides[(i + 1) % 3], sides[(i + 2) % 3]]
        for s in range(samples + 1):
            x = _segment_point(a, b, s / samples)
            dist = min(_distance_to_segment(x, c, d) for c, d in others)
            if dist > delta + 1e-9:
                return False
    return True


def _segment_point(a: InteriorPoint, b: InteriorPoint, frac: float) -> InteriorPoint:
    L = hyp_distance(a, b)
    if L == 0.0:
        return a
    g = _through(a, b)
    return g.point(frac * L)


def _through(a: InteriorPoint, b: InteriorPoint) -> Geodesic:
    """Geodesic through a then b, anchored at a."""
    if abs(a.z - b.z) < 1e-15 * max(1.0, abs(a.z)):
        if b.height > a.height:
            return geodesic_between(BoundaryPoint(a.z, a.dim), BoundaryPoint(None, a.dim), a)
        return geodesic_between(BoundaryPoint(None, a.dim), BoundaryPoint(a.z, a.dim), a)
    # circle in the vertical plane through a and b centred on the boundary
    u = (b.z - a.z) / abs(b.z - a.z)
    xa, xb = 0.0, abs(b.z - a.z)
    c = (xb * xb + b.height ** 2 - a.height ** 2) / (2.0 * xb)
    r = math.hypot(c - xa, a.height)
    lo, hi = a.z + u * (c - r), a.z + u * (c + r)
    if a.dim == 2:
        lo, hi = complex(lo.real, 0.0), complex(hi.real, 0.0)
    return geodesic_between(BoundaryPoint(lo, a.dim), BoundaryPoint(hi, a.dim), a)


def _distance_to_segment(x: InteriorPoint, c: InteriorPoint, d: InteriorPoint) -> float:
    L = hyp_distance(c, d)
    if L == 0.0:
        return hyp_distance(x, c)
    g = _through(c, d)
    t = min(max(g.time_of(x), 0.0), L)
    return hyp_distance(x, g.point(t))
