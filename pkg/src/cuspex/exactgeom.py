"""High-precision geometry for points produced by long group words.

Positions w_n x of a random walk have coordinates that need hundreds or
thousands of bits.  These helpers evaluate them with mpmath at a working
precision chosen from the integer sizes involved.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Tuple

import mpmath

from .hypgeom import InteriorPoint
from .lattice import ZZ, GroupElement


def mp_of_fraction(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def fraction_of_mp(x) -> Fraction:
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    man = -int(man) if sign else int(man)
    if exp >= 0:
        return Fraction(man << int(exp))
    return Fraction(man, 1 << int(-exp))


def ring_to_mpc(ring, x):
    re, im = ring.parts(x)
    return mpmath.mpc(re, im)


def pair_to_mpc(ring, p, q) -> Optional[object]:
    if ring.is_zero(q):
        return None
    return ring_to_mpc(ring, p) / ring_to_mpc(ring, q)


def bits_needed(*elements, ring=ZZ) -> int:
    b = 0
    for x in elements:
        for v in ring.parts(x):
            b = max(b, abs(v).bit_length())
    return b


def working_bits(*groups: GroupElement, extra: int = 0) -> int:
    b = 0
    for g in groups:
        b = max(b, g.max_entry_bits())
    return 2 * b + 128 + extra


class MPPoint:
    """Interior point with mpmath coordinates (complex z, real y)."""

    __slots__ = ("z", "y")

    def __init__(self, z, y):
        self.z = mpmath.mpc(z)
        self.y = mpmath.mpf(y)

    @classmethod
    def from_point(cls, p: InteriorPoint):
        return cls(mpmath.mpc(p.z.real, p.z.imag), p.height)

    def to_point(self, dim: int) -> InteriorPoint:
        z = complex(self.z)
        if dim == 2:
            z = complex(z.real, 0.0)
        return InteriorPoint(z, float(self.y), dim)


def act(g: GroupElement, p: MPPoint) -> MPPoint:
    ring = g.ring
    a, b, c, d = (ring_to_mpc(ring, x) for x in g.entries())
    z, y = p.z, p.y
    czd = c * z + d
    y2 = y * y
    den = abs(czd) ** 2 + abs(c) ** 2 * y2
    w = ((a * z + b) * mpmath.conj(czd) + a * mpmath.conj(c) * y2) / den
    return MPPoint(w, y / den)


def distance(p: MPPoint, q: MPPoint):
    num = abs(p.z - q.z) ** 2 + (p.y - q.y) ** 2
    return 2 * mpmath.asinh(mpmath.sqrt(num / (4 * p.y * q.y)))


def tau(alpha, beta, p: MPPoint):
    """Projection time on the geodesic alpha -> beta (None = infinity)."""
    y2 = p.y * p.y
    if beta is None:
        return mpmath.log(abs(p.z - alpha) ** 2 + y2) / 2
    if alpha is None:
        return -mpmath.log(abs(p.z - beta) ** 2 + y2) / 2
    return (mpmath.log(abs(p.z - alpha) ** 2 + y2) - mpmath.log(abs(p.z - beta) ** 2 + y2)) / 2


def point_at(alpha, beta, t) -> MPPoint:
    if beta is None:
        return MPPoint(alpha, mpmath.exp(t))
    if alpha is None:
        return MPPoint(beta, mpmath.exp(-t))
    m = (alpha + beta) / 2
    r = abs(beta - alpha) / 2
    u = (beta - alpha) / abs(beta - alpha)
    return MPPoint(m + r * mpmath.tanh(t) * u, r * mpmath.sech(t))


def antipode_fraction(z0: Tuple[Fraction, Fraction], y0: Fraction,
                      xi: Tuple[Fraction, Fraction]) -> Tuple[Fraction, Fraction]:
    """Backward endpoint of the geodesic through (z0, y0) with forward end xi."""
    dr, di = xi[0] - z0[0], xi[1] - z0[1]
    n = dr * dr + di * di
    s = y0 * y0 / n
    return z0[0] - s * dr, z0[1] - s * di


def exact_antipode_pair(ring, x: InteriorPoint, p, q):
    """Antipode through x of the boundary point p/q, as an exact pair."""
    from .horoworld import rational_pair

    z0 = (Fraction(x.z.real), Fraction(x.z.imag))
    y0 = Fraction(x.height)
    if ring.is_zero(q):
        return rational_pair(ring, *z0) if ring is not ZZ else rational_pair(ring, z0[0])
    if z0 == (0, 0) and y0 == 1:
        # -1/conj(xi) without rational reconstruction
        if ring is ZZ:
            return -q, p
        return ring.neg(ring.conj(q)), ring.conj(p)
    pr, pi = ring.parts(p)
    qr, qi = ring.parts(q)
    den = qr * qr + qi * qi
    xr = Fraction(pr * qr + pi * qi, den)
    xim = Fraction(pi * qr - pr * qi, den)
    ar, ai = antipode_fraction(z0, y0, (xr, xim))
    if ring is ZZ:
        return rational_pair(ring, ar)
    return rational_pair(ring, ar, ai)
