"""Exhaustive coset sweep: the reference enumeration.

Works entirely in the global chart with float geometry.  A horoball of
Euclidean diameter D never rises above height D, so it can only meet a
segment whose lowest point has height y_min if D >= y_min, i.e.
|c|^2 <= 1 / (h y_min).  Its base must also lie within D/2 of the
horizontal shadow of the segment.  Sweeping every coset representative
(a, c) under those two bounds is complete by construction.
"""
from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from .. import lattice
from ..hypgeom import Geodesic, chord_tau
from ..horoworld import (ExcursionRecord, HoroballCollection, WindowEndpointInHoroball)
from ..lattice import ZZ


ENDPOINT_SLACK = 1e-9


class RadiusExhausted(RuntimeError):
    """The certified search would exceed the configured denominator bound."""


DEFAULT_MAX_NORM = 4e6


def _strip_points(A: complex, B: complex, rho: float) -> np.ndarray:
    """Gaussian integers within distance rho of the segment [A, B] (as complex)."""
    d = B - A
    swap = abs(d.imag) > abs(d.real)
    if swap:
        A, B = complex(A.imag, A.real), complex(B.imag, B.real)
        d = B - A
    x0, x1 = min(A.real, B.real) - rho, max(A.real, B.real) + rho
    xs = np.arange(math.ceil(x0), math.floor(x1) + 1, dtype=np.float64)
    if xs.size == 0:
        return np.empty(0, dtype=complex)
    if d.real != 0.0:
        t1 = np.clip((xs - rho - A.real) / d.real, 0.0, 1.0)
        t2 = np.clip((xs + rho - A.real) / d.real, 0.0, 1.0)
        y1 = A.imag + t1 * d.imag
        y2 = A.imag + t2 * d.imag
        ylo = np.minimum(y1, y2) - rho
        yhi = np.maximum(y1, y2) + rho
    else:
        ylo = np.full_like(xs, A.imag - rho)
        yhi = np.full_like(xs, A.imag + rho)
    lo = np.ceil(ylo).astype(np.int64)
    hi = np.floor(yhi).astype(np.int64)
    counts = np.maximum(hi - lo + 1, 0)
    if counts.sum() == 0:
        return np.empty(0, dtype=complex)
    xr = np.repeat(xs, counts)
    starts = np.repeat(lo, counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    yr = (starts + offs).astype(np.float64)
    pts = xr + 1j * yr
    # exact distance to the segment
    L2 = abs(d) ** 2
    if L2 > 0:
        t = np.clip(((pts - A) * np.conj(d)).real / L2, 0.0, 1.0)
        dist = np.abs(pts - (A + t * d))
    else:
        dist = np.abs(pts - A)
    pts = pts[dist <= rho * (1 + 1e-12) + 1e-12]
    if swap:
        pts = pts.imag + 1j * pts.real
    return pts


def _hits(alpha, beta, bases: np.ndarray, D: float) -> np.ndarray:
    """Boolean mask of finite bases whose horoball (diameter D) meets the geodesic."""
    if alpha is not None and beta is not None:
        wb = bases - beta
        rho = np.abs(bases - alpha) / np.abs(wb)
        dd = D * abs(alpha - beta) / np.abs(wb) ** 2
    elif beta is None:
        rho = np.abs(bases - alpha)
        dd = np.full(bases.shape, D)
    else:
        wb = np.abs(beta - bases)
        rho = 1.0 / wb
        dd = D / wb ** 2
    return (dd - 2 * rho) * (dd + 2 * rho) > 0


def bfs_records(gamma: Geodesic, window: Tuple[float, float], collection: HoroballCollection,
                max_norm: float = DEFAULT_MAX_NORM, check_endpoints: bool = True) -> List[ExcursionRecord]:
    a, b = window
    ring = collection.ring
    h = collection.height
    pa, pb = gamma.point(a), gamma.point(b)
    y_min = min(pa.height, pb.height)
    need = (1.0 + 1e-9) / (h * y_min)
    if need > max_norm:
        raise RadiusExhausted(f"denominator norm bound {need:.3g} exceeds {max_norm:.3g}")
    al, be = gamma.alpha, gamma.beta
    found = {}

    def consider(A, C, base, size):
        res = chord_tau(al, be, base, size)
        if res is None:
            return
        key = lattice.normalize_pair(ring, A, C)
        H = collection.horoball_for_pair(*key)
        t1, t2 = res[0] - gamma.tau0, res[1] - gamma.tau0
        found[key] = ExcursionRecord.from_times(H, t1, t2)

    consider(ring.one, ring.zero, None, h)
    za, zb = pa.z, pb.z
    for c, n in collection.canonical_denominators(need):
        D = 1.0 / (n * h)
        if ring is ZZ:
            lo = c * min(za.real, zb.real) - c * 0.5 * D
            hi = c * max(za.real, zb.real) + c * 0.5 * D
            avals = np.arange(math.ceil(lo), math.floor(hi) + 1)
            if avals.size == 0:
                continue
            mask = _hits(al, be, (avals / c).astype(complex), D)
            for av in avals[mask]:
                av = int(av)
                if math.gcd(av, c) == 1:
                    consider(av, c, complex(av / c), D)
        else:
            cc = complex(*c)
            pts = _strip_points(cc * za, cc * zb, math.sqrt(n) * 0.5 * D)
            if pts.size == 0:
                continue
            mask = _hits(al, be, pts / cc, D)
            for p in pts[mask]:
                av = (int(round(p.real)), int(round(p.imag)))
                if lattice.ring_is_unit(ring, lattice.ring_gcd(ring, av, c)):
                    consider(av, c, ring.ratio_to_complex(av, c), D)
    recs = list(found.values())
    if check_endpoints:
        for t in (a, b):
            # a window end sitting on a horosphere counts as thick
            if any(r.t_entry + ENDPOINT_SLACK < t < r.t_exit - ENDPOINT_SLACK for r in recs):
                raise WindowEndpointInHoroball(f"gamma({t}) lies inside a horoball")
    out = [r for r in recs if a <= r.midpoint_time <= b]
    out.sort(key=lambda r: r.midpoint_time)
    return out
