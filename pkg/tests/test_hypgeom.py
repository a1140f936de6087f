import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from cuspex.hypgeom import (
    BoundaryPoint,
    DegenerateEndpoints,
    InteriorPoint,
    Isometry,
    TangentVector,
    closest_point_projection,
    delta_thin_check,
    geodesic_between,
    geodesic_from_tangent,
    geodesic_point,
    hyp_distance,
    mobius_apply_boundary,
    mobius_apply_interior,
)

I = Isometry(1, 0, 0, 1)
T = Isometry(1, 1, 0, 1)
S = Isometry(0, -1, 1, 0)


def P(z, y, dim=2):
    return InteriorPoint(complex(z), y, dim)


def random_isometry(rng, dim):
    while True:
        if dim == 2:
            a, b, c = (int(v) for v in rng.integers(-50, 51, size=3))
            if a == 0:
                continue
            # solve for d so that ad - bc = 1, then rescale to real det 1
            d = (1 + b * c) / a
            return Isometry(a, b, c, d)
        a, b, c = (complex(*rng.integers(-50, 51, size=2)) for _ in range(3))
        if a == 0:
            continue
        return Isometry(a, b, c, (1 + b * c) / a)


def random_point(rng, dim):
    z = complex(rng.normal() * 3, rng.normal() * 3 if dim == 3 else 0.0)
    return InteriorPoint(z, float(np.exp(rng.normal())), dim)


def test_boundary_action_examples():
    assert mobius_apply_boundary(I, BoundaryPoint(0.3)).z == pytest.approx(0.3)
    assert mobius_apply_boundary(T, BoundaryPoint(0.0)).z == pytest.approx(1.0)
    assert mobius_apply_boundary(S, BoundaryPoint(None)).z == 0
    assert mobius_apply_boundary(S, BoundaryPoint(0.0)).is_infinite


def test_interior_action_examples():
    assert mobius_apply_interior(I, P(0, 1)) == P(0, 1)
    q = mobius_apply_interior(T, P(0, 1))
    assert q.z == pytest.approx(1) and q.height == pytest.approx(1)
    q = mobius_apply_interior(S, P(0, 1))
    assert abs(q.z) < 1e-15 and q.height == pytest.approx(1)


def test_isometry_rejects_bad_determinant():
    with pytest.raises(ValueError):
        Isometry(2, 0, 0, 1)


def test_distance_examples():
    assert hyp_distance(P(0, 1), P(0, math.e)) == pytest.approx(1.0, abs=1e-12)
    assert hyp_distance(P(0.3, 2), P(0.3, 2)) == 0.0
    assert hyp_distance(P(0, 1), P(1, 1)) == pytest.approx(math.acosh(1.5), abs=1e-12)


def test_distance_matches_arc_length_on_semicircle():
    # (0;1) and (1;1) lie on the circle centred at 1/2 of radius sqrt(5)/2
    c, r = 0.5, math.sqrt(5) / 2
    th0, th1 = math.acos((0 - c) / r), math.acos((1 - c) / r)
    from scipy.integrate import quad
    length, _ = quad(lambda th: r / (r * math.sin(th)), th1, th0)
    assert length == pytest.approx(math.acosh(1.5), abs=1e-9)


@pytest.mark.parametrize("dim", [2, 3])
def test_metric_axioms(dim):
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        p, q, r = (random_point(rng, dim) for _ in range(3))
        assert hyp_distance(p, q) == hyp_distance(q, p)
        assert hyp_distance(p, r) <= hyp_distance(p, q) + hyp_distance(q, r) + 1e-9


@pytest.mark.parametrize("dim", [2, 3])
def test_isometry_invariance_and_composition(dim):
    rng = np.random.default_rng(2)
    for _ in range(500):
        g, h = random_isometry(rng, dim), random_isometry(rng, dim)
        p, q = random_point(rng, dim), random_point(rng, dim)
        d = hyp_distance(p, q)
        gp, gq = mobius_apply_interior(g, p), mobius_apply_interior(g, q)
        assert hyp_distance(gp, gq) == pytest.approx(d, abs=1e-9, rel=1e-9)
        lhs = mobius_apply_interior(g @ h, p)
        rhs = mobius_apply_interior(g, mobius_apply_interior(h, p))
        assert abs(lhs.z - rhs.z) <= 1e-9 * max(1.0, abs(lhs.z))
        assert lhs.height == pytest.approx(rhs.height, rel=1e-9)
        xi = BoundaryPoint(complex(rng.normal(), rng.normal() if dim == 3 else 0.0), dim)
        b1 = mobius_apply_boundary(g @ h, xi)
        b2 = mobius_apply_boundary(g, mobius_apply_boundary(h, xi))
        assert abs(b1.z - b2.z) <= 1e-9 * max(1.0, abs(b1.z))


def test_geodesic_between_examples():
    g = geodesic_between(BoundaryPoint(0.0), BoundaryPoint(None), P(0, 1))
    assert g.is_vertical() and g.origin_time_anchor == P(0, 1)
    g = geodesic_between(BoundaryPoint(-1.0), BoundaryPoint(1.0), P(0, 5))
    assert abs(g.origin_time_anchor.z) < 1e-12
    assert g.origin_time_anchor.height == pytest.approx(1.0)
    g = geodesic_between(BoundaryPoint(0j, 3), BoundaryPoint(1 + 0j, 3), P(0, 1, 3))
    for t in np.linspace(-3, 3, 13):
        q = g.point(t)
        assert abs(q.z - 0.5) ** 2 + q.height ** 2 == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(DegenerateEndpoints):
        geodesic_between(BoundaryPoint(0.5), BoundaryPoint(0.5 + 1e-13), P(0, 1))


def test_geodesic_point_examples():
    g = geodesic_between(BoundaryPoint(0.0), BoundaryPoint(None), P(0, 1))
    q = geodesic_point(g, 1.0)
    assert q.height == pytest.approx(math.e) and abs(q.z) < 1e-15
    assert geodesic_point(g, 0.0) == g.origin_time_anchor
    g = geodesic_between(BoundaryPoint(-1.0), BoundaryPoint(1.0), P(0, 5))
    q = geodesic_point(g, math.acosh(7) / 2)
    assert q.z.real == pytest.approx(math.sqrt(3) / 2) and q.height == pytest.approx(0.5)


def test_unit_speed_and_orientation():
    rng = np.random.default_rng(3)
    for dim in (2, 3):
        for _ in range(100):
            a = BoundaryPoint(complex(rng.normal(), rng.normal() if dim == 3 else 0), dim)
            b = BoundaryPoint(complex(rng.normal(), rng.normal() if dim == 3 else 0), dim)
            g = geodesic_between(a, b, random_point(rng, dim))
            t = float(rng.uniform(-5, 5))
            assert hyp_distance(g.point(0), g.point(t)) == pytest.approx(abs(t), abs=1e-7)
            far = g.point(30.0)
            assert abs(far.z - b.z) < 1e-6


def test_projection_examples():
    g = geodesic_between(BoundaryPoint(0.0), BoundaryPoint(None), P(0, 1))
    t, q = closest_point_projection(P(1, 1), g)
    assert q.height == pytest.approx(math.sqrt(2))
    res = minimize_scalar(lambda s: hyp_distance(P(1, 1), g.point(s)), bounds=(-5, 5),
                          method="bounded", options={"xatol": 1e-10})
    assert t == pytest.approx(res.x, abs=1e-5)
    g = geodesic_between(BoundaryPoint(-1.0), BoundaryPoint(1.0), P(0, 1))
    t, q = closest_point_projection(P(0, 5), g)
    assert t == pytest.approx(0.0, abs=1e-12) and q.height == pytest.approx(1.0)
    t, q = closest_point_projection(g.point(0.7), g)
    assert t == pytest.approx(0.7, abs=1e-9)


def test_projection_is_idempotent():
    rng = np.random.default_rng(4)
    for dim in (2, 3):
        for _ in range(200):
            a = BoundaryPoint(complex(rng.normal(), rng.normal() if dim == 3 else 0), dim)
            b = BoundaryPoint(complex(rng.normal(), rng.normal() if dim == 3 else 0), dim)
            g = geodesic_between(a, b, random_point(rng, dim))
            t, q = closest_point_projection(random_point(rng, dim), g)
            t2, _ = closest_point_projection(q, g)
            assert t2 == pytest.approx(t, abs=1e-7)


def test_tangent_vector_endpoints():
    up = geodesic_from_tangent(TangentVector(P(0, 1), 0j, 1.0))
    assert up.forward.is_infinite
    side = geodesic_from_tangent(TangentVector(P(0, 1), 1 + 0j, 0.0))
    assert side.forward.z == pytest.approx(1.0) and side.backward.z == pytest.approx(-1.0)


def test_delta_thin_triangles():
    rng = np.random.default_rng(5)
    for dim in (2, 3):
        for _ in range(500):
            p, q, r = (random_point(rng, dim) for _ in range(3))
            assert delta_thin_check(p, q, r, samples=16)
