import math

import numpy as np
import pytest

from cuspex import horoworld as W
from cuspex import lattice as L
from cuspex.excursion import translate_geodesic
from cuspex.horoworld import (
    EndpointInHoroballClosure,
    FiniteHoroballCollection,
    Horoball,
    HoroballCollection,
    NotDisjoint,
    WindowEndpointInHoroball,
    enumerate_horoballs,
    excursion,
    horoball_image,
    min_separation,
)
from cuspex.hypgeom import BoundaryPoint, InteriorPoint, Isometry, geodesic_between, mobius_apply_interior
from cuspex.verify import bfs_enumeration_oracle, random_window

INF = BoundaryPoint(None)
S = Isometry(0, -1, 1, 0)
T = Isometry(1, 1, 0, 1)
PHI = (1 + math.sqrt(5)) / 2


def unit_semicircle():
    return geodesic_between(BoundaryPoint(-1.0), BoundaryPoint(1.0), InteriorPoint(0j, 1.0, 2))


def test_horoball_image_under_inversion():
    H = Horoball(INF, 1.0)
    img = horoball_image(S, H)
    assert img.base.z == 0 and img.size == pytest.approx(1.0)
    # points of the horosphere y = 1 go to the sphere of diameter 1 at 0
    for x in np.linspace(-5, 5, 20):
        q = mobius_apply_interior(S, InteriorPoint(complex(x), 1.0, 2))
        assert abs(q.z) ** 2 + (q.height - 0.5) ** 2 == pytest.approx(0.25, abs=1e-12)
    fixed = horoball_image(T, H)
    assert fixed.at_infinity and fixed.size == pytest.approx(1.0)


def test_horoball_image_exact_matches_float():
    coll = HoroballCollection("psl2z", 1.2)
    g = L.preset("psl2z").word("S*T^2*S*T^-3")
    H = coll.root()
    exact = horoball_image(g, H)
    approx = horoball_image(Isometry.from_group_element(g), Horoball(INF, 1.2))
    assert exact.base.z == pytest.approx(approx.base.z)
    assert exact.size == pytest.approx(approx.size)


def test_semicircle_chord():
    gamma = unit_semicircle()
    t1, t2 = W.geodesic_horoball_intersection(gamma, Horoball(INF, 0.5))
    assert t2 - t1 == pytest.approx(math.acosh(7), abs=1e-12)
    assert excursion(gamma, Horoball(INF, 0.5)) == pytest.approx(2 * math.sqrt(3), abs=1e-12)
    assert W.geodesic_horoball_intersection(gamma, Horoball(INF, 2.0)) is None
    assert excursion(gamma, Horoball(INF, 2.0)) == 0.0
    # tangent at the apex
    assert excursion(gamma, Horoball(INF, 1.0)) == pytest.approx(0.0, abs=1e-6)


def test_excursion_of_finite_ball():
    gamma = unit_semicircle()
    # the ball of diameter 1.5 at 0.3 pokes through the semicircle
    assert excursion(gamma, Horoball(BoundaryPoint(0.3), 1.5)) > 0
    assert excursion(gamma, Horoball(BoundaryPoint(5.0), 0.1)) == 0.0


def test_endpoint_in_horoball_closure():
    gamma = geodesic_between(BoundaryPoint(0.0), INF, InteriorPoint(0j, 1.0, 2))
    with pytest.raises(EndpointInHoroballClosure):
        excursion(gamma, Horoball(INF, 3.0))
    with pytest.raises(EndpointInHoroballClosure):
        excursion(gamma, Horoball(BoundaryPoint(0.0), 0.5))


def test_min_separation():
    with pytest.warns(UserWarning):
        assert min_separation(HoroballCollection("psl2z", 1.0)) == 0.0
    with pytest.warns(UserWarning):
        assert min_separation(HoroballCollection("psl2z", 1.2)) == pytest.approx(2 * math.log(1.2))
    with pytest.raises(NotDisjoint):
        min_separation(HoroballCollection("psl2z", 0.9))
    finite = FiniteHoroballCollection([Horoball(BoundaryPoint(0.0), 1.0),
                                       Horoball(BoundaryPoint(1.0), 1.0)])
    assert min_separation(finite) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(NotDisjoint):
        min_separation(FiniteHoroballCollection([Horoball(BoundaryPoint(0.0), 1.0),
                                                 Horoball(BoundaryPoint(0.5), 1.0)]))


def test_collection_depth_and_thickness():
    coll = HoroballCollection("psl2z", 1.2)
    assert coll.is_thick(InteriorPoint(0j, 1.0, 2))
    assert not coll.is_thick(InteriorPoint(0.3 + 0j, 5.0, 2))
    assert coll.depth(InteriorPoint(0.3 + 0j, 2.4, 2)) == pytest.approx(2.0)


def golden_ray():
    return geodesic_between(BoundaryPoint(-1 / PHI), BoundaryPoint(PHI), InteriorPoint(0j, 1.0, 2))


def test_golden_ray_visits_fibonacci_convergents():
    coll = HoroballCollection("psl2z", 1.1)
    recs = enumerate_horoballs(golden_ray(), (0, 20), 1e-6, collection=coll)
    fib = [1, 1]
    while len(fib) < len(recs) + 2:
        fib.append(fib[-1] + fib[-2])
    keys = [r.horoball.key for r in recs]
    assert keys == [(1, 0)] + [(fib[i + 1], fib[i]) for i in range(len(recs) - 1)]
    assert len(recs) > 15
    # consecutive crossings are a constant time apart
    gaps = np.diff([r.midpoint_time for r in recs])
    assert np.allclose(gaps, 2 * math.log(PHI), atol=1e-9)
    end = W.ChartWalker(coll, golden_ray()).slide_to_thick(12.0)
    bfs = bfs_enumeration_oracle(golden_ray(), (0, end), 1e-6, coll)
    cf = enumerate_horoballs(golden_ray(), (0, end), 1e-6, collection=coll)
    assert len(cf) >= 12
    assert [r.horoball.key for r in bfs] == [r.horoball.key for r in cf]
    # at height 1.2 the same ray misses every horoball
    assert enumerate_horoballs(golden_ray(), (0, 20), 1e-6,
                               collection=HoroballCollection("psl2z", 1.2)) == []


def test_window_inside_horoball_rejected():
    coll = HoroballCollection("psl2z", 1.2)
    gamma = geodesic_between(BoundaryPoint(-0.4), BoundaryPoint(0.6), InteriorPoint(0j, 0.1, 2))
    walker = W.ChartWalker(coll, gamma)
    inside = walker.records_between(-5, 5)
    assert inside
    r = inside[0]
    with pytest.raises(WindowEndpointInHoroball):
        enumerate_horoballs(gamma, (r.midpoint_time, r.midpoint_time + 3), 1e-6, collection=coll)


@pytest.mark.parametrize("group", ["psl2z", "psl2zi"])
def test_monotone_in_window_and_epsilon(group):
    coll = HoroballCollection(group, 1.2)
    rng = np.random.default_rng(7)
    for _ in range(20):
        gamma, (a, b) = random_window(rng, coll)
        keys = {r.horoball.key for r in enumerate_horoballs(gamma, (a, b), 1e-6, collection=coll)}
        coarse = {r.horoball.key for r in enumerate_horoballs(gamma, (a, b), 1e-2, collection=coll)}
        assert coarse <= keys
        b2 = W.ChartWalker(coll, gamma).slide_to_thick(b + 5.0)
        wider = {r.horoball.key for r in enumerate_horoballs(gamma, (a, b2), 1e-6, collection=coll)}
        assert keys <= wider


@pytest.mark.parametrize("group,word", [("psl2z", "S*T^2"), ("psl2zi", "U*S*T^-1")])
def test_enumeration_is_equivariant(group, word):
    coll = HoroballCollection(group, 1.2)
    g = L.preset(group).word(word)
    rng = np.random.default_rng(11)
    for _ in range(10):
        gamma, win = random_window(rng, coll)
        recs = enumerate_horoballs(gamma, win, 1e-4, collection=coll)
        moved = enumerate_horoballs(translate_geodesic(g, gamma), win, 1e-4, collection=coll)
        assert [horoball_image(g, r.horoball).key for r in recs] == [r.horoball.key for r in moved]
        for r, m in zip(recs, moved):
            assert m.t_entry == pytest.approx(r.t_entry, abs=1e-7)
            assert m.excursion == pytest.approx(r.excursion, rel=1e-7, abs=1e-9)


def test_epsilon_must_be_positive():
    with pytest.raises(ValueError):
        enumerate_horoballs(unit_semicircle(), 5, 0.0)
