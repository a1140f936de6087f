import json

import numpy as np
import pytest

from cuspex import lattice as L
from cuspex.horoworld import HoroballCollection
from cuspex.hypgeom import InteriorPoint
from cuspex.lattice import GroupElement, ZI, ZZ


@pytest.mark.parametrize("name", ["psl2z", "psl2zi"])
def test_preset_relators_hold(name):
    g = L.preset(name)
    checks = g.relator_check()
    assert checks and all(checks.values())


def test_modular_relations_explicit():
    g = L.preset("psl2z")
    S, T = g.generators["S"], g.generators["T"]
    ident = GroupElement.identity()
    assert S * S == ident
    assert (S * T) * (S * T) * (S * T) == ident
    assert L.inverse(T) == GroupElement(1, -1, 0, 1)
    assert T * L.inverse(T) == ident


def test_sign_normalization():
    assert L.normalize(GroupElement(-1, -1, 0, -1)) == GroupElement(1, 1, 0, 1)
    assert GroupElement(0, 1, -1, 0) == GroupElement(0, -1, 1, 0)


def test_bad_determinant_rejected():
    with pytest.raises(ValueError):
        GroupElement(2, 1, 1, 2)


def test_unknown_preset():
    with pytest.raises(L.UnknownPreset):
        L.preset("psl2zomega")


def test_gaussian_generators_commute():
    g = L.preset("psl2zi")
    T, U = g.generators["T"], g.generators["U"]
    assert T * U == U * T
    assert g.word("T^3*U^-2") == L.power(T, 3) * L.power(U, -2)


def test_word_lengths_of_translations():
    g = L.preset("psl2z")
    gens = list(g.generators.values())
    T = g.generators["T"]
    assert L.word_length(GroupElement.identity(), gens, 3) == 0
    assert L.word_length(T, gens, 3) == 1
    assert L.word_length(g.generators["S"] * T, gens, 3) == 2
    # T^n has length n for small n: no shorter word in S, T^{+-1} reaches it
    sym = L.symmetric_closure(gens)
    for n in range(1, 6):
        assert L.word_length(L.power(T, n), gens, 8) == n
        # exhaustive enumeration of words of length < n
        level = {GroupElement.identity()}
        seen = set(level)
        for _ in range(n - 1):
            level = {w * s for w in level for s in sym}
            seen |= level
        assert L.power(T, n) not in seen


def test_word_length_not_found():
    g = L.preset("psl2z")
    with pytest.raises(L.NotFound):
        L.word_length(L.power(g.generators["T"], 9), list(g.generators.values()), 3)


def test_ball_growth_is_exponential():
    g = L.preset("psl2z")
    sizes = L.ball_sizes(list(g.generators.values()), 12)
    assert sizes[0] == 1
    assert all(b > a for a, b in zip(sizes, sizes[1:]))
    assert sizes[12] / sizes[6] > 4


def test_custom_group_json(tmp_path):
    doc = {"name": "gamma", "ring": "Z",
           "generators": {"S": [[0, -1], [1, 0]], "T": [[1, 1], [0, 1]]},
           "cusps": [{"fixed_point": "inf", "stabilizer": ["T"]}]}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(doc))
    g = L.load_custom_group(str(path))
    assert g.ring is ZZ and set(g.generators) == {"S", "T"}
    assert L.ambient_preset(g).name == "psl2z"
    gi = L.load_custom_group({"generators": {"U": [[1, [0, 1]], [0, 1]]},
                              "cusps": [{"fixed_point": "inf", "stabilizer": ["U"]}]})
    assert gi.ring is ZI


def test_custom_group_errors():
    with pytest.raises(L.GroupSpecError):
        L.load_custom_group({"generators": {}})
    with pytest.raises(L.GroupSpecError):
        L.load_custom_group({"generators": {"X": [[2, 0], [0, 1]]}})
    with pytest.raises(L.GroupSpecError):
        # S is not parabolic, so it cannot stabilize the cusp
        L.load_custom_group({"generators": {"S": [[0, -1], [1, 0]]},
                             "cusps": [{"fixed_point": "inf", "stabilizer": ["S"]}]})


@pytest.mark.parametrize("ring", [ZZ, ZI])
def test_reduce_point_lands_in_domain(ring):
    rng = np.random.default_rng(0)
    for _ in range(200):
        z = complex(rng.normal() * 5, rng.normal() * 5 if ring is ZI else 0.0)
        y = float(np.exp(rng.normal() - 2))
        zr, yr, moves = L.reduce_point(ring, z, y)
        assert abs(zr.real) <= 0.5 + 1e-12 and abs(zr.imag) <= 0.5 + 1e-12
        assert abs(zr) ** 2 + yr ** 2 >= 1 - 1e-9
        # replaying the moves from the start reproduces the reduced point
        g = GroupElement.identity(ring)
        for m in moves:
            g = L.move_matrix(ring, m) * g
        from cuspex.hypgeom import Isometry, mobius_apply_interior
        q = mobius_apply_interior(Isometry.from_group_element(g),
                                  InteriorPoint(z, y, ring.dim))
        assert abs(q.z - zr) < 1e-8 and q.height == pytest.approx(yr, rel=1e-8)


def test_thick_word_comparison():
    g = L.preset("psl2z")
    gens = list(g.generators.values())
    coll = HoroballCollection("psl2z", 1.2)
    x = InteriorPoint(0.1 + 0j, 1.05, 2)
    assert L.thick_word_comparison(GroupElement.identity(), x, gens, coll) == (0.0, 0)
    d, n = L.thick_word_comparison(g.generators["T"], x, gens, coll)
    assert n == 1 and d > 0
    pairs = [L.thick_word_comparison(w, x, gens, coll)
             for w, r in L.ball_elements(gens, 5).items() if r > 0]
    C = L.fit_comparability_constant(pairs)
    assert 1.0 <= C < 10.0
    assert all(n / C - C <= d + 1e-9 and d <= C * n + C + 1e-9 for d, n in pairs)
