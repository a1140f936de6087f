import json
import math

import numpy as np
import pytest

from cuspex import cli, horoworld
from cuspex import verify as V
from cuspex.horoworld import Horoball, HoroballCollection
from cuspex.hypgeom import BoundaryPoint, InteriorPoint, geodesic_between


def test_arc_length_oracle_on_semicircle():
    gamma = geodesic_between(BoundaryPoint(-1.0), BoundaryPoint(1.0), InteriorPoint(0j, 1.0, 2))
    val = V.arc_length_excursion_oracle(gamma, Horoball(BoundaryPoint(None), 0.5))
    assert val == pytest.approx(2 * math.sqrt(3), abs=1e-8)
    # a vertical line through a finite horoball
    vertical = geodesic_between(BoundaryPoint(0.25), BoundaryPoint(None), InteriorPoint(0.25 + 0j, 1.0, 2))
    val = V.arc_length_excursion_oracle(vertical, Horoball(BoundaryPoint(0.0), 1.0))
    assert val == pytest.approx(horoworld.excursion(vertical, Horoball(BoundaryPoint(0.0), 1.0)), rel=1e-8)


def test_arc_length_report_small():
    rep = V.arc_length_report(trials=30, seed=1)
    assert rep.passed and rep.trials == 60 and rep.value < 1e-6


@pytest.mark.parametrize("group", ["psl2z", "psl2zi"])
def test_backends_agree(group):
    rep = V.backend_equivalence_report(group, windows=5, seed=3)
    assert rep.passed and rep.value == 0


def test_bfs_gives_up_beyond_norm_bound():
    coll = HoroballCollection("psl2z", 1.2)
    rng = np.random.default_rng(0)
    gamma, _ = V.random_window(rng, coll)
    with pytest.raises(V.RadiusExhausted):
        V.bfs_enumeration_oracle(gamma, (0.0, 40.0), 1e-6, coll, max_norm=1e3)


def test_exact_lemma_checks():
    assert V.recurrence_report(trials=2, steps=2000).passed
    assert V.powers_k_report(trials=500).passed
    assert V.compute_report(trials=200).passed


def test_chord_configuration_tangency():
    R, S_, base = V.chord_config(0.5, 2.0)
    assert R > 0 and S_ > 0 and base == pytest.approx(S_ - R)


def test_report_line_and_json():
    rep = V.OracleReport("demo", 3, 0.5, 1.0, True, "max_rel_error", None, {}, 0.1)
    assert rep.line().startswith("PASS demo:")
    doc = json.loads(V.reports_to_json([rep]))
    assert doc["reports"][0]["name"] == "demo" and doc["reports"][0]["passed"]


def _suite_names(path):
    entries = json.loads(path.read_text())["reports"]
    return [e["name"] for e in entries], entries


def test_verify_command_lists_every_suite(tmp_path):
    cli.main(["verify", "--scale", "0.02", "--out", str(tmp_path)])
    names, entries = _suite_names(tmp_path / "verify_report.json")
    assert len(names) == 9
    assert any("arc length" in n for n in names)
    assert sum("cf vs bfs" in n for n in names) == 2
    exact = [e for e in entries if e["kind"] in ("max_rel_error", "mismatched_windows", "violations",
                                                   "misclassifications")]
    assert exact and all(e["passed"] for e in exact)


def test_mutated_closed_form_is_caught(tmp_path, monkeypatch, capsys):
    real = horoworld.excursion_from_chord
    monkeypatch.setattr(horoworld, "excursion_from_chord", lambda ell: 1.02 * real(ell))
    code = cli.main(["verify", "--scale", "0.02", "--out", str(tmp_path)])
    assert code == cli.EXIT_VERIFY
    out = capsys.readouterr().out
    assert "FAIL closed-form excursion vs arc length" in out
