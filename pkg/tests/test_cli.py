import csv
import json
import math

import pytest

from cuspex import cli
from cuspex.config import ConfigError, ExperimentConfig, parse_config


def write_config(tmp_path, **overrides):
    doc = {"group": "psl2z", "height": 1.2, "k": [1.0], "t_grid": [50.0], "trials": 1, "seed": 3}
    doc.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc, indent=2))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_single_trial(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_rows(out / "series.csv")
    assert [r["kind"] for r in rows] == ["rw", "lebesgue"]
    assert all(float(r["ratio"]) == pytest.approx(float(r["excursion_sum"]) / 50.0) for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1 and summary["medians"]
    assert (out / "ratios.svg").read_text().lstrip().startswith("<?xml")


def test_simulate_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, t_grid=[40.0, 80.0], trials=2)
    out = tmp_path / "out"
    names = ("series.csv", "summary.json", "ratios.svg")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    first = [(out / f).read_bytes() for f in names]
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert first == [(out / f).read_bytes() for f in names]


def test_seed_flag_changes_output(tmp_path):
    cfg = write_config(tmp_path)
    cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["simulate", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "series.csv").read_bytes() != (tmp_path / "b" / "series.csv").read_bytes()


def test_simulate_gaussian_two_powers(tmp_path):
    cfg = write_config(tmp_path, group="psl2zi", k=[1.0, 2.0], t_grid=[30.0])
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_rows(out / "series.csv")
    assert {(r["kind"], float(r["k"])) for r in rows} == {
        ("rw", 1.0), ("rw", 2.0), ("lebesgue", 1.0), ("lebesgue", 2.0)}


def test_custom_step_measure(tmp_path):
    cfg = write_config(tmp_path, step_measure={"S": 0.5, "T": 0.25, "T^-1": 0.25}, kinds=["rw"])
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert len(read_rows(tmp_path / "o" / "series.csv")) == 1


@pytest.mark.parametrize("text,line", [
    ('{\n  "height": 0.5\n}', 2),
    ('{\n  "group": "psl2z",\n  "k": [0.5]\n}', 3),
    ('{\n  "trials": 1,\n  "oops": 2\n}', 3),
    ('{\n  "trials": 1,,\n}', 2),
    ('{\n  "group": "psl2zomega"\n}', 2),
])
def test_config_errors_report_lines(tmp_path, capsys, text, line):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"bad.json:{line}:" in err
    assert not (tmp_path / "o" / "series.csv").exists()


def test_parse_config_defaults():
    cfg = parse_config("{}")
    assert isinstance(cfg, ExperimentConfig)
    assert cfg.height == 1.2 and cfg.t_grid[-1] == 8000.0 and cfg.kinds == ["rw", "lebesgue"]
    with pytest.raises(ConfigError):
        parse_config('{"epsilon": -1}')


def test_bad_command_line_values(tmp_path):
    assert cli.main(["simulate", "--seed", "-1", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["simulate", "--epsilon", "0", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_bfs_backend_fails_to_converge_on_long_horizons(tmp_path):
    cfg = write_config(tmp_path, t_grid=[200.0], kinds=["lebesgue"])
    code = cli.main(["simulate", "--config", str(cfg), "--backend", "bfs", "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_CONVERGENCE


def test_bfs_backend_matches_cf_on_short_horizons(tmp_path):
    cfg = write_config(tmp_path, t_grid=[3.0, 6.0], trials=2)
    cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "cf")])
    cli.main(["simulate", "--config", str(cfg), "--backend", "bfs", "--out", str(tmp_path / "bfs")])
    a, b = read_rows(tmp_path / "cf" / "series.csv"), read_rows(tmp_path / "bfs" / "series.csv")
    assert len(a) == len(b) == 8
    for ra, rb in zip(a, b):
        assert float(ra["excursion_sum"]) == pytest.approx(float(rb["excursion_sum"]), rel=1e-6, abs=1e-9)


def test_export_plot(tmp_path, capsys):
    cfg = write_config(tmp_path, k=[1.0, 2.0], t_grid=[20.0, 40.0], trials=2)
    out = tmp_path / "out"
    cli.main(["simulate", "--config", str(cfg), "--out", str(out)])
    svg1, svg2 = tmp_path / "p1.svg", tmp_path / "p2.svg"
    assert cli.main(["export-plot", str(out / "series.csv"), "--out", str(svg1)]) == 0
    assert cli.main(["export-plot", str(out / "series.csv"), "--out", str(svg2)]) == 0
    text = svg1.read_text()
    assert svg1.read_bytes() == svg2.read_bytes()
    # one median line per (kind, k)
    assert text.count('id="line2d_') >= 4
    for label in ("rw, k=1", "rw, k=2", "lebesgue, k=1", "lebesgue, k=2"):
        assert label in text


def test_export_plot_rejects_empty_csv(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("trial,kind,k,t,excursion_sum,ratio,truncation_bound,n_horoballs\n")
    target = tmp_path / "x.svg"
    assert cli.main(["export-plot", str(empty), "--out", str(target)]) == cli.EXIT_CONFIG
    assert not target.exists()
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n")
    assert cli.main(["export-plot", str(wrong), "--out", str(target)]) == cli.EXIT_CONFIG
    assert "expected columns" in capsys.readouterr().err


def test_birkhoff_command(tmp_path):
    cfg = write_config(tmp_path, birkhoff={"k": [0.5, 1.0], "t_grid": [20.0, 40.0], "trials": 2})
    out = tmp_path / "b"
    assert cli.main(["birkhoff", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_rows(out / "birkhoff.csv")
    assert len(rows) == 4
    for r in rows:
        target = float(r["target"])
        assert math.isfinite(target) == (float(r["k"]) == 0.5)
        assert float(r["average"]) >= 1.0
    assert len(read_rows(out / "birkhoff_trials.csv")) == 8
    assert (out / "birkhoff.svg").exists()
