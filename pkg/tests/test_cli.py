"""Command-line tests for bellbench."""

import csv
import json
import math
from unittest.mock import patch

import pytest
from typer.testing import CliRunner

from cli import app
from bellbench.exceptions import NonConvergenceError

runner = CliRunner()

pytestmark = pytest.mark.integration

ROOT2 = math.sqrt(2.0)


def _simulate(out_dir, *extra):
    return runner.invoke(app, ["simulate", "--preset", "ideal", "--out-dir", str(out_dir), *extra])


def _rewrite_rows(path, change):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    rows = [rows[0]] + [change(row) for row in rows[1:]]
    with open(path, "w", newline="", encoding="utf-8") as f:
        csv.writer(f, lineterminator="\n").writerows(rows)


def test_help_shows_commands():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for command in ("simulate", "analyze", "optimize", "bounds", "budget"):
        assert command in result.stdout


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "bellbench" in result.stdout

# ---------------------------------------------------------------------------
# simulate / analyze
# ---------------------------------------------------------------------------


def test_simulate_ideal(tmp_path):
    result = _simulate(tmp_path)
    assert result.exit_code == 0, result.stdout
    assert (tmp_path / "records.csv").exists()
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    s = report["s_result"]
    assert abs(s["s"] + 2.0 * ROOT2) < 3.0 * s["sigma"]
    assert list(tmp_path.joinpath("logs").glob("bellbench-*.log.jsonl"))


def test_simulate_is_reproducible(tmp_path):
    assert _simulate(tmp_path / "one", "--seed", "7").exit_code == 0
    assert _simulate(tmp_path / "two", "--seed", "7").exit_code == 0
    assert (tmp_path / "one" / "records.csv").read_bytes() == (tmp_path / "two" / "records.csv").read_bytes()


def test_simulate_paper_preset(tmp_path):
    result = runner.invoke(app, ["simulate", "--preset", "paper", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.stdout
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    s = report["s_result"]
    assert abs(s["s"] - report["model_prediction"]["expected_chsh"]) < 3.0 * s["sigma"]
    assert report["error_budget"]["total"] == pytest.approx(5.1e-4, rel=0.15)
    assert report["provenance"]["sets"] == 312


def test_lab_preset_alias_matches_paper(tmp_path):
    for name in ("paper", "lab"):
        result = runner.invoke(app, ["simulate", "--preset", name, "--sets", "2", "--out-dir", str(tmp_path / name)])
        assert result.exit_code == 0, result.stdout
    assert (tmp_path / "paper" / "records.csv").read_bytes() == (tmp_path / "lab" / "records.csv").read_bytes()


def test_simulate_output_under_a_file(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    result = _simulate(blocker / "out")
    assert result.exit_code == 6


def test_simulate_bad_config_key(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"detector_a": {"efficency": 0.5}}), encoding="utf-8")
    result = runner.invoke(app, ["simulate", "--config", str(config), "--out-dir", str(tmp_path / "out")])
    assert result.exit_code == 3


def test_simulate_bad_mode(tmp_path):
    result = _simulate(tmp_path, "--mode", "burst")
    assert result.exit_code == 3


def test_analyze_writes_report_next_to_records(tmp_path):
    assert _simulate(tmp_path).exit_code == 0
    result = runner.invoke(app, ["analyze", str(tmp_path / "records.csv"), "--preset", "ideal"])
    assert result.exit_code == 0, result.stdout
    report = json.loads((tmp_path / "records.report.json").read_text(encoding="utf-8"))
    assert report["tool"]["command"] == "analyze"
    assert "S =" in result.stdout


def test_analyze_zero_coincidences(tmp_path):
    assert _simulate(tmp_path).exit_code == 0

    def zero_pair_one(row):
        if 4 <= int(row[1]) < 8:
            row[7] = "0"
        return row

    _rewrite_rows(tmp_path / "records.csv", zero_pair_one)
    result = runner.invoke(app, ["analyze", str(tmp_path / "records.csv"), "--preset", "ideal"])
    assert result.exit_code == 4


def test_analyze_malformed_row(tmp_path):
    assert _simulate(tmp_path).exit_code == 0

    def corrupt(row):
        if row[1] == "2":
            row[5] = "many"
        return row

    _rewrite_rows(tmp_path / "records.csv", corrupt)
    result = runner.invoke(app, ["analyze", str(tmp_path / "records.csv"), "--preset", "ideal"])
    assert result.exit_code == 4


def test_analyze_missing_file(tmp_path):
    result = runner.invoke(app, ["analyze", str(tmp_path / "absent.csv")])
    assert result.exit_code == 4

# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def test_optimize_ideal(tmp_path):
    result = runner.invoke(app, ["optimize", "--preset", "ideal", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.stdout
    document = json.loads((tmp_path / "optimized_angles.json").read_text(encoding="utf-8"))
    angles = document["angles"]
    assert angles["a0"] == pytest.approx(0.0, abs=0.1)
    assert angles["b0"] == pytest.approx(22.5, abs=0.1)
    assert angles["a1"] == pytest.approx(45.0, abs=0.1)
    assert angles["b1"] == pytest.approx(67.5, abs=0.1)
    assert list(tmp_path.glob("scan_*.csv"))


def test_optimize_round_cap(tmp_path):
    result = runner.invoke(app, ["optimize", "--preset", "ideal", "--max-rounds", "1", "--out-dir", str(tmp_path)])
    assert result.exit_code == 5
    assert (tmp_path / "optimized_angles.json").exists()


def test_optimize_non_convergence_from_coordinator(tmp_path):
    with patch("cli.ApplicationCoordinator") as coordinator:
        coordinator.return_value.optimize.side_effect = NonConvergenceError("stuck")
        result = runner.invoke(app, ["optimize", "--preset", "ideal", "--out-dir", str(tmp_path)])
    assert result.exit_code == 5


def test_optimize_unknown_oracle(tmp_path):
    result = runner.invoke(app, ["optimize", "--oracle", "crystal-ball", "--out-dir", str(tmp_path)])
    assert result.exit_code == 2


def test_optimize_output_under_a_file(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("x", encoding="utf-8")
    result = runner.invoke(app, ["optimize", "--preset", "ideal", "--out-dir", str(blocker / "out")])
    assert result.exit_code == 6

# ---------------------------------------------------------------------------
# bounds / budget
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name, expected", [("pr", "S = 4"), ("local", "S = 2"), ("uniform", "S = 0")])
def test_bounds_builtin(name, expected):
    result = runner.invoke(app, ["bounds", "--builtin", name])
    assert result.exit_code == 0
    assert expected in result.stdout
    assert "no-signaling" in result.stdout


def test_bounds_json():
    result = runner.invoke(app, ["bounds", "--builtin", "pr", "--json"])
    assert result.exit_code == 0
    assert '"chsh": 4.0' in result.stdout
    assert '"no_signaling": true' in result.stdout


def test_bounds_from_file(tmp_path):
    path = tmp_path / "behavior.json"
    path.write_text(json.dumps({"p": [[[[0.25, 0.25], [0.25, 0.25]]] * 2] * 2}), encoding="utf-8")
    result = runner.invoke(app, ["bounds", str(path)])
    assert result.exit_code == 0
    assert "S = 0" in result.stdout


def test_bounds_unnormalized_file(tmp_path):
    path = tmp_path / "behavior.json"
    path.write_text(json.dumps({"p": [[[[0.5, 0.25], [0.25, 0.25]]] * 2] * 2}), encoding="utf-8")
    result = runner.invoke(app, ["bounds", str(path)])
    assert result.exit_code == 4


def test_bounds_ragged_file(tmp_path):
    path = tmp_path / "behavior.json"
    path.write_text(json.dumps({"p": [[1, 2], [3]]}), encoding="utf-8")
    result = runner.invoke(app, ["bounds", str(path)])
    assert result.exit_code == 4


def test_bounds_needs_exactly_one_source(tmp_path):
    assert runner.invoke(app, ["bounds"]).exit_code == 2
    path = tmp_path / "behavior.json"
    path.write_text("{}", encoding="utf-8")
    assert runner.invoke(app, ["bounds", str(path), "--builtin", "pr"]).exit_code == 2


def test_budget_expected_counts():
    result = runner.invoke(app, ["budget", "--preset", "lab"])
    assert result.exit_code == 0
    assert "ds_p" in result.stdout
    assert "Dominant term" in result.stdout


def test_budget_from_records(tmp_path):
    assert _simulate(tmp_path).exit_code == 0
    result = runner.invoke(app, ["budget", "--records", str(tmp_path / "records.csv"), "--preset", "ideal"])
    assert result.exit_code == 0
    assert "total" in result.stdout
