import json
from pathlib import Path

import pytest

from aura5g.cli import main


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "camp"
    rc = main(["run", "--scenario", "CAIE", "--trials", "2", "--users", "5",
               "--seed", "4", "--time-limit", "60",
               "--override", "area_m=[200,200]", "--out", str(out)])
    assert rc == 0
    for name in ("trials.csv", "campaign.json", "backhaul.csv", "latency.csv",
                 "convergence.csv"):
        assert (out / name).exists()
    assert "CAIE" in capsys.readouterr().out


def test_run_with_constraints_and_mode(tmp_path):
    out = tmp_path / "camp"
    rc = main(["run", "--scenario", "CAIE", "--constraints", "CPL",
               "--dc-mode", "sa", "--trials", "1", "--users", "4", "--seed", "1",
               "--override", "area_m=[200,200]", "--out", str(out)])
    assert rc == 0
    doc = json.loads((out / "campaign.json").read_text())
    assert doc["spec"]["dc_mode"] == "sa"
    assert doc["spec"]["constraints"] == ["CPL"]


def test_run_from_config(tmp_path):
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps({
        "scenario": "CAIE", "n_trials": 1, "n_embb_users": 4, "base_seed": 2,
        "parameter_overrides": {"area_m": [200, 200]}}))
    out = tmp_path / "camp"
    rc = main(["run", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    assert (out / "trials.csv").exists()


def test_unknown_code_exits_2(tmp_path, capsys):
    rc = main(["run", "--scenario", "QQQQ", "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_sweep(tmp_path):
    matrix = tmp_path / "matrix.json"
    matrix.write_text(json.dumps({
        "scenarios": ["CAIE"], "constraint_sets": [[], ["CPL"]],
        "trials": 1, "users": 4, "seed": 9}))
    out = tmp_path / "sweep"
    rc = main(["sweep", "--matrix", str(matrix),
               "--override", "area_m=[200,200]", "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "sweep.json").read_text())
    assert len(summary) == 2
    for entry in summary:
        assert (Path(entry["dir"]) / "trials.csv").exists()


def test_baseline_mode_via_cli(tmp_path):
    out = tmp_path / "camp"
    rc = main(["run", "--scenario", "CAIE", "--dc-mode", "baseline",
               "--trials", "1", "--users", "4", "--seed", "5",
               "--override", "area_m=[200,200]", "--out", str(out)])
    assert rc == 0
    doc = json.loads((out / "campaign.json").read_text())
    assert doc["aggregates"]["status_counts"] == {"optimal": 1}
