import csv
import json
from pathlib import Path

import numpy as np
import pytest

from aura5g.campaign import (build_trial_inputs, measured_mean_sc_backhaul_bps,
                             run_campaign, run_trial, write_artifacts,
                             TRIALS_COLUMNS)
from aura5g.scenario import DcMode, parse_scenario_code
from dataclasses import replace

SMALL = {"area_m": (200.0, 200.0)}


def small_spec(code="CAIE", **kw):
    kw.setdefault("n_embb_users", 6)
    kw.setdefault("n_trials", 3)
    kw.setdefault("base_seed", 11)
    kw.setdefault("parameter_overrides", SMALL)
    return parse_scenario_code(code, **kw)


class TestRunTrial:
    def test_deterministic_objective(self):
        spec = small_spec()
        a = run_trial(spec, 0)
        b = run_trial(spec, 0)
        assert a.objective_bps == b.objective_bps
        assert a.seed == b.seed

    def test_bit_identical_inputs(self):
        spec = small_spec()
        _, topo_a, radio_a, load_a = build_trial_inputs(spec, 2)
        _, topo_b, radio_b, load_b = build_trial_inputs(spec, 2)
        assert np.array_equal(topo_a.sc_xy, topo_b.sc_xy)
        assert np.array_equal(radio_a.sinr_db, radio_b.sinr_db)
        assert np.array_equal(load_a, load_b)

    def test_trials_differ(self):
        spec = small_spec()
        a = run_trial(spec, 0)
        b = run_trial(spec, 1)
        assert a.objective_bps != b.objective_bps

    def test_embb_draws_shared_across_service_mix(self):
        plain = small_spec()
        with_mmtc = small_spec("CAIEm", mmtc_per_mc=50)
        _, topo_a, radio_a, load_a = build_trial_inputs(plain, 0)
        _, topo_b, radio_b, load_b = build_trial_inputs(with_mmtc, 0)
        assert np.array_equal(topo_a.embb_xy, topo_b.embb_xy)
        assert np.array_equal(radio_a.sinr_db, radio_b.sinr_db)
        assert load_a.sum() == 0 and load_b.sum() > 0

    def test_baseline_mode_always_optimal(self):
        spec = replace(small_spec(), dc_mode=DcMode.BASELINE)
        rec = run_trial(spec, 0)
        assert rec.status == "optimal"
        assert rec.total_throughput_bps > 0
        assert rec.node_count == 0

    def test_infeasible_recorded_not_raised(self):
        # 20 users on one macro cell at 100 Mbps each cannot fit in 80 MHz:
        # even at se = 30 bps/Hz every user needs a >= 5 MHz option, and
        # 20 * 5 MHz > 80 MHz, so the minimum-rate model is infeasible by
        # capacity arithmetic
        spec = parse_scenario_code(
            "CABE", n_embb_users=20, n_trials=1, base_seed=3,
            constraints=("MRT",),
            parameter_overrides={"area_m": (200.0, 200.0), "sc_count_law": (0, 0)})
        _, topo, radio, _ = build_trial_inputs(spec, 0)
        assert topo.n_sc == 0 and topo.n_mc == 1
        se = np.log2(1 + 10 ** (radio.sinr_db / 10))
        needed = [min((w for w in (1.5e6, 3e6, 5e6, 10e6, 20e6)
                       if w * s >= 100e6), default=np.inf)
                  for s in se[:, 0]]
        assert sum(needed) > 80e6
        rec = run_trial(replace(spec, dc_mode=DcMode.SA), 0)
        assert rec.status == "infeasible"


class TestCampaign:
    def test_record_count_and_tallies(self):
        report = run_campaign(small_spec())
        assert len(report.records) == 3
        assert sum(report.status_counts.values()) == 3

    def test_reproducible_across_runs(self):
        a = run_campaign(small_spec())
        b = run_campaign(small_spec())
        assert [r.objective_bps for r in a.records] == \
            [r.objective_bps for r in b.records]

    def test_parallel_equals_serial(self):
        spec = small_spec(n_trials=4)
        serial = run_campaign(spec)
        parallel = run_campaign(spec, workers=2)
        assert [r.objective_bps for r in serial.records] == \
            [r.objective_bps for r in parallel.records]

    def test_artifacts_schema(self, tmp_path):
        spec = small_spec()
        report = run_campaign(spec, tmp_path)
        for name in ("trials.csv", "campaign.json", "backhaul.csv",
                     "latency.csv", "convergence.csv"):
            assert (tmp_path / name).exists()
        rows = list(csv.DictReader(open(tmp_path / "trials.csv")))
        assert len(rows) == spec.n_trials
        assert list(rows[0].keys()) == TRIALS_COLUMNS
        doc = json.loads((tmp_path / "campaign.json").read_text())
        assert doc["schema_version"] == 1
        assert doc["spec"]["scenario"] == "CAIE"
        assert sum(doc["aggregates"]["status_counts"].values()) == spec.n_trials

    def test_aggregates_recomputable_from_csv(self, tmp_path):
        report = run_campaign(small_spec(), tmp_path)
        rows = list(csv.DictReader(open(tmp_path / "trials.csv")))
        optimal = [r for r in rows if r["status"] == "optimal"]
        if optimal:
            mean_thr = np.mean([float(r["total_throughput_bps"]) for r in optimal])
            doc = json.loads((tmp_path / "campaign.json").read_text())
            assert doc["aggregates"]["mean_throughput_bps"] == pytest.approx(mean_thr)

    def test_backhaul_csv_consistent(self, tmp_path):
        report = run_campaign(small_spec(), tmp_path)
        rows = list(csv.DictReader(open(tmp_path / "backhaul.csv")))
        for row in rows[:20]:
            assert float(row["demand_bps"]) == pytest.approx(
                float(row["capacity_bps"]) + float(row["delta_bps"]))

    def test_convergence_csv_nondecreasing(self, tmp_path):
        report = run_campaign(small_spec(), tmp_path)
        rows = list(csv.DictReader(open(tmp_path / "convergence.csv")))
        fracs = [float(r["fraction"]) for r in rows]
        assert fracs == sorted(fracs)
        n_opt = report.status_counts.get("optimal", 0)
        if rows:
            assert fracs[-1] == pytest.approx(n_opt / spec_trials(report))

    def test_unwritable_output_raises(self, tmp_path):
        target = tmp_path / "file"
        target.write_text("x")
        with pytest.raises(OSError):
            run_campaign(small_spec(), target / "sub")

    def test_mean_sc_backhaul_measurement(self):
        report = run_campaign(small_spec(n_embb_users=8))
        mean = measured_mean_sc_backhaul_bps(report)
        assert np.isfinite(mean) and mean >= 0


def spec_trials(report):
    return report.spec.n_trials
