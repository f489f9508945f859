"""Monte Carlo campaign harness: trial pipeline, aggregation and artifacts.

Every stochastic draw of a trial derives from ``mix_seed(base_seed,
trial_index)`` through independent child streams (small cells, eMBB users,
mMTC devices, backhaul, channel, mMTC rates), so a trial is bit-reproducible
in isolation and paired comparisons (regimes, modes, mMTC on/off) share all
other randomness.  Trials are independent; ``workers > 1`` fans them out
over processes and aggregation stays a single-writer step.

Artifacts written by :func:`write_artifacts` (schema version 1):

    trials.csv       one row per trial: seed, status, objective, times, metrics
    campaign.json    the spec echo plus aggregates over optimal trials
    backhaul.csv     per (trial, AP): demand - capacity in bps
    latency.csv      per (trial, user): worst-path latency vs budget
    convergence.csv  empirical CDF samples of optimal-trial solve times
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import MetricsBundle, campaign_aggregates, compute_metrics, convergence_cdf
from .model import (AssociationSolution, baseline_association, build_milp,
                    mmtc_backhaul_load, resolve_capacities)
from .radio import ChannelParams, build_radio_environment, draw_channel_state
from .scenario import (Constraint, DcMode, ScenarioSpec, Services,
                       mix_seed, scenario_label, spec_to_config)
from .solver import SolveStatus, branch_and_bound
from . import interchange
from .topology import Topology, build_topology

logger = logging.getLogger("aura5g.campaign")

SCHEMA_VERSION = 1

TRIALS_COLUMNS = ["trial", "seed", "status", "objective_bps", "best_bound_bps",
                  "gap", "solve_time_s", "node_count", "total_throughput_bps",
                  "jain", "latency_violations", "n_users", "n_aps"]


@dataclass
class TrialRecord:
    trial: int
    seed: int
    status: str
    objective_bps: float
    best_bound_bps: float
    gap: float
    solve_time_s: float
    node_count: int
    total_throughput_bps: float
    jain: float
    latency_violations: int
    n_users: int
    n_aps: int
    backhaul_delta_bps: np.ndarray
    backhaul_capacity_bps: np.ndarray
    ap_is_mc: np.ndarray
    user_latency_ms: np.ndarray
    latency_budget_ms: float


@dataclass
class CampaignReport:
    spec: ScenarioSpec
    label: str
    records: list
    aggregates: dict = field(default_factory=dict)

    @property
    def status_counts(self) -> dict:
        return self.aggregates.get("status_counts", {})


def channel_params_for(spec: ScenarioSpec) -> ChannelParams:
    kw = {}
    for key in ("backhaul_total_bandwidth_hz", "side_lobe_floor_dbi"):
        if key in spec.parameter_overrides:
            kw[key] = spec.parameter_overrides[key]
    return ChannelParams(**kw)


def build_trial_inputs(spec: ScenarioSpec, trial_index: int):
    """Deterministic (topology, radio, mMTC load) for one trial."""
    seed = mix_seed(spec.base_seed, trial_index)
    streams = np.random.SeedSequence(seed).spawn(3)
    topo_seed, channel_seed, mmtc_seed = streams
    area = spec.override("area_m", (600.0, 600.0))
    topology = build_topology(
        geometry=spec.deployment,
        seed_seq=topo_seed,
        area=tuple(area),
        isd=float(spec.override("mc_isd_m", 200.0)),
        n_embb=spec.n_embb_users,
        mmtc_per_mc=spec.mmtc_per_mc if spec.services is Services.EMBB_PLUS_MMTC else 0,
        sc_count_law=tuple(spec.override("sc_count_law", (3, 10))),
        sc_min_separation_m=float(spec.override("sc_min_separation_m", 20.0)),
    )
    params = channel_params_for(spec)
    state = draw_channel_state(topology, params, np.random.default_rng(channel_seed))
    radio = build_radio_environment(topology, params, state, spec.regime)
    mmtc_load = mmtc_backhaul_load(
        topology, np.random.default_rng(mmtc_seed),
        rate_range_kbps=tuple(spec.override("mmtc_rate_range_kbps", (1.0, 1000.0))),
        homing=str(spec.override("mmtc_homing", "grid")))
    return seed, topology, radio, mmtc_load


def run_trial(spec: ScenarioSpec, trial_index: int, *,
              gap_tol: float = 1e-4) -> TrialRecord:
    """Run one trial end to end; solver failures surface as recorded statuses."""
    seed, topology, radio, mmtc_load = build_trial_inputs(spec, trial_index)
    capacity = resolve_capacities(
        topology, radio,
        sc_uplift_bps=float(spec.override("sc_backhaul_uplift_bps", 0.0)),
        mc_uplift_bps=float(spec.override("mc_backhaul_uplift_bps", 0.0)))
    budget_ms = spec.effective_latency_budget_ms

    if spec.dc_mode is DcMode.BASELINE:
        t0 = time.perf_counter()
        solution = baseline_association(radio, topology)
        solve_time = time.perf_counter() - t0
        status = SolveStatus.OPTIMAL.value
        objective = solution.total_rate_bps
        bound, gap, nodes = objective, 0.0, 0
    else:
        problem = build_milp(spec, topology, radio, mmtc_load_bps=mmtc_load)
        command = interchange.configured_command()
        if command:
            outcome = interchange.external_adapter(
                problem, command, time_limit_s=spec.solver_time_limit_s)
        else:
            outcome = branch_and_bound(problem,
                                       time_limit_s=spec.solver_time_limit_s,
                                       gap_tol=gap_tol)
        solution = outcome.solution
        status = outcome.status.value
        objective = outcome.objective_bps
        bound = outcome.best_bound_bps
        gap = outcome.gap
        nodes = outcome.node_count
        solve_time = outcome.wall_time_s

    if solution is not None:
        metrics = compute_metrics(solution, topology, capacity, mmtc_load, budget_ms)
    else:
        metrics = MetricsBundle(
            total_throughput_bps=float("nan"), jain=float("nan"),
            backhaul_delta_bps=np.full(topology.n_aps, np.nan),
            user_latency_ms=np.full(topology.n_embb, np.nan),
            latency_violations=0)

    return TrialRecord(
        trial=trial_index, seed=seed, status=status,
        objective_bps=objective, best_bound_bps=bound, gap=gap,
        solve_time_s=solve_time, node_count=nodes,
        total_throughput_bps=metrics.total_throughput_bps,
        jain=metrics.jain, latency_violations=metrics.latency_violations,
        n_users=topology.n_embb, n_aps=topology.n_aps,
        backhaul_delta_bps=metrics.backhaul_delta_bps,
        backhaul_capacity_bps=capacity,
        ap_is_mc=topology.ap_is_mc.copy(),
        user_latency_ms=metrics.user_latency_ms,
        latency_budget_ms=budget_ms)


def _trial_star(args):
    spec, idx, gap_tol = args
    return run_trial(spec, idx, gap_tol=gap_tol)


def run_campaign(spec: ScenarioSpec, out_dir=None, *, workers: int = 1,
                 gap_tol: float = 1e-4) -> CampaignReport:
    """Run all trials of a scenario and optionally write the artifact set."""
    label = scenario_label(spec)
    logger.info("campaign=%s trials=%d users=%d", label, spec.n_trials, spec.n_embb_users)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                _trial_star, [(spec, i, gap_tol) for i in range(spec.n_trials)]))
    else:
        records = [run_trial(spec, i, gap_tol=gap_tol) for i in range(spec.n_trials)]
    report = CampaignReport(spec=spec, label=label, records=records,
                            aggregates=campaign_aggregates(records))
    if out_dir is not None:
        write_artifacts(report, out_dir)
    return report


def write_artifacts(report: CampaignReport, out_dir) -> None:
    """Write trials.csv, campaign.json, backhaul.csv, latency.csv, convergence.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "trials.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIALS_COLUMNS)
        for r in report.records:
            writer.writerow([r.trial, r.seed, r.status, r.objective_bps,
                             r.best_bound_bps, r.gap, r.solve_time_s, r.node_count,
                             r.total_throughput_bps, r.jain, r.latency_violations,
                             r.n_users, r.n_aps])

    with open(out / "backhaul.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "ap", "ap_kind", "demand_bps", "capacity_bps", "delta_bps"])
        for r in report.records:
            for j, delta in enumerate(r.backhaul_delta_bps):
                kind = "mc" if r.ap_is_mc[j] else "sc"
                cap = r.backhaul_capacity_bps[j]
                writer.writerow([r.trial, j, kind, delta + cap, cap, delta])

    with open(out / "latency.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "user", "latency_ms", "budget_ms", "violation"])
        for r in report.records:
            for i, lat in enumerate(r.user_latency_ms):
                viol = int(lat == lat and lat > r.latency_budget_ms + 1e-9)
                writer.writerow([r.trial, i, lat, r.latency_budget_ms, viol])

    with open(out / "convergence.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solve_time_s", "fraction"])
        optimal = [r.solve_time_s for r in report.records if r.status == "optimal"]
        for t, frac in convergence_cdf(optimal, len(report.records)):
            writer.writerow([t, frac])

    payload = {
        "schema_version": SCHEMA_VERSION,
        "label": report.label,
        "spec": spec_to_config(report.spec),
        "aggregates": report.aggregates,
    }
    with open(out / "campaign.json", "w") as fh:
        json.dump(payload, fh, indent=2, default=float)


def measured_mean_sc_backhaul_bps(report: CampaignReport) -> float:
    """Mean SC backhaul demand over optimal trials, the re-dimensioning input."""
    demands = []
    for r in report.records:
        if r.status != "optimal":
            continue
        sc = ~r.ap_is_mc
        demand = r.backhaul_delta_bps[sc] + r.backhaul_capacity_bps[sc]
        demands.extend(d for d in demand if d == d)
    return float(np.mean(demands)) if demands else float("nan")
