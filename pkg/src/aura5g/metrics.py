"""Evaluation metrics: throughput, fairness, backhaul, latency, aggregates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AssociationProblem, AssociationSolution
from .topology import Topology


def jain_index(rates) -> float:
    """Jain's fairness index (sum r)^2 / (n sum r^2); 1 = equal, 1/n = one user.

    Undefined (ValueError) when every rate is zero.
    """
    r = np.asarray(rates, dtype=float)
    if r.size == 0:
        raise ValueError("fairness needs at least one rate")
    if np.any(r < 0):
        raise ValueError("rates must be non-negative")
    denom = float((r ** 2).sum())
    if denom == 0.0:
        raise ValueError("fairness is undefined for all-zero rates")
    return float(r.sum() ** 2 / (len(r) * denom))


def backhaul_utilization(solution: AssociationSolution, topology: Topology,
                         capacity_bps: np.ndarray,
                         mmtc_load_bps: np.ndarray | None = None) -> np.ndarray:
    """Per-AP (demand - capacity) in bps; positive means over-utilized.

    SC demand is its own users' rate; MC demand adds every child SC's total
    and the MC's mMTC load.  ``capacity_bps`` is the raw per-AP capacity
    (before the mMTC preload), so a negative delta always means the link
    genuinely has headroom.
    """
    demand = solution.ap_backhaul_demand_bps(topology.n_mc, topology.sc_parent)
    if mmtc_load_bps is not None:
        demand = demand.copy()
        demand[:topology.n_mc] += mmtc_load_bps
    return demand - np.asarray(capacity_bps, dtype=float)


def latency_compliance(solution: AssociationSolution, topology: Topology,
                       budget_ms: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-user worst-path latency and violation flags against the budget.

    A user's latency is the maximum over its attached APs (the path
    constraint binds every attachment).  Users with no attachment get NaN
    and never count as violations.
    """
    lat = topology.ap_path_latency_ms
    attached = solution.x > 0
    user_lat = np.full(solution.x.shape[0], np.nan)
    for i in range(solution.x.shape[0]):
        if attached[i].any():
            user_lat[i] = lat[attached[i]].max()
    violations = np.where(np.isnan(user_lat), False, user_lat > budget_ms + 1e-9)
    return user_lat, violations


@dataclass
class MetricsBundle:
    """Per-trial evaluation metrics attached to each trial record."""

    total_throughput_bps: float
    jain: float                      # NaN when undefined (no served user)
    backhaul_delta_bps: np.ndarray   # (A,)
    user_latency_ms: np.ndarray      # (U,) NaN when detached
    latency_violations: int


def compute_metrics(solution: AssociationSolution, topology: Topology,
                    capacity_bps: np.ndarray, mmtc_load_bps: np.ndarray | None,
                    budget_ms: float) -> MetricsBundle:
    rates = solution.user_rate_bps
    try:
        jain = jain_index(rates)
    except ValueError:
        jain = float("nan")
    delta = backhaul_utilization(solution, topology, capacity_bps, mmtc_load_bps)
    lat, viol = latency_compliance(solution, topology, budget_ms)
    return MetricsBundle(
        total_throughput_bps=float(rates.sum()),
        jain=jain,
        backhaul_delta_bps=delta,
        user_latency_ms=lat,
        latency_violations=int(viol.sum()),
    )


def throughput_matches_objective(problem: AssociationProblem, assignment,
                                 objective_bps: float, rel_tol: float = 1e-9) -> bool:
    """Recompute sum(G * V) from the rate table and compare to the objective."""
    z = np.asarray(assignment, dtype=float)
    gamma = z[problem.gamma_offset:]
    flat = problem.rate_flat_bps()
    recomputed = float(flat @ gamma)
    return abs(recomputed - objective_bps) <= rel_tol * max(1.0, abs(objective_bps))


def convergence_cdf(solve_times_s, n_trials: int) -> list[tuple[float, float]]:
    """Empirical CDF points over converged trials, normalized by all trials.

    The final point reaches (number converged) / n_trials, so campaigns with
    unsolved trials top out below 1.
    """
    times = sorted(float(t) for t in solve_times_s)
    return [(t, (k + 1) / n_trials) for k, t in enumerate(times)]


def campaign_aggregates(records) -> dict:
    """Status tallies plus metric means over the optimally solved trials."""
    tallies: dict[str, int] = {}
    for rec in records:
        tallies[rec.status] = tallies.get(rec.status, 0) + 1
    optimal = [rec for rec in records if rec.status == "optimal"]
    conv = convergence_cdf([rec.solve_time_s for rec in optimal], len(records))

    def mean_over(vals):
        vals = [v for v in vals if v == v]  # drop NaN
        return float(np.mean(vals)) if vals else float("nan")

    return {
        "n_trials": len(records),
        "status_counts": tallies,
        "mean_throughput_bps": mean_over([r.total_throughput_bps for r in optimal]),
        "mean_jain": mean_over([r.jain for r in optimal]),
        "mean_solve_time_s": mean_over([r.solve_time_s for r in optimal]),
        "converged_fraction": len(optimal) / len(records) if records else 0.0,
        "convergence_cdf": conv,
    }
