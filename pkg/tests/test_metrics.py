import numpy as np
import pytest

from aura5g.metrics import (backhaul_utilization, campaign_aggregates,
                            compute_metrics, convergence_cdf, jain_index,
                            latency_compliance, throughput_matches_objective)
from aura5g.model import baseline_association, build_milp, resolve_capacities
from aura5g.scenario import Constraint, DcMode
from aura5g.solver import SolveStatus, branch_and_bound

from test_model import synthetic_problem, trial_pieces


class TestJain:
    def test_equal_rates_give_one(self):
        assert jain_index([7.0, 7.0, 7.0, 7.0]) == pytest.approx(1.0)

    def test_single_nonzero_gives_one_over_n(self):
        assert jain_index([0, 0, 0, 0, 3.0]) == pytest.approx(0.2)

    def test_hand_value(self):
        assert jain_index([1.0, 2.0, 3.0]) == pytest.approx(36 / 42, abs=1e-4)

    def test_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            rates = rng.uniform(0, 1e9, size=rng.integers(1, 40))
            if rates.sum() == 0:
                continue
            j = jain_index(rates)
            assert 1 / len(rates) - 1e-12 <= j <= 1 + 1e-12

    def test_all_zero_undefined(self):
        with pytest.raises(ValueError):
            jain_index([0.0, 0.0])
        with pytest.raises(ValueError):
            jain_index([])


class TestBackhaul:
    def test_no_users_delta_is_minus_capacity(self):
        _, topo, radio = trial_pieces(seed=40, n_embb=1)
        sol = baseline_association(radio, topo)
        sol.user_ap_rate_bps[:] = 0
        sol.x[:] = 0
        cap = resolve_capacities(topo, radio)
        delta = backhaul_utilization(sol, topo, cap)
        assert delta == pytest.approx(-cap)

    def test_cb_solution_has_nonpositive_deltas(self):
        prob = synthetic_problem(n_users=2, n_mc=1, n_sc=1, se=1.0,
                                 capacity=(10e9, 100e6), mode=DcMode.SA,
                                 flags=frozenset({Constraint.CB}))
        out = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
        assert out.status is SolveStatus.OPTIMAL
        demand = out.solution.ap_backhaul_demand_bps(1, prob.sc_parent)
        delta = demand - prob.capacity_bps
        assert (delta <= 1e-3).all()

    def test_mc_row_contains_child_demand(self):
        prob = synthetic_problem(n_users=1, n_mc=1, n_sc=1, mode=DcMode.SA)
        import numpy as np
        z = np.zeros(prob.n_cols)
        z[prob.x_col(0, 1)] = 1
        z[prob.g_col(0, 1, 0)] = 1
        z[prob.gamma_col(0, 1, 0)] = 1
        from aura5g.model import solution_from_assignment
        sol = solution_from_assignment(prob, z)
        demand = sol.ap_backhaul_demand_bps(1, prob.sc_parent)
        assert demand[0] >= demand[1] - 1e-9  # MC carries the SC's users

    def test_mmtc_load_added_to_mc(self):
        _, topo, radio = trial_pieces(seed=41, n_embb=2)
        sol = baseline_association(radio, topo)
        cap = resolve_capacities(topo, radio)
        load = np.full(topo.n_mc, 1e8)
        plain = backhaul_utilization(sol, topo, cap)
        with_load = backhaul_utilization(sol, topo, cap, load)
        assert with_load[:topo.n_mc] == pytest.approx(plain[:topo.n_mc] + 1e8)
        assert with_load[topo.n_mc:] == pytest.approx(plain[topo.n_mc:])


class TestLatency:
    def test_max_over_attachments(self):
        _, topo, radio = trial_pieces(seed=42, n_embb=3)
        from aura5g.model import AssociationSolution
        x = np.zeros((3, topo.n_aps), dtype=np.uint8)
        x[0, 0] = 1
        x[1, 0] = 1
        x[1, topo.n_mc] = 1
        sol = AssociationSolution(
            x=x, option_choice=np.full_like(x, -1, dtype=np.int16),
            user_ap_rate_bps=np.zeros_like(x, dtype=float),
            ap_access_bw_hz=np.zeros(topo.n_aps))
        lat, viol = latency_compliance(sol, topo, 3.0)
        assert lat[0] == topo.path_latency_ms(0)
        assert lat[1] == max(topo.path_latency_ms(0),
                             topo.path_latency_ms(topo.n_mc))
        assert np.isnan(lat[2]) and not viol[2]

    def test_cpl_solution_has_zero_violations(self):
        prob = synthetic_problem(n_users=2, n_mc=1, n_sc=1, hops=(1.0, 5.0),
                                 flags=frozenset({Constraint.CPL}), budget_ms=3.0,
                                 mode=DcMode.SA)
        out = branch_and_bound(prob, time_limit_s=10.0, gap_tol=0.0)
        assert out.status is SolveStatus.OPTIMAL
        assert (out.solution.x[:, 1] == 0).all()


class TestThroughputIdentity:
    def test_recomputation_matches_objective(self):
        from oracle_enum import random_tiny_problem
        rng = np.random.default_rng(50)
        for _ in range(10):
            prob = random_tiny_problem(rng)
            out = branch_and_bound(prob, time_limit_s=10.0, gap_tol=0.0)
            if out.status is SolveStatus.OPTIMAL:
                assert throughput_matches_objective(prob, out.assignment,
                                                    out.objective_bps)


class TestAggregates:
    class Rec:
        def __init__(self, status, t=1.0, thr=1e9, jain=0.5):
            self.status = status
            self.solve_time_s = t
            self.total_throughput_bps = thr
            self.jain = jain

    def test_tallies_sum_to_trial_count(self):
        recs = [self.Rec("optimal"), self.Rec("infeasible"), self.Rec("optimal"),
                self.Rec("time_limit")]
        agg = campaign_aggregates(recs)
        assert sum(agg["status_counts"].values()) == 4
        assert agg["converged_fraction"] == pytest.approx(0.5)

    def test_cdf_reaches_one_when_all_converge(self):
        cdf = convergence_cdf([3.0, 1.0, 2.0], 3)
        assert cdf[-1][1] == pytest.approx(1.0)
        times = [t for t, _ in cdf]
        fracs = [f for _, f in cdf]
        assert times == sorted(times)
        assert fracs == sorted(fracs)

    def test_cdf_flat_when_none_converge(self):
        assert convergence_cdf([], 5) == []

    def test_means_exclude_unsolved(self):
        recs = [self.Rec("optimal", thr=2e9, jain=1.0),
                self.Rec("time_limit", thr=9e9, jain=0.1),
                self.Rec("optimal", thr=4e9, jain=0.5)]
        agg = campaign_aggregates(recs)
        assert agg["mean_throughput_bps"] == pytest.approx(3e9)
        assert agg["mean_jain"] == pytest.approx(0.75)


class TestComputeMetrics:
    def test_bundle_fields(self):
        _, topo, radio = trial_pieces(seed=43, n_embb=4)
        sol = baseline_association(radio, topo)
        cap = resolve_capacities(topo, radio)
        bundle = compute_metrics(sol, topo, cap, None, 3.0)
        assert bundle.total_throughput_bps == pytest.approx(sol.total_rate_bps)
        assert bundle.backhaul_delta_bps.shape == (topo.n_aps,)
        assert bundle.user_latency_ms.shape == (4,)
        assert 0 <= bundle.jain <= 1
