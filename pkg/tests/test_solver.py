import numpy as np
import pytest

from aura5g.model import solution_from_assignment
from aura5g.scenario import Constraint, DcMode
from aura5g.solver import (SolveStatus, audit_solution, branch_and_bound,
                           solve_relaxation)

from oracle_enum import enumerate_optimum, random_tiny_problem
from test_model import synthetic_problem, trial_pieces


class TestAgainstEnumeration:
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_enumeration_per_mode_and_flags(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(8):
            prob = random_tiny_problem(rng)
            ref = enumerate_optimum(prob)
            out = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
            if ref.feasible:
                assert out.status is SolveStatus.OPTIMAL
                assert out.objective_bps == pytest.approx(
                    ref.objective_bps, rel=1e-6, abs=1e-3)
            else:
                assert out.status is SolveStatus.INFEASIBLE

    def test_incumbent_product_identity(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            prob = random_tiny_problem(rng)
            out = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
            if out.status is not SolveStatus.OPTIMAL:
                continue
            z = out.assignment
            x = z[:prob.n_x]
            g = z[prob.g_offset:prob.gamma_offset]
            gamma = z[prob.gamma_offset:]
            t = np.arange(prob.n_g)
            t_user = t // prob.slots_per_user
            t_ap = prob.slot_to_j[t % prob.slots_per_user]
            assert np.allclose(gamma, x[t_user * prob.n_aps + t_ap] * g)


class TestStatuses:
    def test_zero_time_limit(self):
        prob = synthetic_problem(n_users=2, n_mc=1, n_sc=1, mode=DcMode.SA)
        out = branch_and_bound(prob, time_limit_s=0.0)
        assert out.status is SolveStatus.TIME_LIMIT
        assert out.node_count <= 1
        assert out.assignment is None

    def test_pigeonhole_infeasible(self):
        prob = synthetic_problem(n_users=1, n_mc=1, n_sc=0, mode=DcMode.ANY_DC)
        out = branch_and_bound(prob, time_limit_s=10.0)
        assert out.status is SolveStatus.INFEASIBLE

    def test_determinism(self):
        prob = synthetic_problem(n_users=3, n_mc=1, n_sc=2, mode=DcMode.ANY_DC,
                                 se=4.0)
        a = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
        b = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
        assert a.objective_bps == b.objective_bps
        assert a.node_count == b.node_count
        assert np.array_equal(a.assignment, b.assignment)


class TestBounds:
    def test_bound_dominates_incumbent_and_monotone_history(self):
        rng = np.random.default_rng(17)
        for _ in range(15):
            prob = random_tiny_problem(rng)
            out = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
            if out.status is not SolveStatus.OPTIMAL:
                continue
            assert out.best_bound_bps >= out.objective_bps - 1e-6
            bounds = [b for _, b, _ in out.history]
            assert all(b1 >= b2 - 1e-6 for b1, b2 in zip(bounds, bounds[1:]))
            incs = [i for _, _, i in out.history if np.isfinite(i)]
            assert all(i1 <= i2 + 1e-6 for i1, i2 in zip(incs, incs[1:]))

    def test_lp_relaxation_dominates_milp(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            prob = random_tiny_problem(rng)
            out = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
            if out.status is not SolveStatus.OPTIMAL:
                continue
            relax = solve_relaxation(prob)
            assert relax.objective * 1e6 >= out.objective_bps - 1e-3


class TestAudit:
    def test_optimal_incumbent_is_clean(self):
        rng = np.random.default_rng(31)
        prob = random_tiny_problem(rng, flags=frozenset({Constraint.CB}))
        out = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
        if out.status is SolveStatus.OPTIMAL:
            report = audit_solution(prob, out.assignment)
            assert report.ok
            assert report.objective_bps == pytest.approx(out.objective_bps,
                                                         rel=1e-9, abs=1e-3)

    def test_double_option_flagged(self):
        prob = synthetic_problem(n_users=1, n_mc=0, n_sc=1, mode=DcMode.SA)
        z = np.zeros(prob.n_cols)
        z[prob.x_col(0, 0)] = 1
        z[prob.g_col(0, 0, 0)] = 1
        z[prob.g_col(0, 0, 1)] = 1
        z[prob.gamma_col(0, 0, 0)] = 1
        z[prob.gamma_col(0, 0, 1)] = 1
        report = audit_solution(prob, z)
        assert not report.ok
        assert any(v.kind[0] == "one_option" for v in report.violations)

    def test_product_identity_violation_flagged(self):
        prob = synthetic_problem(n_users=1, n_mc=0, n_sc=1, mode=DcMode.SA)
        z = np.zeros(prob.n_cols)
        z[prob.gamma_col(0, 0, 0)] = 1  # gamma without x or g
        report = audit_solution(prob, z)
        assert any(v.kind[0] in ("product", "link_g", "link_x")
                   for v in report.violations)

    def test_cpl_fixing_violation_flagged(self):
        prob = synthetic_problem(n_users=1, n_mc=1, n_sc=1, hops=(1.0, 5.0),
                                 flags=frozenset({Constraint.CPL}), budget_ms=3.0)
        z = np.zeros(prob.n_cols)
        z[prob.x_col(0, 1)] = 1  # attached beyond the latency budget
        report = audit_solution(prob, z)
        assert any(v.kind[0] == "latency" for v in report.violations)

    def test_baseline_under_cb_reports_violations(self):
        spec, topo, radio = trial_pieces(seed=21, n_embb=12,
                                         constraints=("CB",))
        from aura5g.model import baseline_association, build_milp
        prob = build_milp(spec, topo, radio)
        baseline = baseline_association(radio, topo)
        report = audit_solution(prob, baseline)
        # the baseline ignores flags; over-capacity demand must be reported
        demand = baseline.ap_backhaul_demand_bps(topo.n_mc, topo.sc_parent)
        if (demand > prob.capacity_bps + 1e3).any():
            assert not report.ok
            assert any(v.kind[0] in ("cb_sc", "cb_mc") for v in report.violations)

    def test_mode_violation_for_solution_input(self):
        spec, topo, radio = trial_pieces(seed=22, n_embb=3)
        from aura5g.model import baseline_association, build_milp
        prob = build_milp(spec, topo, radio)  # AnyDC expects two attachments
        baseline = baseline_association(radio, topo)
        report = audit_solution(prob, baseline)
        assert any(v.kind[0] == "mode_total" for v in report.violations)
