import numpy as np
import pytest

from aura5g.model import (AssociationProblem, InconsistentInput,
                          baseline_association, build_milp, mmtc_backhaul_load,
                          resolve_capacities, solution_from_assignment)
from aura5g.radio import ChannelParams, build_radio_environment, draw_channel_state
from aura5g.scenario import Constraint, DcMode, Deployment, parse_scenario_code
from aura5g.solver import branch_and_bound, SolveStatus
from aura5g.topology import build_topology

from oracle_enum import enumerate_optimum

PARAMS = ChannelParams()


def trial_pieces(seed=0, n_embb=6, **spec_kw):
    spec = parse_scenario_code("CABE", n_embb_users=n_embb, **spec_kw)
    topo = build_topology(geometry=Deployment.CIRCULAR,
                          seed_seq=np.random.SeedSequence(seed), n_embb=n_embb,
                          mmtc_per_mc=spec.mmtc_per_mc)
    state = draw_channel_state(topo, PARAMS, np.random.default_rng(seed + 1))
    radio = build_radio_environment(topo, PARAMS, state, spec.regime)
    return spec, topo, radio


def synthetic_problem(*, n_users=2, n_mc=1, n_sc=1, se=4.0, carrier=(80e6, 1e9),
                      capacity=(10e9, 1e9), mode=DcMode.SA, flags=frozenset(),
                      options=((1.5e6, 3e6, 5e6, 10e6, 20e6), (50e6, 100e6, 200e6)),
                      min_rate=100e6, budget_ms=3.0, hops=(1.0, 2.0)):
    n_aps = n_mc + n_sc
    counts = np.array([len(options[0])] * n_mc + [len(options[1])] * n_sc)
    k_max = counts.max()
    bw = np.zeros((n_aps, k_max))
    for j in range(n_aps):
        opts = options[0] if j < n_mc else options[1]
        bw[j, :len(opts)] = opts
    rate = np.broadcast_to(se, (n_users, n_aps))[:, :, None] * bw[None, :, :]
    return AssociationProblem.from_arrays(
        n_mc=n_mc, n_sc=n_sc, option_count=counts, option_bw_hz=bw,
        rate_bps=np.ascontiguousarray(rate),
        carrier_bw_hz=np.array([carrier[0]] * n_mc + [carrier[1]] * n_sc, float),
        raw_capacity_bps=np.array([capacity[0]] * n_mc + [capacity[1]] * n_sc, float),
        sc_parent=np.zeros(n_sc, dtype=int),
        path_latency_ms=np.asarray(hops, float)[:n_aps],
        min_rate_bps=np.full(n_users, min_rate),
        latency_budget_ms=np.full(n_users, budget_ms),
        dc_mode=mode, flags=flags)


class TestMmtcLoad:
    def test_zero_devices(self):
        _, topo, _ = trial_pieces(seed=1)
        load = mmtc_backhaul_load(topo, np.random.default_rng(0))
        assert (load == 0).all()

    def test_mean_load_follows_uniform_sum_law(self):
        # 960 devices/MC at U[1,1000] kbps: mean 480.48 Mbps, sd ~8.94 Mbps
        topo = build_topology(geometry=Deployment.CIRCULAR,
                              seed_seq=np.random.SeedSequence(2), n_embb=1,
                              mmtc_per_mc=960)
        rng = np.random.default_rng(3)
        means = [mmtc_backhaul_load(topo, rng).mean() for _ in range(100)]
        per_dev_sd = (999e3 ** 2 / 12) ** 0.5
        sd_of_mean = per_dev_sd * np.sqrt(960) / np.sqrt(9) / np.sqrt(100)
        assert abs(np.mean(means) - 480.48e6) < 3 * sd_of_mean

    def test_default_load_leaves_mc_capacity_positive(self):
        topo = build_topology(geometry=Deployment.CIRCULAR,
                              seed_seq=np.random.SeedSequence(4), n_embb=1,
                              mmtc_per_mc=960)
        load = mmtc_backhaul_load(topo, np.random.default_rng(5))
        assert (10e9 - load > 0).all()

    def test_nearest_homing(self):
        topo = build_topology(geometry=Deployment.CIRCULAR,
                              seed_seq=np.random.SeedSequence(6), n_embb=1,
                              mmtc_per_mc=10)
        near = mmtc_backhaul_load(topo, np.random.default_rng(7), homing="nearest")
        assert near.sum() > 0
        with pytest.raises(ValueError):
            mmtc_backhaul_load(topo, np.random.default_rng(7), homing="bogus")


class TestBuildMilp:
    def test_row_structure(self):
        spec, topo, radio = trial_pieces(seed=3, n_embb=4,
                                         constraints=("MRT", "CB", "CPL"))
        prob = build_milp(spec, topo, radio)
        kinds = [k[0] for k in prob.row_kinds]
        U, A = prob.n_users, prob.n_aps
        assert kinds.count("bw_cap") == A
        assert kinds.count("one_option") == U * A
        assert kinds.count("mode_total") == U          # AnyDC
        assert kinds.count("mrt") == U
        assert kinds.count("cb_sc") == prob.n_sc
        assert kinds.count("cb_mc") == prob.n_mc
        assert kinds.count("link_g") == prob.n_g
        assert kinds.count("link_x") == prob.n_g
        assert kinds.count("link_lb") == prob.n_g

    def test_every_gamma_in_exactly_three_linking_rows(self):
        spec, topo, radio = trial_pieces(seed=4, n_embb=2)
        prob = build_milp(spec, topo, radio)
        link_rows = [r for r, k in enumerate(prob.row_kinds)
                     if k[0] in ("link_g", "link_x", "link_lb")]
        sub = prob.a[link_rows][:, prob.gamma_offset:]
        per_gamma = np.asarray((sub != 0).sum(axis=0)).ravel()
        assert (per_gamma == 3).all()

    def test_objective_touches_only_gamma(self):
        spec, topo, radio = trial_pieces(seed=5, n_embb=2)
        prob = build_milp(spec, topo, radio)
        assert (prob.objective_mbps[:prob.gamma_offset] == 0).all()
        assert (prob.objective_mbps[prob.gamma_offset:] >= 0).all()

    def test_disabled_flags_have_no_rows(self):
        spec, topo, radio = trial_pieces(seed=6, n_embb=2)
        prob = build_milp(spec, topo, radio)
        kinds = {k[0] for k in prob.row_kinds}
        assert "mrt" not in kinds and "cb_sc" not in kinds and "cb_mc" not in kinds
        assert (prob.upper == 1).all()  # no CPL fixings either

    def test_sa_mode_rows(self):
        prob = synthetic_problem(n_users=2, n_mc=1, n_sc=1, mode=DcMode.SA)
        rows = [r for r, k in enumerate(prob.row_kinds) if k[0] == "mode_total"]
        assert len(rows) == 2
        assert (prob.senses[rows] == -1).all()
        assert (prob.rhs[rows] == 1.0).all()
        sub = prob.a[rows][:, :prob.n_x]
        assert (np.asarray(sub.sum(axis=1)).ravel() == prob.n_aps).all()

    def test_mcsc_mode_rows(self):
        prob = synthetic_problem(n_users=2, n_mc=2, n_sc=1, mode=DcMode.MCSC)
        mc_rows = [r for r, k in enumerate(prob.row_kinds) if k[0] == "mode_mc"]
        sc_rows = [r for r, k in enumerate(prob.row_kinds) if k[0] == "mode_sc"]
        assert (prob.senses[mc_rows] == 0).all() and (prob.rhs[mc_rows] == 1).all()
        assert (prob.senses[sc_rows] == -1).all() and (prob.rhs[sc_rows] == 1).all()

    def test_cpl_encoded_as_fixings(self):
        prob = synthetic_problem(n_users=1, n_mc=1, n_sc=1, hops=(1.0, 5.0),
                                 flags=frozenset({Constraint.CPL}), budget_ms=3.0)
        assert prob.upper[prob.x_col(0, 1)] == 0.0
        assert prob.upper[prob.x_col(0, 0)] == 1.0
        assert not any(k[0] == "latency" for k in prob.row_kinds)

    def test_mmtc_preload_reduces_mc_capacity(self):
        prob = synthetic_problem(flags=frozenset({Constraint.CB}))
        loaded = synthetic_problem(flags=frozenset({Constraint.CB}))
        base_rhs = prob.rhs[[r for r, k in enumerate(prob.row_kinds) if k[0] == "cb_mc"]]
        prob2 = AssociationProblem.from_arrays(
            n_mc=1, n_sc=1, option_count=loaded.option_count,
            option_bw_hz=loaded.option_bw_hz, rate_bps=loaded.rate_bps,
            carrier_bw_hz=loaded.carrier_bw_hz,
            raw_capacity_bps=loaded.raw_capacity_bps,
            sc_parent=loaded.sc_parent, path_latency_ms=loaded.path_latency_ms,
            min_rate_bps=loaded.min_rate_bps,
            latency_budget_ms=loaded.latency_budget_ms,
            dc_mode=loaded.dc_mode, flags=frozenset({Constraint.CB}),
            mmtc_load_bps=np.array([2e9]))
        new_rhs = prob2.rhs[[r for r, k in enumerate(prob2.row_kinds) if k[0] == "cb_mc"]]
        assert new_rhs[0] == pytest.approx(base_rhs[0] - 2000.0)  # Mbps units

    def test_dimension_mismatch_rejected(self):
        spec, topo, radio = trial_pieces(seed=7, n_embb=3)
        spec2, topo2, _ = trial_pieces(seed=8, n_embb=4)
        with pytest.raises(InconsistentInput):
            build_milp(spec2, topo2, radio)

    def test_anydc_single_ap_is_infeasible(self):
        prob = synthetic_problem(n_users=1, n_mc=1, n_sc=0, mode=DcMode.ANY_DC)
        out = branch_and_bound(prob, time_limit_s=10.0)
        assert out.status is SolveStatus.INFEASIBLE

    def test_tiny_cb_instance_matches_enumeration(self):
        # one SC capped at 100 Mbps, two users that could each pull 200 Mbps
        prob = synthetic_problem(n_users=2, n_mc=1, n_sc=1, se=1.0,
                                 capacity=(10e9, 100e6), mode=DcMode.SA,
                                 flags=frozenset({Constraint.CB}))
        ref = enumerate_optimum(prob)
        out = branch_and_bound(prob, time_limit_s=30.0, gap_tol=0.0)
        assert out.status is SolveStatus.OPTIMAL
        assert out.objective_bps == pytest.approx(ref.objective_bps, rel=1e-9)
        sol = out.solution
        sc_demand = sol.user_ap_rate_bps[:, 1].sum()
        assert sc_demand <= 100e6 + 1e-3

    def test_wireless_capacity_clamped_to_core_link(self):
        spec, topo, radio = trial_pieces(seed=9, n_embb=2)
        cap = resolve_capacities(topo, radio)
        assert (cap[topo.n_mc:][topo.sc_wireless] <= topo.mc_core_capacity_bps + 1e-6).all()


class TestBaseline:
    def test_single_user_gets_full_carrier(self):
        _, topo, radio = trial_pieces(seed=10, n_embb=1)
        sol = baseline_association(radio, topo)
        j = int(np.flatnonzero(sol.x[0])[0])
        se = np.log2(1 + 10 ** (radio.sinr_db[0, j] / 10))
        assert sol.user_rate_bps[0] == pytest.approx(radio.carrier_bw_hz[j] * se)

    def test_equal_split_on_shared_ap(self):
        # two co-located users share whatever AP wins on SNR
        topo = build_topology(geometry=Deployment.CIRCULAR,
                              seed_seq=np.random.SeedSequence(11), n_embb=2)
        topo.user_xy[1] = topo.user_xy[0]
        state = draw_channel_state(topo, PARAMS, np.random.default_rng(12))
        state.los[1] = state.los[0]
        state.shadow_db[1] = state.shadow_db[0]
        radio = build_radio_environment(topo, PARAMS, state,
                                        parse_scenario_code("CABE").regime)
        sol = baseline_association(radio, topo)
        j0 = int(np.flatnonzero(sol.x[0])[0])
        j1 = int(np.flatnonzero(sol.x[1])[0])
        assert j0 == j1
        se = np.log2(1 + 10 ** (radio.sinr_db[0, j0] / 10))
        assert sol.user_rate_bps[0] == pytest.approx(radio.carrier_bw_hz[j0] / 2 * se)

    def test_snr_tie_breaks_to_lowest_index(self):
        _, topo, radio = trial_pieces(seed=13, n_embb=1)
        snr = radio.snr_db.copy()
        snr[0, :] = 5.0
        from dataclasses import replace
        tied = replace(radio, snr_db=snr)
        sol = baseline_association(tied, topo)
        assert sol.x[0, 0] == 1

    def test_constraints_ignored(self):
        _, topo, radio = trial_pieces(seed=14, n_embb=5)
        sol = baseline_association(radio, topo)
        assert sol.x.sum(axis=1).tolist() == [1] * 5
        assert (sol.option_choice == -1).all()


class TestSolutionDecode:
    def test_assignment_round_trip(self):
        prob = synthetic_problem(n_users=2, n_mc=1, n_sc=1, mode=DcMode.SA)
        z = np.zeros(prob.n_cols)
        z[prob.x_col(0, 1)] = 1
        z[prob.g_col(0, 1, 2)] = 1
        z[prob.gamma_col(0, 1, 2)] = 1
        sol = solution_from_assignment(prob, z)
        assert sol.x[0, 1] == 1 and sol.option_choice[0, 1] == 2
        assert sol.user_rate_bps[0] == pytest.approx(prob.rate_bps[0, 1, 2])
        assert sol.ap_access_bw_hz[1] == pytest.approx(prob.option_bw_hz[1, 2])
        demand = sol.ap_backhaul_demand_bps(prob.n_mc, prob.sc_parent)
        assert demand[0] == pytest.approx(sol.user_rate_bps[0])  # SC routes via MC
