"""Association model: the linearized MILP, the mMTC preload and the baseline.

The problem couples three binary variable families: ``x[i,j]`` attaches user
``i`` to AP ``j``, ``g[i,j,k]`` picks bandwidth option ``k`` there, and the
product term ``G[i,j,k] = x[i,j] * g[i,j,k]`` is linearized through three
rows per triple (G <= g, G <= x, G >= g + x - 1).  The objective maximizes
the sum of G[i,j,k] * V[i,j,k] with V the constant per-option rate.

Rows are stored in well-conditioned units: bandwidths in MHz, rates and
capacities in Mbps, mode/linking rows unitless.  Rates reported to callers
are always bps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .radio import RadioEnvironment
from .scenario import Constraint, DcMode, ScenarioSpec
from .topology import Topology

MBPS = 1e6
MHZ = 1e6

DEFAULT_MIN_RATE_BPS = 100e6


class InconsistentInput(ValueError):
    """Radio and topology dimensions disagree."""


def mmtc_backhaul_load(topology: Topology, rng: np.random.Generator,
                       rate_range_kbps: tuple[float, float] = (1.0, 1000.0),
                       homing: str = "grid") -> np.ndarray:
    """Per-MC backhaul load (bps) from guard-band mMTC devices.

    Each device draws a uniform rate and homes either to the MC of the grid
    cell it was generated in (default) or to the nearest MC.  The load is
    subtracted from the MC core-link capacity before the model is built;
    mMTC devices consume no access-network resources.
    """
    load = np.zeros(topology.n_mc)
    mmtc = np.flatnonzero(topology.user_service == 1)
    if len(mmtc) == 0:
        return load
    rates = rng.uniform(rate_range_kbps[0], rate_range_kbps[1], size=len(mmtc)) * 1e3
    if homing == "grid":
        homes = topology.mmtc_home_mc[mmtc]
    elif homing == "nearest":
        d = np.linalg.norm(topology.user_xy[mmtc][:, None, :]
                           - topology.mc_xy[None, :, :], axis=2)
        homes = d.argmin(axis=1)
    else:
        raise ValueError(f"unknown mMTC homing {homing!r}")
    np.add.at(load, homes, rates)
    return load


def resolve_capacities(topology: Topology, radio: RadioEnvironment,
                       sc_uplift_bps: float = 0.0,
                       mc_uplift_bps: float = 0.0) -> np.ndarray:
    """Per-AP backhaul capacity in bps, before any mMTC preload.

    Wired SCs carry the fixed fiber capacity; wireless SCs get their Shannon
    share, clamped at the MC core-link capacity (every SC routes through its
    MC, so a larger figure would be unusable).  Re-dimensioning uplifts are
    added on top.
    """
    cap = np.empty(topology.n_aps)
    cap[:topology.n_mc] = topology.mc_core_capacity_bps + mc_uplift_bps
    for n in range(topology.n_sc):
        if topology.sc_wireless[n]:
            shannon = min(radio.wireless_backhaul_bps[n], topology.mc_core_capacity_bps)
            cap[topology.n_mc + n] = shannon + sc_uplift_bps
        else:
            cap[topology.n_mc + n] = topology.sc_wired_capacity_bps + sc_uplift_bps
    return cap


@dataclass
class AssociationProblem:
    """Sparse MILP instance with index maps back to (user, AP, option)."""

    n_users: int
    n_mc: int
    n_sc: int
    option_count: np.ndarray      # (A,)
    option_bw_hz: np.ndarray      # (A, Kmax) zero-padded
    rate_bps: np.ndarray          # (U, A, Kmax) zero-padded
    carrier_bw_hz: np.ndarray     # (A,)
    raw_capacity_bps: np.ndarray  # (A,) before mMTC preload
    capacity_bps: np.ndarray      # (A,) effective (MC minus mMTC load)
    mmtc_load_bps: np.ndarray     # (M,)
    sc_parent: np.ndarray         # (N,)
    path_latency_ms: np.ndarray   # (A,)
    min_rate_bps: np.ndarray      # (U,)
    latency_budget_ms: np.ndarray  # (U,)
    dc_mode: DcMode
    flags: frozenset
    objective_mbps: np.ndarray    # (n_cols,)
    a: sp.csr_matrix              # rows in MHz / Mbps / unitless
    senses: np.ndarray            # (m,) -1 <=, 0 ==, +1 >=
    rhs: np.ndarray               # (m,)
    lower: np.ndarray             # (n_cols,)
    upper: np.ndarray             # (n_cols,) 0 on CPL-fixed x
    row_kinds: list               # (kind, indices...)
    # derived index helpers
    slot_to_j: np.ndarray         # (S,) AP of each per-user option slot
    slot_to_k: np.ndarray         # (S,)
    slot_offset: np.ndarray       # (A,) first slot of each AP

    @property
    def n_aps(self) -> int:
        return self.n_mc + self.n_sc

    @property
    def slots_per_user(self) -> int:
        return len(self.slot_to_j)

    @property
    def n_x(self) -> int:
        return self.n_users * self.n_aps

    @property
    def n_g(self) -> int:
        return self.n_users * self.slots_per_user

    @property
    def n_cols(self) -> int:
        return self.n_x + 2 * self.n_g

    @property
    def g_offset(self) -> int:
        return self.n_x

    @property
    def gamma_offset(self) -> int:
        return self.n_x + self.n_g

    def x_col(self, i: int, j: int) -> int:
        return i * self.n_aps + j

    def g_col(self, i: int, j: int, k: int) -> int:
        return self.g_offset + i * self.slots_per_user + self.slot_offset[j] + k

    def gamma_col(self, i: int, j: int, k: int) -> int:
        return self.gamma_offset + i * self.slots_per_user + self.slot_offset[j] + k

    def ap_is_mc(self, j: int) -> bool:
        return j < self.n_mc

    def rate_flat_bps(self) -> np.ndarray:
        """Rates aligned with the g/Gamma column blocks, length n_users * S."""
        return self.rate_bps[:, self.slot_to_j, self.slot_to_k].ravel()

    def to_linear_program(self):
        from .lp import LinearProgram
        return LinearProgram(c=self.objective_mbps.copy(), a=self.a,
                             senses=self.senses.copy(), rhs=self.rhs.copy(),
                             lower=self.lower.copy(), upper=self.upper.copy())

    @classmethod
    def from_arrays(
        cls,
        *,
        n_mc: int,
        n_sc: int,
        option_count: np.ndarray,
        option_bw_hz: np.ndarray,
        rate_bps: np.ndarray,
        carrier_bw_hz: np.ndarray,
        raw_capacity_bps: np.ndarray,
        sc_parent: np.ndarray,
        path_latency_ms: np.ndarray,
        min_rate_bps: np.ndarray,
        latency_budget_ms: np.ndarray,
        dc_mode: DcMode,
        flags: frozenset,
        mmtc_load_bps: np.ndarray | None = None,
    ) -> "AssociationProblem":
        n_users, n_aps, _ = rate_bps.shape
        if n_aps != n_mc + n_sc:
            raise InconsistentInput("AP count mismatch")
        if dc_mode is DcMode.BASELINE:
            raise ValueError("the baseline is generated procedurally, not as a MILP")
        flags = frozenset(Constraint(f) for f in flags)
        option_count = np.asarray(option_count, dtype=int)
        mmtc_load = np.zeros(n_mc) if mmtc_load_bps is None else np.asarray(mmtc_load_bps, float)

        capacity = raw_capacity_bps.astype(float).copy()
        capacity[:n_mc] -= mmtc_load

        # Per-user slot layout shared by the g and Gamma blocks.
        slot_to_j = np.repeat(np.arange(n_aps), option_count)
        slot_to_k = np.concatenate([np.arange(c) for c in option_count]) \
            if n_aps else np.zeros(0, dtype=int)
        slot_offset = np.concatenate([[0], np.cumsum(option_count)])[:-1]
        s_per_user = int(option_count.sum())
        n_x = n_users * n_aps
        n_g = n_users * s_per_user
        g_off, gamma_off = n_x, n_x + n_g
        n_cols = n_x + 2 * n_g

        t = np.arange(n_g)
        t_user = t // s_per_user
        t_slot = t % s_per_user
        t_ap = slot_to_j[t_slot]
        t_xcol = t_user * n_aps + t_ap
        w_mhz_flat = (option_bw_hz[slot_to_j, slot_to_k] / MHZ)[t_slot]
        v_mbps_flat = rate_bps[:, slot_to_j, slot_to_k].ravel() / MBPS

        rows_i: list[np.ndarray] = []
        cols_i: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        senses: list[np.ndarray] = []
        rhs: list[np.ndarray] = []
        row_kinds: list = []
        next_row = 0

        def add_block(r, c, v, sense_arr, rhs_arr, kinds):
            nonlocal next_row
            rows_i.append(np.asarray(r, dtype=int) + next_row)
            cols_i.append(np.asarray(c, dtype=int))
            vals.append(np.asarray(v, dtype=float))
            senses.append(np.asarray(sense_arr, dtype=np.int8))
            rhs.append(np.asarray(rhs_arr, dtype=float))
            row_kinds.extend(kinds)
            next_row += len(rhs_arr)

        # Access bandwidth caps: sum_{i,k} G w_k <= W_j, one row per AP.
        add_block(t_ap, gamma_off + t, w_mhz_flat,
                  np.full(n_aps, -1), carrier_bw_hz / MHZ,
                  [("bw_cap", j) for j in range(n_aps)])

        # At most one bandwidth option per (user, AP): sum_k g <= 1.
        add_block(t_user * n_aps + t_ap, g_off + t, np.ones(n_g),
                  np.full(n_x, -1), np.ones(n_x),
                  [("one_option", i, j) for i in range(n_users) for j in range(n_aps)])

        # Connectivity mode rows on x.
        ii = np.repeat(np.arange(n_users), n_aps)
        jj = np.tile(np.arange(n_aps), n_users)
        if dc_mode is DcMode.ANY_DC:
            add_block(ii, ii * n_aps + jj, np.ones(n_x),
                      np.zeros(n_users), np.full(n_users, 2.0),
                      [("mode_total", i) for i in range(n_users)])
        elif dc_mode is DcMode.MCSC:
            mc_mask = jj < n_mc
            add_block(ii[mc_mask], (ii * n_aps + jj)[mc_mask], np.ones(mc_mask.sum()),
                      np.zeros(n_users), np.ones(n_users),
                      [("mode_mc", i) for i in range(n_users)])
            if n_sc:
                sc_mask = ~mc_mask
                add_block(ii[sc_mask], (ii * n_aps + jj)[sc_mask], np.ones(sc_mask.sum()),
                          np.full(n_users, -1), np.ones(n_users),
                          [("mode_sc", i) for i in range(n_users)])
        elif dc_mode is DcMode.SA:
            add_block(ii, ii * n_aps + jj, np.ones(n_x),
                      np.full(n_users, -1), np.ones(n_users),
                      [("mode_total", i) for i in range(n_users)])

        if Constraint.MRT in flags:
            add_block(t_user, gamma_off + t, v_mbps_flat,
                      np.ones(n_users), np.asarray(min_rate_bps, float) / MBPS,
                      [("mrt", i) for i in range(n_users)])

        if Constraint.CB in flags:
            if n_sc:
                add_block(t_ap[t_ap >= n_mc] - n_mc, (gamma_off + t)[t_ap >= n_mc],
                          v_mbps_flat[t_ap >= n_mc],
                          np.full(n_sc, -1), capacity[n_mc:] / MBPS,
                          [("cb_sc", j) for j in range(n_mc, n_aps)])
            # MC rows include the users of every child SC (the linearized
            # SC-through-MC consumption) plus the MC's own users.
            ap_to_mc = np.concatenate([np.arange(n_mc), np.asarray(sc_parent, dtype=int)])
            t_mc_row = ap_to_mc[t_ap]
            add_block(t_mc_row, gamma_off + t, v_mbps_flat,
                      np.full(n_mc, -1), capacity[:n_mc] / MBPS,
                      [("cb_mc", j) for j in range(n_mc)])

        # Linearization: G <= g, G <= x, g + x - G <= 1.
        add_block(np.repeat(np.arange(n_g), 2),
                  np.column_stack([gamma_off + t, g_off + t]).ravel(),
                  np.tile([1.0, -1.0], n_g),
                  np.full(n_g, -1), np.zeros(n_g),
                  [("link_g", int(u), int(j), int(k)) for u, j, k in
                   zip(t_user, t_ap, slot_to_k[t_slot])])
        add_block(np.repeat(np.arange(n_g), 2),
                  np.column_stack([gamma_off + t, t_xcol]).ravel(),
                  np.tile([1.0, -1.0], n_g),
                  np.full(n_g, -1), np.zeros(n_g),
                  [("link_x", int(u), int(j), int(k)) for u, j, k in
                   zip(t_user, t_ap, slot_to_k[t_slot])])
        add_block(np.repeat(np.arange(n_g), 3),
                  np.column_stack([g_off + t, t_xcol, gamma_off + t]).ravel(),
                  np.tile([1.0, 1.0, -1.0], n_g),
                  np.full(n_g, -1), np.ones(n_g),
                  [("link_lb", int(u), int(j), int(k)) for u, j, k in
                   zip(t_user, t_ap, slot_to_k[t_slot])])

        a = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows_i), np.concatenate(cols_i))),
            shape=(next_row, n_cols)).tocsr()

        objective = np.zeros(n_cols)
        objective[gamma_off:] = v_mbps_flat

        lower = np.zeros(n_cols)
        upper = np.ones(n_cols)
        lat = np.asarray(latency_budget_ms, float)
        # Path-latency constraint as variable fixings: x[i,j] = 0 whenever the
        # AP's path exceeds the user's budget (exact for binary x, and tighter
        # in the relaxation than the p_j * x <= l_i row).
        if Constraint.CPL in flags:
            too_far = path_latency_ms[None, :] > lat[:, None]
            for i, j in zip(*np.nonzero(too_far)):
                upper[i * n_aps + j] = 0.0

        return cls(
            n_users=n_users, n_mc=n_mc, n_sc=n_sc,
            option_count=option_count, option_bw_hz=np.asarray(option_bw_hz, float),
            rate_bps=np.asarray(rate_bps, float), carrier_bw_hz=np.asarray(carrier_bw_hz, float),
            raw_capacity_bps=np.asarray(raw_capacity_bps, float), capacity_bps=capacity,
            mmtc_load_bps=mmtc_load, sc_parent=np.asarray(sc_parent, dtype=int),
            path_latency_ms=np.asarray(path_latency_ms, float),
            min_rate_bps=np.asarray(min_rate_bps, float), latency_budget_ms=lat,
            dc_mode=dc_mode, flags=flags,
            objective_mbps=objective, a=a,
            senses=np.concatenate(senses), rhs=np.concatenate(rhs),
            lower=lower, upper=upper, row_kinds=row_kinds,
            slot_to_j=slot_to_j, slot_to_k=slot_to_k, slot_offset=slot_offset,
        )


def build_milp(spec: ScenarioSpec, topology: Topology, radio: RadioEnvironment,
               mmtc_load_bps: np.ndarray | None = None) -> AssociationProblem:
    """Assemble the association MILP for one trial."""
    if radio.n_users != topology.n_embb or radio.n_aps != topology.n_aps:
        raise InconsistentInput(
            f"radio matrices are {radio.n_users}x{radio.n_aps}, topology has "
            f"{topology.n_embb} eMBB users and {topology.n_aps} APs")
    raw_cap = resolve_capacities(
        topology, radio,
        sc_uplift_bps=float(spec.override("sc_backhaul_uplift_bps", 0.0)),
        mc_uplift_bps=float(spec.override("mc_backhaul_uplift_bps", 0.0)))
    min_rate = float(spec.override("min_rate_bps", DEFAULT_MIN_RATE_BPS))
    budget = spec.effective_latency_budget_ms
    return AssociationProblem.from_arrays(
        n_mc=topology.n_mc, n_sc=topology.n_sc,
        option_count=radio.option_count, option_bw_hz=radio.option_bw_hz,
        rate_bps=radio.rate_bps, carrier_bw_hz=radio.carrier_bw_hz,
        raw_capacity_bps=raw_cap, sc_parent=topology.sc_parent,
        path_latency_ms=topology.ap_path_latency_ms,
        min_rate_bps=np.full(topology.n_embb, min_rate),
        latency_budget_ms=np.full(topology.n_embb, budget),
        dc_mode=spec.dc_mode, flags=spec.constraints,
        mmtc_load_bps=mmtc_load_bps,
    )


@dataclass
class AssociationSolution:
    """A concrete association: attachments, option choices and delivered rates."""

    x: np.ndarray                 # (U, A) 0/1
    option_choice: np.ndarray     # (U, A) option index, -1 = none
    user_ap_rate_bps: np.ndarray  # (U, A)
    ap_access_bw_hz: np.ndarray   # (A,)

    @property
    def user_rate_bps(self) -> np.ndarray:
        return self.user_ap_rate_bps.sum(axis=1)

    @property
    def total_rate_bps(self) -> float:
        return float(self.user_ap_rate_bps.sum())

    def ap_backhaul_demand_bps(self, n_mc: int, sc_parent: np.ndarray) -> np.ndarray:
        """Per-AP eMBB backhaul demand; MC rows include their child SCs."""
        demand = self.user_ap_rate_bps.sum(axis=0)
        out = demand.copy()
        for n, parent in enumerate(sc_parent):
            out[parent] += demand[n_mc + n]
        return out


def solution_from_assignment(problem: AssociationProblem,
                             z: np.ndarray) -> AssociationSolution:
    """Decode a binary variable vector into an AssociationSolution."""
    n_users, n_aps = problem.n_users, problem.n_aps
    x = (z[:problem.n_x].reshape(n_users, n_aps) > 0.5).astype(np.uint8)
    gamma = z[problem.gamma_offset:].reshape(n_users, problem.slots_per_user) > 0.5
    option_choice = np.full((n_users, n_aps), -1, dtype=np.int16)
    user_ap_rate = np.zeros((n_users, n_aps))
    access_bw = np.zeros(n_aps)
    for i, s in zip(*np.nonzero(gamma)):
        j, k = int(problem.slot_to_j[s]), int(problem.slot_to_k[s])
        option_choice[i, j] = k
        user_ap_rate[i, j] = problem.rate_bps[i, j, k]
        access_bw[j] += problem.option_bw_hz[j, k]
    return AssociationSolution(x=x, option_choice=option_choice,
                               user_ap_rate_bps=user_ap_rate,
                               ap_access_bw_hz=access_bw)


def baseline_association(radio: RadioEnvironment,
                         topology: Topology) -> AssociationSolution:
    """Max-SNR association with equal bandwidth split per AP.

    Each user attaches to the AP with the highest SNR (first index on ties);
    every AP then divides its full carrier bandwidth equally among its users,
    and the delivered rate uses the user's SINR toward that AP.  Constraint
    flags are deliberately ignored.
    """
    n_users, n_aps = radio.snr_db.shape
    choice = radio.snr_db.argmax(axis=1)
    counts = np.bincount(choice, minlength=n_aps)
    x = np.zeros((n_users, n_aps), dtype=np.uint8)
    user_ap_rate = np.zeros((n_users, n_aps))
    for i, j in enumerate(choice):
        x[i, j] = 1
        share = radio.carrier_bw_hz[j] / counts[j]
        se = np.log2(1.0 + 10.0 ** (radio.sinr_db[i, j] / 10.0))
        user_ap_rate[i, j] = share * se
    access_bw = np.where(counts > 0, radio.carrier_bw_hz, 0.0)
    return AssociationSolution(
        x=x, option_choice=np.full((n_users, n_aps), -1, dtype=np.int16),
        user_ap_rate_bps=user_ap_rate, ap_access_bw_hz=access_bw)
