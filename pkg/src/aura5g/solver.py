"""Exact MILP solver: LP relaxation + branch and bound, plus the auditor.

The association problem has a product structure the solver exploits: since
``g`` never appears in the objective and only throttles ``G`` (G <= g,
sum_k g <= 1), any integral point satisfies ``sum_k G[i,j,k] <= x[i,j]``,
and conversely any (x, G) satisfying that aggregate lifts to a feasible
(x, g=G, G) with identical objective.  Node LPs are therefore solved over
(x, G) only with one aggregated linking row per (user, AP) pair; this is a
valid tightening of the relaxation (every integral point satisfies it) and
cuts both node size and tree depth.  Incumbents are lifted back to the full
variable space before they are accepted, and every returned incumbent must
pass the independent auditor over the full row set.

Search: best-bound node selection with a depth-first dive until the first
incumbent, most-fractional branching with lowest-index tie-break, and a
threshold-and-repair rounding heuristic to seed the incumbent.  Child nodes
warm-start the dual simplex from the parent basis.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .lp import (GE, LE, Basis, LinearProgram, LpStatus, NumericalFailure,
                 solve_lp)
from .model import AssociationProblem, AssociationSolution, solution_from_assignment
from .scenario import Constraint, DcMode

logger = logging.getLogger("aura5g.solver")

MBPS = 1e6
INT_TOL = 1e-6
DEFAULT_GAP_TOL = 1e-4


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"
    UNBOUNDED = "unbounded"


@dataclass
class SolveOutcome:
    status: SolveStatus
    assignment: np.ndarray | None      # full binary variable vector, or None
    solution: AssociationSolution | None
    objective_bps: float
    best_bound_bps: float
    gap: float
    wall_time_s: float
    node_count: int
    # (elapsed_s, best_bound_bps, incumbent_bps) snapshots, for monotonicity checks
    history: list = field(default_factory=list)


@dataclass
class RowViolation:
    kind: tuple
    lhs: float
    sense: int
    rhs: float
    violation: float


@dataclass
class AuditReport:
    ok: bool
    violations: list
    objective_bps: float
    max_violation: float


def _row_tol(rhs: float) -> float:
    return 1e-6 * max(1.0, abs(rhs))


class _Reduced:
    """Node LP over (x, G) with the aggregated linking rows."""

    def __init__(self, problem: AssociationProblem):
        self.problem = problem
        n_x, n_g = problem.n_x, problem.n_g
        self.n_red = n_x + n_g

        keep = [idx for idx, kind in enumerate(problem.row_kinds)
                if kind[0] in ("bw_cap", "mode_total", "mode_mc", "mode_sc",
                               "mrt", "cb_sc", "cb_mc")]
        cols = np.concatenate([np.arange(n_x),
                               problem.gamma_offset + np.arange(n_g)])
        base = problem.a[keep][:, cols].tocsr()
        senses = problem.senses[keep]
        rhs = problem.rhs[keep]

        # sum_k G[i,j,k] - x[i,j] <= 0, one row per (user, AP)
        t = np.arange(n_g)
        t_slot = t % problem.slots_per_user
        t_ap = problem.slot_to_j[t_slot]
        t_row = (t // problem.slots_per_user) * problem.n_aps + t_ap
        link = sp.coo_matrix(
            (np.concatenate([np.ones(n_g), -np.ones(n_x)]),
             (np.concatenate([t_row, np.arange(n_x)]),
              np.concatenate([n_x + t, np.arange(n_x)]))),
            shape=(n_x, self.n_red)).tocsr()

        a = sp.vstack([base, link], format="csr")
        senses = np.concatenate([senses, np.full(n_x, LE, dtype=np.int8)])
        rhs = np.concatenate([rhs, np.zeros(n_x)])

        c = np.zeros(self.n_red)
        c[n_x:] = problem.objective_mbps[problem.gamma_offset:]
        lower = np.zeros(self.n_red)
        upper = np.concatenate([problem.upper[:n_x],
                                problem.upper[problem.gamma_offset:]])

        self.infeasible = False
        keep_rows = np.ones(a.shape[0], dtype=bool)
        nnz = np.diff(a.indptr)
        for r in np.flatnonzero(nnz == 1):
            j = a.indices[a.indptr[r]]
            coef = a.data[a.indptr[r]]
            bound = rhs[r] / coef
            sense = senses[r] if coef > 0 else -senses[r]
            if sense <= 0:  # acts as an upper bound (or equality)
                upper[j] = min(upper[j], bound)
            if sense >= 0:
                lower[j] = max(lower[j], bound)
            keep_rows[r] = False
        if np.any(lower > upper + 1e-9):
            self.infeasible = True
        self.lp = LinearProgram(c=c, a=a[keep_rows], senses=senses[keep_rows],
                                rhs=rhs[keep_rows], lower=lower, upper=upper)

    def lift(self, z_red: np.ndarray) -> np.ndarray:
        """Reduced (x, G) point -> full (x, g, G) point with g := G."""
        p = self.problem
        z = np.zeros(p.n_cols)
        z[:p.n_x] = z_red[:p.n_x]
        gamma = z_red[p.n_x:]
        z[p.g_offset:p.gamma_offset] = gamma
        z[p.gamma_offset:] = gamma
        return z

    def exact_check(self, z_red: np.ndarray) -> bool:
        """Row satisfaction of a rounded integral point, float-exact sums."""
        az = self.lp.a @ z_red
        for lhs, sense, rhs in zip(az, self.lp.senses, self.lp.rhs):
            tol = _row_tol(rhs)
            if sense == LE and lhs > rhs + tol:
                return False
            if sense == GE and lhs < rhs - tol:
                return False
            if sense == 0 and abs(lhs - rhs) > tol:
                return False
        if np.any(z_red > self.lp.upper + INT_TOL) or np.any(z_red < self.lp.lower - INT_TOL):
            return False
        return True


class _Repair:
    """Greedy option assignment under the bandwidth and backhaul budgets."""

    def __init__(self, red: _Reduced, x: np.ndarray):
        self.red = red
        p = red.problem
        self.p = p
        self.x = x
        self.cb = Constraint.CB in p.flags
        self.bw_left = p.carrier_bw_hz / 1e6
        self.cap_left = p.capacity_bps / MBPS
        self.choice = np.full((p.n_users, p.n_aps), -1, dtype=int)
        self.rate = np.zeros(p.n_users)

    def _mc_of(self, j: int) -> int:
        return j if j < self.p.n_mc else int(self.p.sc_parent[j - self.p.n_mc])

    def _delta_ok(self, j: int, dw: float, dv: float) -> bool:
        if dw > self.bw_left[j] + 1e-9:
            return False
        if self.cb:
            if dv > self.cap_left[self._mc_of(j)] + 1e-9:
                return False
            if j >= self.p.n_mc and dv > self.cap_left[j] + 1e-9:
                return False
        return True

    def _apply(self, i: int, j: int, k: int) -> None:
        p = self.p
        old = self.choice[i, j]
        dw = p.option_bw_hz[j, k] / 1e6 - (p.option_bw_hz[j, old] / 1e6 if old >= 0 else 0.0)
        dv = (p.rate_bps[i, j, k] - (p.rate_bps[i, j, old] if old >= 0 else 0.0)) / MBPS
        self.bw_left[j] -= dw
        self.rate[i] += dv * MBPS
        if self.cb:
            self.cap_left[self._mc_of(j)] -= dv
            if j >= self.p.n_mc:
                self.cap_left[j] -= dv

    def try_set(self, i: int, j: int, k: int) -> bool:
        p = self.p
        old = self.choice[i, j]
        dw = p.option_bw_hz[j, k] / 1e6 - (p.option_bw_hz[j, old] / 1e6 if old >= 0 else 0.0)
        dv = (p.rate_bps[i, j, k] - (p.rate_bps[i, j, old] if old >= 0 else 0.0)) / MBPS
        if dv <= 1e-12:
            return False
        if not self._delta_ok(j, dw, dv):
            return False
        self._apply(i, j, k)
        self.choice[i, j] = k
        return True

    def ensure_min_rate(self, i: int, need_bps: float) -> bool:
        """Cheapest-bandwidth grants bringing user i up to its minimum rate."""
        p = self.p
        attached = [j for j in np.flatnonzero(self.x[i])]
        while self.rate[i] < need_bps - 1e-3:
            deficit = need_bps - self.rate[i]
            best = None  # (meets_deficit, -extra_w, dv) preference
            for j in attached:
                old = self.choice[i, j]
                for k in range(p.option_count[j]):
                    if k == old:
                        continue
                    dw = p.option_bw_hz[j, k] / 1e6 \
                        - (p.option_bw_hz[j, old] / 1e6 if old >= 0 else 0.0)
                    dv = p.rate_bps[i, j, k] - (p.rate_bps[i, j, old] if old >= 0 else 0.0)
                    if dv <= 1e-9 or not self._delta_ok(j, dw, dv / MBPS):
                        continue
                    meets = dv >= deficit - 1e-3
                    key = (meets, -dw if meets else dv, dv)
                    if best is None or key > best[0]:
                        best = (key, i, j, k)
            if best is None:
                return False
            _, _, j, k = best
            self._apply(i, j, k)
            self.choice[i, j] = k
        return True

    def to_vector(self) -> np.ndarray:
        p = self.p
        gamma = np.zeros((p.n_users, p.slots_per_user))
        for i, j in zip(*np.nonzero(self.choice >= 0)):
            gamma[i, p.slot_offset[j] + self.choice[i, j]] = 1
        return np.concatenate([self.x.ravel().astype(float), gamma.ravel()])


def _attachment_sets(p: AssociationProblem, shortlist: list[int],
                     must: set[int]) -> list[tuple[int, ...]]:
    """Attachment sets over a shortlist that honor the mode and forced APs."""
    from itertools import combinations
    pool = [j for j in shortlist if j not in must]
    base = tuple(sorted(must))
    if p.dc_mode is DcMode.ANY_DC:
        if len(base) > 2:
            return []
        need = 2 - len(base)
        return [base + c for c in combinations(pool, need)]
    if p.dc_mode is DcMode.MCSC:
        mc_must = [j for j in base if j < p.n_mc]
        sc_must = [j for j in base if j >= p.n_mc]
        if len(mc_must) > 1 or len(sc_must) > 1:
            return []
        mc_choices = mc_must if mc_must else [j for j in pool if j < p.n_mc]
        sc_choices = sc_must if sc_must else [None] + [j for j in pool if j >= p.n_mc]
        return [tuple(sorted({m} | ({s} if s is not None else set())))
                for m in mc_choices for s in sc_choices]
    # SA
    if len(base) > 1:
        return []
    if base:
        return [base]
    return [(j,) for j in pool] + [()]


def _floor_combo(p: AssociationProblem, repair: "_Repair", i: int,
                 attach: tuple[int, ...], floor: float):
    """Min-bandwidth option combo over `attach` meeting the rate floor.

    Returns (total_w, [(j, k), ...]) or None if the floor is unreachable
    within the remaining budgets.
    """
    from itertools import product
    menus = []
    for j in attach:
        menu = [(0.0, 0.0, j, -1)]
        for k in range(p.option_count[j]):
            menu.append((p.option_bw_hz[j, k] / 1e6, p.rate_bps[i, j, k], j, k))
        menus.append(menu)
    best = None
    for combo in product(*menus):
        rate = sum(c[1] for c in combo)
        if rate < floor - 1e-3:
            continue
        w = sum(c[0] for c in combo)
        ok = all(c[3] < 0 or repair._delta_ok(c[2], c[0], c[1] / MBPS) for c in combo)
        if not ok:
            continue
        if best is None or (w, -rate) < (best[0], -best[1]):
            best = (w, rate, [(c[2], c[3]) for c in combo if c[3] >= 0])
    if best is None:
        return None
    return best[0], best[2]


def _round_and_repair(red: _Reduced, lp_x: np.ndarray) -> np.ndarray | None:
    """Threshold the relaxed point, then repair it into a feasible incumbent.

    Attachments follow the largest relaxed x values permitted by the mode and
    the fixings; under a minimum-rate flag the attachment is chosen from a
    shortlist (relaxed weight plus rate capability) so every user can reach
    its floor, cheapest bandwidth first.  Remaining bandwidth is then spent
    greedily, guided by the relaxed option values.  Returns a reduced binary
    vector or None when the repair cannot reach feasibility.
    """
    p = red.problem
    n_users, n_aps = p.n_users, p.n_aps
    zx = lp_x[:p.n_x].reshape(n_users, n_aps)
    zg = lp_x[p.n_x:].reshape(n_users, p.slots_per_user)
    allowed = red.lp.upper[:p.n_x].reshape(n_users, n_aps) > 0.5
    forced = red.lp.lower[:p.n_x].reshape(n_users, n_aps) > 0.5
    mrt = Constraint.MRT in p.flags
    capability = p.rate_bps.max(axis=2)

    x = np.zeros((n_users, n_aps))
    repair = _Repair(red, x)
    order_users = np.argsort(-p.min_rate_bps, kind="stable") if mrt else range(n_users)
    for i in order_users:
        i = int(i)
        must = set(int(j) for j in np.flatnonzero(forced[i]))
        by_z = [int(j) for j in np.argsort(-zx[i], kind="stable") if allowed[i, j]]
        shortlist = by_z[:3]
        if mrt:
            by_cap = [int(j) for j in np.argsort(-capability[i], kind="stable")
                      if allowed[i, j]]
            shortlist = list(dict.fromkeys(shortlist + by_cap[:4]))
        else:
            shortlist = by_z[:6]  # plain thresholding, no combo search needed
        sets = _attachment_sets(p, shortlist, must)
        if not sets:
            return None
        if mrt:
            best = None
            for attach in sets:
                combo = _floor_combo(p, repair, i, attach, float(p.min_rate_bps[i]))
                if combo is None:
                    continue
                potential = sum(capability[i, j] for j in attach)
                key = (-potential, combo[0], -sum(zx[i, j] for j in attach))
                if best is None or key < best[0]:
                    best = (key, attach, combo[1])
            if best is None:
                return None
            _, attach, grants = best
            x[i, list(attach)] = 1
            for j, k in grants:
                repair._apply(i, j, k)
                repair.choice[i, j] = k
        else:
            attach = max(sets, key=lambda s: sum(zx[i, j] for j in s))
            x[i, list(attach)] = 1

    cand = [(float(zg[i, s]),
             float(p.objective_mbps[p.gamma_offset + i * p.slots_per_user + s]), int(i), int(s))
            for i, s in zip(*np.nonzero(zg > 1e-9))]
    cand.sort(key=lambda c: (-c[0], -c[1], c[2], c[3]))
    for _, _, i, s in cand:
        j, k = int(p.slot_to_j[s]), int(p.slot_to_k[s])
        if x[i, j]:
            repair.try_set(i, j, k)
    for i in range(n_users):  # spend leftovers on the best plain upgrades
        for j in np.flatnonzero(x[i]):
            for k in np.argsort(-p.rate_bps[i, j, :p.option_count[j]], kind="stable"):
                if repair.try_set(i, int(j), int(k)):
                    break
    z = repair.to_vector()
    return z if red.exact_check(z) else None


@dataclass(order=True)
class _Node:
    neg_bound: float
    seq: int
    depth: int = field(compare=False)
    deltas: tuple = field(compare=False)   # ((var, lo, up), ...)
    basis: Basis | None = field(compare=False)

    @property
    def bound(self) -> float:
        return -self.neg_bound


def branch_and_bound(problem: AssociationProblem, *,
                     time_limit_s: float = 600.0,
                     gap_tol: float = DEFAULT_GAP_TOL,
                     node_limit: int | None = None) -> SolveOutcome:
    """Solve the association MILP exactly (to ``gap_tol``) or hit the limits.

    Any returned incumbent has passed :func:`audit_solution` against the full
    row set.  Status TIME_LIMIT may still carry an incumbent; INFEASIBLE means
    the integral feasible set is provably empty.
    """
    start = time.perf_counter()
    elapsed = lambda: time.perf_counter() - start

    def outcome(status, z_red=None, inc_obj=np.nan, bound=np.nan, nodes=0, history=None):
        if z_red is not None:
            z = red.lift(np.round(z_red))
            sol = solution_from_assignment(problem, z)
        else:
            z, sol = None, None
        gap = np.nan
        if np.isfinite(inc_obj) and np.isfinite(bound):
            gap = max(0.0, (bound - inc_obj) / max(abs(inc_obj), 1e-9))
        return SolveOutcome(status=status, assignment=z, solution=sol,
                            objective_bps=inc_obj * MBPS if np.isfinite(inc_obj) else np.nan,
                            best_bound_bps=bound * MBPS if np.isfinite(bound) else np.nan,
                            gap=gap, wall_time_s=elapsed(), node_count=nodes,
                            history=history or [])

    red = _Reduced(problem)
    if red.infeasible:
        return outcome(SolveStatus.INFEASIBLE)
    if elapsed() >= time_limit_s:
        return outcome(SolveStatus.TIME_LIMIT)

    root_lower = red.lp.lower.copy()
    root_upper = red.lp.upper.copy()

    def node_lp(deltas, basis):
        lower, upper = root_lower.copy(), root_upper.copy()
        for var, lo, up in deltas:
            lower[var], upper[var] = lo, up
        lp = LinearProgram(c=red.lp.c, a=red.lp.a, senses=red.lp.senses,
                           rhs=red.lp.rhs, lower=lower, upper=upper)
        budget = max(time_limit_s - elapsed(), 0.05)
        return solve_lp(lp, warm=basis, time_limit_s=budget)

    history: list = []
    incumbent: np.ndarray | None = None
    inc_obj = -np.inf
    nodes_solved = 0
    seq = 0

    def log_state(best_bound):
        history.append((elapsed(), best_bound * MBPS,
                        inc_obj * MBPS if np.isfinite(inc_obj) else np.nan))
        logger.info("node=%d bound=%.6f incumbent=%.6f gap=%.3g time=%.2f",
                    nodes_solved, best_bound,
                    inc_obj if np.isfinite(inc_obj) else float("nan"),
                    (best_bound - inc_obj) / max(abs(inc_obj), 1e-9)
                    if np.isfinite(inc_obj) else float("inf"),
                    elapsed())

    try:
        root = node_lp((), None)
    except NumericalFailure:
        if elapsed() >= time_limit_s:
            return outcome(SolveStatus.TIME_LIMIT, nodes=1)
        raise
    nodes_solved = 1
    if root.status is LpStatus.INFEASIBLE:
        return outcome(SolveStatus.INFEASIBLE, nodes=1)
    if root.status is LpStatus.UNBOUNDED:
        return outcome(SolveStatus.UNBOUNDED, nodes=1)

    seeded = _round_and_repair(red, root.x)
    if seeded is not None:
        incumbent = seeded
        inc_obj = float(red.lp.c @ seeded)
        logger.info("heuristic incumbent=%.6f", inc_obj)

    def prune_cut():
        if not np.isfinite(inc_obj):
            return -np.inf
        return inc_obj + max(gap_tol * abs(inc_obj), 1e-9 * max(1.0, abs(inc_obj)))

    heap: list[_Node] = []
    dive: list[_Node] = []
    best_bound = root.objective

    def push(node):
        if incumbent is None and not heap:
            dive.append(node)
        else:
            heapq.heappush(heap, node)

    def open_bound():
        b = inc_obj if np.isfinite(inc_obj) else -np.inf
        if heap:
            b = max(b, heap[0].bound)
        for nd in dive:
            b = max(b, nd.bound)
        return b

    current = _Node(-root.objective, seq, 0, (), root.basis)
    pending_lp = root
    log_state(best_bound)

    while True:
        node = current
        res = pending_lp
        if res is None:
            try:
                res = node_lp(node.deltas, node.basis)
                nodes_solved += 1
            except NumericalFailure:
                if elapsed() >= time_limit_s:
                    return outcome(SolveStatus.TIME_LIMIT, incumbent, inc_obj,
                                   open_bound(), nodes_solved, history)
                raise
        current, pending_lp = None, None

        if res is not None and res.status is LpStatus.OPTIMAL and res.objective > prune_cut():
            z = res.x
            frac = np.minimum(z, 1.0 - z)
            frac[red.lp.upper - red.lp.lower < 0.5] = 0.0
            cand = np.flatnonzero(frac > INT_TOL)
            if len(cand) == 0:
                z_int = np.round(z)
                if red.exact_check(z_int):
                    obj = float(red.lp.c @ z_int)
                    if obj > inc_obj:
                        incumbent, inc_obj = z_int, obj
                        if dive:
                            for nd in dive:
                                heapq.heappush(heap, nd)
                            dive.clear()
                        log_state(max(open_bound(), obj))
                else:
                    # rounding crossed a tight row: branch on the least
                    # integral variable so children decide it exactly
                    j = int(np.argmax(np.minimum(z, 1.0 - z)))
                    seq += 1
                    near = round(float(z[j]))
                    first = _Node(-res.objective, seq, node.depth + 1,
                                  node.deltas + ((j, float(near), float(near)),), res.basis)
                    seq += 1
                    second = _Node(-res.objective, seq, node.depth + 1,
                                   node.deltas + ((j, float(1 - near), float(1 - near)),),
                                   res.basis)
                    push(second)
                    push(first)
            else:
                scores = frac[cand]
                j = int(cand[np.argmax(scores)])
                near = round(float(z[j]))
                seq += 1
                near_child = _Node(-res.objective, seq, node.depth + 1,
                                   node.deltas + ((j, float(near), float(near)),),
                                   res.basis)
                seq += 1
                far_child = _Node(-res.objective, seq, node.depth + 1,
                                  node.deltas + ((j, float(1 - near), float(1 - near)),),
                                  res.basis)
                if incumbent is None and not heap:
                    dive.append(far_child)
                    dive.append(near_child)  # popped first
                else:
                    heapq.heappush(heap, near_child)
                    heapq.heappush(heap, far_child)

        # select next node
        while True:
            if elapsed() >= time_limit_s:
                return outcome(SolveStatus.TIME_LIMIT, incumbent, inc_obj,
                               open_bound(), nodes_solved, history)
            if node_limit is not None and nodes_solved >= node_limit:
                return outcome(SolveStatus.TIME_LIMIT, incumbent, inc_obj,
                               open_bound(), nodes_solved, history)
            container = dive if dive else heap
            if not container:
                if incumbent is None:
                    return outcome(SolveStatus.INFEASIBLE, nodes=nodes_solved,
                                   history=history)
                log_state(inc_obj)
                final = outcome(SolveStatus.OPTIMAL, incumbent, inc_obj, inc_obj,
                                nodes_solved, history)
                report = audit_solution(problem, final.assignment)
                if not report.ok:
                    raise NumericalFailure(
                        f"incumbent failed the audit: {report.violations[:3]}")
                return final
            nxt = dive.pop() if dive else heapq.heappop(heap)
            if np.isfinite(inc_obj):
                bb = max(open_bound(), nxt.bound, inc_obj)
                if np.isfinite(inc_obj) and (bb - inc_obj) / max(abs(inc_obj), 1e-9) <= gap_tol:
                    log_state(bb)
                    final = outcome(SolveStatus.OPTIMAL, incumbent, inc_obj, bb,
                                    nodes_solved, history)
                    report = audit_solution(problem, final.assignment)
                    if not report.ok:
                        raise NumericalFailure(
                            f"incumbent failed the audit: {report.violations[:3]}")
                    return final
            if nxt.bound <= prune_cut():
                continue
            current = nxt
            break


def audit_solution(problem: AssociationProblem, assignment,
                   tol_scale: float = 1.0) -> AuditReport:
    """Independently re-check a solution against every constraint row.

    Accepts either a full binary variable vector or an
    :class:`AssociationSolution` (e.g. the baseline, which has no option
    variables).  Variable vectors are checked row by row against the sparse
    model plus the product identity G = x * g and the latency fixings;
    solutions are checked semantically (bandwidth, one option per pair, mode
    counts, minimum rate, backhaul, latency).  The objective is recomputed
    from the rate table, never taken from solver state.
    """
    violations: list[RowViolation] = []

    if isinstance(assignment, AssociationSolution):
        sol = assignment
        objective = sol.total_rate_bps
        _audit_semantic(problem, sol, violations)
    else:
        z = np.asarray(assignment, dtype=float)
        if len(z) != problem.n_cols:
            raise ValueError("assignment length mismatch")
        off = np.abs(z - np.round(z)).max() if len(z) else 0.0
        if off > 1e-6:
            violations.append(RowViolation(("binary",), float(off), LE, 0.0, float(off)))
        az = problem.a @ z
        for r, kind in enumerate(problem.row_kinds):
            lhs, sense, rhs = float(az[r]), int(problem.senses[r]), float(problem.rhs[r])
            tol = _row_tol(rhs) * tol_scale
            viol = 0.0
            if sense == LE:
                viol = lhs - rhs
            elif sense == GE:
                viol = rhs - lhs
            else:
                viol = abs(lhs - rhs)
            if viol > tol:
                violations.append(RowViolation(kind, lhs, sense, rhs, float(viol)))
        x = z[:problem.n_x]
        g = z[problem.g_offset:problem.gamma_offset]
        gamma = z[problem.gamma_offset:]
        t = np.arange(problem.n_g)
        t_user = t // problem.slots_per_user
        t_ap = problem.slot_to_j[t % problem.slots_per_user]
        prod = x[t_user * problem.n_aps + t_ap] * g
        bad = np.flatnonzero(np.abs(gamma - prod) > 1e-6)
        for tt in bad[:50]:
            violations.append(RowViolation(
                ("product", int(t_user[tt]), int(t_ap[tt])),
                float(gamma[tt]), 0, float(prod[tt]), float(abs(gamma[tt] - prod[tt]))))
        # latency fixings (the model encodes these as bounds, not rows)
        lat_bad = (problem.path_latency_ms[None, :] > problem.latency_budget_ms[:, None])
        x_mat = np.round(z[:problem.n_x]).reshape(problem.n_users, problem.n_aps)
        if Constraint.CPL in problem.flags:
            for i, j in zip(*np.nonzero(lat_bad & (x_mat > 0.5))):
                violations.append(RowViolation(
                    ("latency", int(i), int(j)),
                    float(problem.path_latency_ms[j]), LE,
                    float(problem.latency_budget_ms[i]),
                    float(problem.path_latency_ms[j] - problem.latency_budget_ms[i])))
        objective = float(problem.rate_bps[:, problem.slot_to_j, problem.slot_to_k]
                          .reshape(problem.n_users, -1).ravel() @ gamma)

    max_v = max((v.violation for v in violations), default=0.0)
    return AuditReport(ok=not violations, violations=violations,
                       objective_bps=objective, max_violation=max_v)


def _audit_semantic(problem: AssociationProblem, sol: AssociationSolution,
                    violations: list) -> None:
    p = problem
    bw_used = np.zeros(p.n_aps)
    for i, j in zip(*np.nonzero(sol.option_choice >= 0)):
        bw_used[j] += p.option_bw_hz[j, sol.option_choice[i, j]]
    use_opts = (sol.option_choice >= 0).any()
    if use_opts:
        for j in np.flatnonzero(bw_used > p.carrier_bw_hz + 1e-3):
            violations.append(RowViolation(("bw_cap", int(j)), float(bw_used[j]), LE,
                                           float(p.carrier_bw_hz[j]),
                                           float(bw_used[j] - p.carrier_bw_hz[j])))
    counts = sol.x.sum(axis=1)
    for i in range(p.n_users):
        if p.dc_mode is DcMode.ANY_DC and counts[i] != 2:
            violations.append(RowViolation(("mode_total", i), float(counts[i]), 0, 2.0,
                                           abs(float(counts[i]) - 2.0)))
        elif p.dc_mode is DcMode.MCSC:
            n_mc_att = sol.x[i, :p.n_mc].sum()
            n_sc_att = sol.x[i, p.n_mc:].sum()
            if n_mc_att != 1:
                violations.append(RowViolation(("mode_mc", i), float(n_mc_att), 0, 1.0,
                                               abs(float(n_mc_att) - 1.0)))
            if n_sc_att > 1:
                violations.append(RowViolation(("mode_sc", i), float(n_sc_att), LE, 1.0,
                                               float(n_sc_att) - 1.0))
        elif p.dc_mode is DcMode.SA and counts[i] > 1:
            violations.append(RowViolation(("mode_total", i), float(counts[i]), LE, 1.0,
                                           float(counts[i]) - 1.0))
    if Constraint.MRT in p.flags:
        rates = sol.user_rate_bps
        for i in np.flatnonzero(rates < p.min_rate_bps - 1e-3):
            violations.append(RowViolation(("mrt", int(i)), float(rates[i]), GE,
                                           float(p.min_rate_bps[i]),
                                           float(p.min_rate_bps[i] - rates[i])))
    if Constraint.CB in p.flags:
        demand = sol.ap_backhaul_demand_bps(p.n_mc, p.sc_parent)
        for j in range(p.n_aps):
            cap = p.capacity_bps[j]
            tol = _row_tol(cap / MBPS) * MBPS
            if demand[j] > cap + tol:
                violations.append(RowViolation(
                    ("cb_mc" if j < p.n_mc else "cb_sc", int(j)),
                    float(demand[j]), LE, float(cap), float(demand[j] - cap)))
    if Constraint.CPL in p.flags:
        for i, j in zip(*np.nonzero(sol.x)):
            if p.path_latency_ms[j] > p.latency_budget_ms[i]:
                violations.append(RowViolation(
                    ("latency", int(i), int(j)), float(p.path_latency_ms[j]), LE,
                    float(p.latency_budget_ms[i]),
                    float(p.path_latency_ms[j] - p.latency_budget_ms[i])))


def solve_relaxation(problem: AssociationProblem, **kw):
    """LP relaxation of the full model (binaries relaxed to [0, 1])."""
    return solve_lp(problem.to_linear_program(), **kw)
