"""Bounded-variable revised simplex over sparse columns.

Maximization form:

    max  c @ z    s.t.    A z  (<=, ==, >=)  b,    lower <= z <= upper

One slack and one artificial column are appended per row.  The basis is
factorized with SuperLU and kept current through product-form eta updates,
with a periodic refactorization that also recomputes the basic values to
bound drift.  The cold path is a textbook two-phase primal simplex (Dantzig
pricing, switching to Bland's rule under degenerate stalls); the warm path
reoptimizes a dual-feasible basis after bound changes with the dual simplex,
which is what branch and bound uses on child nodes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

LE, EQ, GE = -1, 0, 1

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
DEGENERATE_STREAK_LIMIT = 200
DUAL_STALL_LIMIT = 1000
REFACTOR_EVERY = 64


class NumericalFailure(RuntimeError):
    """The LP core could not certify a result within its iteration budget."""


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """max c @ z subject to sparse rows with senses and variable bounds."""

    c: np.ndarray
    a: sp.csr_matrix
    senses: np.ndarray   # per-row LE / EQ / GE
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    @property
    def n_cols(self) -> int:
        return self.a.shape[1]


@dataclass
class Basis:
    """Snapshot of a simplex basis, reusable to warm-start a related solve."""

    basic: np.ndarray   # (m,) column indices into the extended matrix
    vstat: np.ndarray   # (n_ext,) BASIC / AT_LOWER / AT_UPPER

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.vstat.copy())


@dataclass
class LpResult:
    status: LpStatus
    objective: float
    x: np.ndarray | None
    iterations: int
    basis: Basis | None


class _Factor:
    """SuperLU factorization of the basis plus product-form eta updates."""

    def __init__(self, a_ext: sp.csc_matrix, basic: np.ndarray):
        self.lu = splu(a_ext[:, basic].tocsc())
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for p, alpha in self.etas:
            theta = w[p] / alpha[p]
            if theta != 0.0:
                w = w - theta * alpha
            w[p] = theta
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        w = v.copy()
        for p, alpha in reversed(self.etas):
            wp = (w[p] - alpha @ w + alpha[p] * w[p]) / alpha[p]
            w[p] = wp
        return self.lu.solve(w, trans="T")

    def push(self, p: int, alpha: np.ndarray) -> None:
        self.etas.append((p, alpha))


class _Simplex:
    """One bounded-variable simplex instance over the extended column space.

    Columns: [structural | slack per row | artificial per row].  Slack bounds
    encode the row sense; artificials are fixed to zero except while phase 1
    is repairing an infeasible cold start.
    """

    def __init__(self, lp: LinearProgram, *, feas_tol: float = FEAS_TOL,
                 opt_tol: float = OPT_TOL, max_iter: int | None = None,
                 time_limit_s: float | None = None):
        m, n = lp.n_rows, lp.n_cols
        self.m, self.n = m, n
        self.lp = lp
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.max_iter = max_iter if max_iter is not None else 20000 + 20 * m
        self.deadline = None if time_limit_s is None else time.perf_counter() + time_limit_s

        eye = sp.identity(m, format="csc")
        self.a_ext = sp.hstack([lp.a.tocsc(), eye, eye], format="csc")
        self.n_ext = n + 2 * m
        self.slack0 = n
        self.art0 = n + m

        self.lower = np.concatenate([lp.lower, np.empty(m), np.zeros(m)])
        self.upper = np.concatenate([lp.upper, np.empty(m), np.zeros(m)])
        sl = slice(n, n + m)
        self.lower[sl] = np.where(lp.senses == GE, -np.inf, 0.0)
        self.upper[sl] = np.where(lp.senses == LE, np.inf, 0.0)

        self.c = np.zeros(self.n_ext)
        self.c[:n] = lp.c

        self.vstat = np.empty(self.n_ext, dtype=np.int8)
        self.basic = np.zeros(m, dtype=np.int64)
        self.x_basic = np.zeros(m)
        self.vals = np.zeros(self.n_ext)
        self.factor: _Factor | None = None
        self.iterations = 0

    # -- column / value helpers -------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        a = self.a_ext
        start, end = a.indptr[j], a.indptr[j + 1]
        col[a.indices[start:end]] = a.data[start:end]
        return col

    def _bound_value(self, j: int) -> float:
        return self.lower[j] if self.vstat[j] == AT_LOWER else self.upper[j]

    def _nonbasic_values(self) -> np.ndarray:
        vals = np.where(self.vstat == AT_UPPER, self.upper, self.lower)
        vals[~np.isfinite(vals)] = 0.0
        vals[self.vstat == BASIC] = 0.0
        return vals

    def _refactorize(self) -> None:
        try:
            self.factor = _Factor(self.a_ext, self.basic)
        except RuntimeError as exc:  # singular basis
            raise NumericalFailure(f"basis factorization failed: {exc}") from exc
        vals = self._nonbasic_values()
        resid = np.asarray(self.lp.rhs, dtype=float) - self.a_ext @ vals
        self.x_basic = self.factor.ftran(resid)

    def _sync_vals(self) -> None:
        self.vals = self._nonbasic_values()
        self.vals[self.basic] = self.x_basic

    def objective(self) -> float:
        self._sync_vals()
        return float(self.c[:self.n] @ self.vals[:self.n])

    # -- cold start --------------------------------------------------------

    def cold_start(self) -> None:
        n, m = self.n, self.m
        self.vstat[:] = AT_LOWER
        finite_lower = np.isfinite(self.lower)
        self.vstat[~finite_lower] = AT_UPPER
        vals = self._nonbasic_values()
        resid = np.asarray(self.lp.rhs, dtype=float) - self.a_ext[:, :n] @ vals[:n]

        self.phase1_c = np.zeros(self.n_ext)
        for r in range(m):
            slack, art = self.slack0 + r, self.art0 + r
            s_ok = self.lower[slack] - self.feas_tol <= resid[r] <= self.upper[slack] + self.feas_tol
            if s_ok:
                self.basic[r] = slack
                self.vstat[slack] = BASIC
            else:
                self.basic[r] = art
                self.vstat[art] = BASIC
                if resid[r] >= 0:
                    self.upper[art] = np.inf
                    self.phase1_c[art] = -1.0
                else:
                    self.lower[art] = -np.inf
                    self.phase1_c[art] = 1.0
        self._refactorize()

    def warm_start(self, basis: Basis) -> None:
        if len(basis.basic) != self.m or len(basis.vstat) != self.n_ext:
            raise ValueError("warm basis shape mismatch")
        self.basic = basis.basic.copy()
        self.vstat = basis.vstat.copy()
        nonbasic = self.vstat != BASIC
        at_lower = nonbasic & (self.vstat == AT_LOWER) & ~np.isfinite(self.lower)
        self.vstat[at_lower] = AT_UPPER
        at_upper = nonbasic & (self.vstat == AT_UPPER) & ~np.isfinite(self.upper)
        self.vstat[at_upper] = AT_LOWER
        self._refactorize()

    # -- pricing -----------------------------------------------------------

    def _reduced_costs(self, c: np.ndarray) -> np.ndarray:
        y = self.factor.btran(c[self.basic])
        return c - self.a_ext.T @ y

    def _movable(self) -> np.ndarray:
        return self.upper - self.lower > self.feas_tol

    # -- primal simplex ----------------------------------------------------

    def primal(self, c: np.ndarray) -> LpStatus:
        """Run primal iterations to optimality for objective vector ``c``.

        Assumes the current basis is primal feasible (within tolerance).
        Returns OPTIMAL or UNBOUNDED.
        """
        degen_streak = 0
        bland = False
        movable = self._movable()
        while True:
            self._check_budget()
            d = self._reduced_costs(c)
            nonbasic = self.vstat != BASIC
            improve = np.where(self.vstat == AT_LOWER, d, -d)
            eligible = nonbasic & movable & (improve > self.opt_tol)
            if not eligible.any():
                return LpStatus.OPTIMAL
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                scores = np.where(eligible, improve, -np.inf)
                q = int(np.argmax(scores))
            direction = 1.0 if self.vstat[q] == AT_LOWER else -1.0
            alpha = self.factor.ftran(self._column(q))
            step, block = self._primal_ratio(q, direction, alpha, bland)
            if step is None:
                return LpStatus.UNBOUNDED
            self.iterations += 1
            if block == -1:  # bound flip, no basis change
                self.x_basic -= direction * step * alpha
                self.vstat[q] = AT_UPPER if self.vstat[q] == AT_LOWER else AT_LOWER
                degen_streak = 0
                continue
            if step <= self.feas_tol:
                degen_streak += 1
                if degen_streak > DEGENERATE_STREAK_LIMIT:
                    bland = True
            else:
                degen_streak = 0
                bland = False
            self._pivot(q, direction, step, block, alpha)

    def _primal_ratio(self, q: int, direction: float, alpha: np.ndarray,
                      bland: bool) -> tuple[float | None, int]:
        """Max step for entering ``q``; returns (step, blocking position).

        Blocking position -1 encodes a bound flip of the entering variable,
        None step means unbounded.
        """
        lb = self.lower[self.basic]
        ub = self.upper[self.basic]
        move = direction * alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            t_low = np.where(move > PIVOT_TOL, (self.x_basic - lb) / move, np.inf)
            t_up = np.where(move < -PIVOT_TOL, (ub - self.x_basic) / -move, np.inf)
        t = np.minimum(t_low, t_up)
        t = np.maximum(t, 0.0)  # tolerate slightly out-of-bound basics
        t_flip = self.upper[q] - self.lower[q]
        t_min = float(t.min()) if self.m else np.inf
        if not np.isfinite(min(t_min, t_flip)):
            return None, 0
        if t_flip <= t_min:
            return t_flip, -1
        candidates = np.flatnonzero(t <= t_min + self.feas_tol)
        if bland:
            block = int(candidates[np.argmin(self.basic[candidates])])
        else:
            block = int(candidates[np.argmax(np.abs(alpha[candidates]))])
        if abs(alpha[block]) < PIVOT_TOL:
            raise NumericalFailure("pivot element below tolerance")
        return max(t_min, 0.0), block

    def _pivot(self, q: int, direction: float, step: float, p: int,
               alpha: np.ndarray) -> None:
        leaving = int(self.basic[p])
        self.x_basic -= direction * step * alpha
        entering_value = self._bound_value(q) + direction * step
        move = direction * alpha[p]
        self.vstat[leaving] = AT_LOWER if move > 0 else AT_UPPER
        self.basic[p] = q
        self.vstat[q] = BASIC
        self.x_basic[p] = entering_value
        self.factor.push(p, alpha)
        if len(self.factor.etas) >= REFACTOR_EVERY:
            self._refactorize()

    # -- dual simplex ------------------------------------------------------

    def dual(self, c: np.ndarray) -> LpStatus:
        """Restore primal feasibility from a dual-feasible basis.

        Returns OPTIMAL once no basic variable violates its bounds (the
        caller should finish with a primal cleanup pass) or INFEASIBLE when a
        violated row admits no entering column.
        """
        stall = 0
        last_total = np.inf
        while True:
            self._check_budget()
            lb = self.lower[self.basic]
            ub = self.upper[self.basic]
            below = lb - self.x_basic
            above = self.x_basic - ub
            viol = np.maximum(np.maximum(below, above), 0.0)
            viol[~np.isfinite(viol)] = 0.0
            total = float(viol.sum())
            if total <= self.feas_tol * max(1, self.m):
                return LpStatus.OPTIMAL
            if total >= last_total - self.feas_tol:
                stall += 1
                if stall > DUAL_STALL_LIMIT:
                    raise NumericalFailure("dual simplex stalled")
            else:
                stall = 0
            last_total = total

            p = int(np.argmax(viol))
            pushing_to_lower = below[p] > above[p]
            target = lb[p] if pushing_to_lower else ub[p]

            e = np.zeros(self.m)
            e[p] = 1.0
            beta = self.factor.btran(e)
            row = self.a_ext.T @ beta
            d = self._reduced_costs(c)

            nonbasic = self.vstat != BASIC
            movable = self._movable()
            if pushing_to_lower:
                ok = (self.vstat == AT_LOWER) & (row < -PIVOT_TOL) \
                    | (self.vstat == AT_UPPER) & (row > PIVOT_TOL)
            else:
                ok = (self.vstat == AT_LOWER) & (row > PIVOT_TOL) \
                    | (self.vstat == AT_UPPER) & (row < -PIVOT_TOL)
            ok &= nonbasic & movable
            cand = np.flatnonzero(ok)
            if len(cand) == 0:
                return LpStatus.INFEASIBLE
            ratios = np.abs(d[cand] / row[cand])
            q = int(cand[np.argmin(ratios)])

            alpha = self.factor.ftran(self._column(q))
            if abs(alpha[p]) < PIVOT_TOL:
                self._refactorize()
                alpha = self.factor.ftran(self._column(q))
                if abs(alpha[p]) < PIVOT_TOL:
                    raise NumericalFailure("dual pivot element below tolerance")
            delta = (self.x_basic[p] - target) / alpha[p]
            leaving = int(self.basic[p])
            self.x_basic -= delta * alpha
            self.vstat[leaving] = AT_LOWER if pushing_to_lower else AT_UPPER
            entering_value = self._bound_value(q) + delta
            self.basic[p] = q
            self.vstat[q] = BASIC
            self.x_basic[p] = entering_value
            self.factor.push(p, alpha)
            self.iterations += 1
            if len(self.factor.etas) >= REFACTOR_EVERY:
                self._refactorize()

    # -- orchestration -----------------------------------------------------

    def _check_budget(self) -> None:
        if self.iterations > self.max_iter:
            raise NumericalFailure(f"iteration limit {self.max_iter} exceeded")
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise NumericalFailure("LP time budget exceeded")

    def _drive_out_artificials(self) -> None:
        for p in range(self.m):
            j = int(self.basic[p])
            if j < self.art0:
                continue
            e = np.zeros(self.m)
            e[p] = 1.0
            beta = self.factor.btran(e)
            row = self.a_ext.T @ beta
            row[self.art0:] = 0.0
            row[self.vstat == BASIC] = 0.0
            k = int(np.argmax(np.abs(row)))
            if abs(row[k]) < 1e-7:
                continue  # redundant row: artificial stays basic at zero
            alpha = self.factor.ftran(self._column(k))
            entering_value = self._bound_value(k)
            self.vstat[j] = AT_LOWER
            self.basic[p] = k
            self.vstat[k] = BASIC
            self.x_basic[p] = entering_value
            self.factor.push(p, alpha)
            if len(self.factor.etas) >= REFACTOR_EVERY:
                self._refactorize()

    def solve_cold(self) -> LpStatus:
        self.cold_start()
        if np.any(self.basic >= self.art0):
            status = self.primal(self.phase1_c)
            if status is LpStatus.UNBOUNDED:
                raise NumericalFailure("phase 1 reported unbounded")
            # total infeasibility = -(phase 1 objective) = sum of |artificial|
            self._sync_vals()
            infeas = -float(self.phase1_c @ self.vals)
            if infeas > 1e-6 * max(1.0, np.abs(self.lp.rhs).max(initial=1.0)):
                return LpStatus.INFEASIBLE
            self._drive_out_artificials()
        self.lower[self.art0:] = 0.0
        self.upper[self.art0:] = 0.0
        return self.primal(self.c)

    def solve_warm(self, basis: Basis) -> LpStatus:
        self.lower[self.art0:] = 0.0
        self.upper[self.art0:] = 0.0
        self.warm_start(basis)
        status = self.dual(self.c)
        if status is LpStatus.INFEASIBLE:
            return status
        return self.primal(self.c)

    def result(self, status: LpStatus) -> LpResult:
        if status is not LpStatus.OPTIMAL:
            return LpResult(status=status, objective=np.nan, x=None,
                            iterations=self.iterations, basis=None)
        self._sync_vals()
        x = self.vals[:self.n].copy()
        np.clip(x, self.lp.lower, self.lp.upper, out=x)
        return LpResult(status=status, objective=float(self.lp.c @ x), x=x,
                        iterations=self.iterations,
                        basis=Basis(self.basic.copy(), self.vstat.copy()))


def solve_lp(lp: LinearProgram, *, warm: Basis | None = None,
             feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL,
             max_iter: int | None = None,
             time_limit_s: float | None = None) -> LpResult:
    """Solve a bounded LP exactly (to tolerance); optionally warm-started.

    A warm basis must be dual feasible for the current objective (e.g. the
    optimal basis of the same LP with different variable bounds); otherwise
    the solve silently falls back to the cold two-phase path.
    """
    if warm is not None:
        core = _Simplex(lp, feas_tol=feas_tol, opt_tol=opt_tol,
                        max_iter=max_iter, time_limit_s=time_limit_s)
        try:
            status = core.solve_warm(warm)
            return core.result(status)
        except NumericalFailure:
            pass  # fall through to the cold path
    core = _Simplex(lp, feas_tol=feas_tol, opt_tol=opt_tol,
                    max_iter=max_iter, time_limit_s=time_limit_s)
    status = core.solve_cold()
    return core.result(status)
