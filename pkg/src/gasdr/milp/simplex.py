"""Dense bounded-variable simplex.

Rows are equilibrated and given one logical (slack) column each, so every
constraint reads ``a.x + s = b`` with the relation carried by the slack's
bounds (``<=``: s >= 0, ``>=``: s <= 0, ``=``: s = 0). The slack basis is
always a valid starting basis; phase 1 minimizes the total bound violation of
the basic variables (composite simplex), so no artificial columns are needed
and any basis, not only the slack one, can be used as a starting point.

Two drivers share the tableau:

* the primal simplex (phase 1 then phase 2), Dantzig pricing with a switch to
  Bland's rule after a run of degenerate pivots;
* the dual simplex, used when a previously optimal basis is reloaded after
  bound changes (branch-and-bound children, fixings). If the reloaded basis is
  not dual feasible, or the dual stalls, the primal driver takes over.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dger
from scipy.sparse.linalg import splu

from ..errors import SolverError
from .model import CompiledModel

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 80
CONFIRM_AFTER = 25
BLAND_AFTER = 30


class Basis:
    """An optimal basis, optionally with the tableau it was reached with.

    ``tableau`` lets a re-solve skip the refactorization; holders may drop it
    (set it to ``None``) at any time to release memory.
    """

    __slots__ = ("head", "at_upper", "tableau", "pivots")

    def __init__(self, head, at_upper, tableau=None, pivots=0):
        self.head = head  # column index basic in each row
        self.at_upper = at_upper  # nonbasic-at-upper flags over all columns
        self.tableau = tableau  # B^-1 [M | b], read-only once stored
        self.pivots = pivots  # pivots applied to ``tableau`` since its factorization


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    basis: Basis | None = None
    iterations: int = 0


class BoundedSimplex:
    """Reusable LP engine for one constraint matrix with varying bounds."""

    def __init__(self, cm: CompiledModel, max_iter: int | None = None):
        A = cm.A.toarray()
        m, n = A.shape
        scale = np.abs(A).max(axis=1, initial=0.0)
        scale[scale == 0] = 1.0
        self.m, self.n, self.N = m, n, n + m
        self.b = cm.rhs / scale
        self.Mb = np.hstack([A / scale[:, None], np.eye(m), self.b[:, None]])
        self.M = self.Mb[:, :-1]
        self.M_csc = sp.csc_matrix(self.M)
        self.C = np.concatenate([cm.c, np.zeros(m)])
        self.c0 = cm.c0
        self.slack_lo = np.where(cm.senses > 0, -np.inf, 0.0)
        self.slack_hi = np.where(cm.senses < 0, np.inf, 0.0)
        self.lb0, self.ub0 = cm.lb, cm.ub
        self.max_iter = max_iter or 50 * (self.N + 10)

    # -- public ------------------------------------------------------------
    def solve(self, lb=None, ub=None, basis: Basis | None = None, keep_tableau=False) -> LPResult:
        lb = self.lb0 if lb is None else np.asarray(lb, dtype=float)
        ub = self.ub0 if ub is None else np.asarray(ub, dtype=float)
        self.L = np.concatenate([lb, self.slack_lo])
        self.U = np.concatenate([ub, self.slack_hi])
        if np.any(self.L > self.U + PRIMAL_TOL):
            return LPResult(INFEASIBLE, None, np.inf)
        self.fixed = self.U - self.L <= 0.0
        self.iterations = 0
        if basis is not None:
            try:
                self._load(basis.head.copy(), basis.at_upper.copy(), basis)
                status = self._dual()
            except SolverError:
                status = "restart"
            if status == "restart":
                self._load(np.arange(self.n, self.N), np.zeros(self.N, dtype=bool))
            elif status == INFEASIBLE:
                return LPResult(INFEASIBLE, None, np.inf, iterations=self.iterations)
        else:
            self._load(np.arange(self.n, self.N), np.zeros(self.N, dtype=bool))
        status = self._primal()
        if status != OPTIMAL:
            return LPResult(status, None, -np.inf if status == UNBOUNDED else np.inf,
                            iterations=self.iterations)
        x = self.x[: self.n].copy()
        # nonbasic structurals sit exactly on a bound; basics may carry round-off
        x = np.minimum(np.maximum(x, self.L[: self.n]), self.U[: self.n])
        obj = float(self.C[: self.n] @ x + self.c0)
        snap = self.T if keep_tableau else None
        out = Basis(self.head.copy(), self.at_upper.copy(), snap, self.pivots)
        return LPResult(OPTIMAL, x, obj, out, self.iterations)

    # -- basis handling ------------------------------------------------------
    def _load(self, head, at_upper, snapshot=None):
        self.head = head
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[head] = True
        if self.is_basic.sum() != self.m:
            raise SolverError("basis has repeated columns")
        L, U = self.L, self.U
        at_upper = at_upper & np.isfinite(U)
        at_upper |= ~np.isfinite(L) & np.isfinite(U)
        at_upper &= ~self.is_basic
        self.at_upper = at_upper
        x = np.where(at_upper, U, np.where(np.isfinite(L), L, 0.0))
        self.x = np.where(self.is_basic, 0.0, x)
        tab = snapshot.tableau if snapshot is not None else None
        if tab is not None and snapshot.pivots < REFACTOR_EVERY:
            self.T = tab.copy()
            self.pivots = snapshot.pivots
            self._update_basics()
        else:
            self._refactor()

    def _update_basics(self):
        nb = ~self.is_basic
        self.x[self.head] = self.T[:, -1] - self.T[:, :-1][:, nb] @ self.x[nb]

    def _refactor(self):
        if self.m == 0:
            self.T = np.zeros((0, self.N + 1))
            self.pivots = 0
            return
        # the basis is sparse (dynamics rows plus slacks); a sparse LU is much
        # cheaper than a dense solve at the sizes branch-and-bound sees
        try:
            lu = splu(self.M_csc[:, self.head])
        except RuntimeError as exc:
            raise SolverError(f"singular basis matrix ({self.m} rows): {exc}") from None
        sol = np.ascontiguousarray(lu.solve(self.Mb))
        if not np.all(np.isfinite(sol)):
            raise SolverError("basis factorization produced non-finite values")
        self.T = sol
        self.pivots = 0
        self._update_basics()

    def _pivot(self, r, j, leaving_value, leaving_at_upper):
        k = self.head[r]
        col = self.T[:, j].copy()
        piv = col[r]
        self.T[r] /= piv
        col[r] = 0.0
        # in-place rank-1 update T -= col * row; T.T is the Fortran view BLAS wants
        out = dger(-1.0, self.T[r].copy(), col, a=self.T.T, overwrite_a=1)
        if not np.shares_memory(out, self.T):
            self.T = out.T
        self.head[r] = j
        self.is_basic[j] = True
        self.is_basic[k] = False
        self.at_upper[j] = False
        self.at_upper[k] = leaving_at_upper
        self.x[k] = leaving_value
        self.pivots += 1

    def _tol(self, bound):
        return PRIMAL_TOL * (1.0 + np.abs(np.where(np.isfinite(bound), bound, 0.0)))

    def _reduced_costs(self, costs_basic, costs_all=None):
        prod = costs_basic @ self.T[:, :-1]
        d = -prod if costs_all is None else costs_all - prod
        d[self.head] = 0.0
        return d

    # -- primal ---------------------------------------------------------------
    def _primal(self) -> str:
        degenerate = 0
        d2 = None  # phase-2 reduced costs, updated per pivot until the next refactor
        while True:
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise SolverError(f"simplex iteration limit {self.max_iter} reached")
            if self.pivots >= REFACTOR_EVERY:
                self._refactor()
                d2 = None
            head = self.head
            xB, LB, UB = self.x[head], self.L[head], self.U[head]
            below = xB < LB - self._tol(LB)
            above = xB > UB + self._tol(UB)
            phase1 = bool(below.any() or above.any())
            if phase1:
                d = self._reduced_costs(above.astype(float) - below.astype(float))
                d2 = None
            else:
                if d2 is None:
                    d2 = self._reduced_costs(self.C[head], self.C)
                d = d2

            j, direction = self._choose_entering(d, bland=degenerate > BLAND_AFTER)
            if j < 0:
                if self.pivots >= CONFIRM_AFTER and not phase1:
                    # confirm optimality on a fresh factorization
                    self._refactor()
                    d2 = None
                    xB = self.x[self.head]
                    if np.all(xB >= LB - self._tol(LB)) and np.all(xB <= UB + self._tol(UB)):
                        return OPTIMAL
                    continue
                return INFEASIBLE if phase1 else OPTIMAL

            rate = -direction * self.T[:, j]
            t_rows = np.full(self.m, np.inf)
            target = np.full(self.m, np.nan)
            inc = rate > PIVOT_TOL
            dec = rate < -PIVOT_TOL
            # increasing basics stop at the upper bound, or at the lower bound
            # if they are currently below it (phase 1: becomes feasible)
            inc_tgt = np.where(below, LB, np.where(above, np.inf, UB))
            dec_tgt = np.where(above, UB, np.where(below, -np.inf, LB))
            target[inc] = inc_tgt[inc]
            target[dec] = dec_tgt[dec]
            moving = (inc | dec) & np.isfinite(target)
            t_rows[moving] = np.maximum((target[moving] - xB[moving]) / rate[moving], 0.0)
            t_min = t_rows.min() if self.m else np.inf
            span = self.U[j] - self.L[j]
            t_flip = span if np.isfinite(span) else np.inf

            if t_flip <= t_min:
                if not np.isfinite(t_flip):
                    if phase1:
                        raise SolverError("phase-1 ray without bound: numerical trouble")
                    return UNBOUNDED
                self.x[j] = self.U[j] if direction > 0 else self.L[j]
                self.at_upper[j] = direction > 0
                self.x[head] = xB + rate * t_flip
                degenerate = 0
                continue

            ties = np.flatnonzero(t_rows <= t_min + 1e-12 * (1.0 + t_min))
            if degenerate > BLAND_AFTER:
                r = ties[np.argmin(head[ties])]
            else:
                r = ties[np.argmax(np.abs(rate[ties]))]
            leaving_value = target[r]
            leaving_up = bool(above[r]) if dec[r] else not bool(below[r])
            self.x[head] = xB + rate * t_min
            self.x[j] = self.x[j] + direction * t_min
            entering_value = self.x[j]
            if d2 is not None:
                d2 = _price_update(d2, self.T[r, :-1], j)
            self._pivot(r, j, leaving_value, leaving_up)
            self.x[j] = entering_value
            degenerate = degenerate + 1 if t_min <= 1e-12 else 0

    def _choose_entering(self, d, bland=False):
        nb = ~self.is_basic & ~self.fixed
        free = nb & ~np.isfinite(self.L) & ~np.isfinite(self.U)
        up_ok = nb & ~self.at_upper & np.isfinite(self.L) & (d < -DUAL_TOL)
        down_ok = nb & self.at_upper & (d > DUAL_TOL)
        free_ok = free & (np.abs(d) > DUAL_TOL)
        eligible = up_ok | down_ok | free_ok
        if not eligible.any():
            return -1, 0
        if bland:
            j = int(np.flatnonzero(eligible)[0])
        else:
            j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
        return j, (1 if d[j] < 0 else -1)

    # -- dual -------------------------------------------------------------------
    def _dual(self) -> str:
        d = self._reduced_costs(self.C[self.head], self.C)
        nb = ~self.is_basic & ~self.fixed
        wrong_low = nb & ~self.at_upper & np.isfinite(self.L) & (d < -DUAL_TOL)
        wrong_up = nb & self.at_upper & (d > DUAL_TOL)
        free_bad = nb & ~np.isfinite(self.L) & ~np.isfinite(self.U) & (np.abs(d) > DUAL_TOL)
        if free_bad.any() or (wrong_low & ~np.isfinite(self.U)).any() or (wrong_up & ~np.isfinite(self.L)).any():
            return "restart"
        if wrong_low.any() or wrong_up.any():
            self.at_upper[wrong_low] = True
            self.at_upper[wrong_up] = False
            self.x[wrong_low] = self.U[wrong_low]
            self.x[wrong_up] = self.L[wrong_up]
            self._refactor()
        limit = self.iterations + 10 * (self.m + 10)
        while True:
            self.iterations += 1
            if self.iterations > limit:
                return "restart"
            if self.pivots >= REFACTOR_EVERY:
                self._refactor()
                d = self._reduced_costs(self.C[self.head], self.C)
            head = self.head
            xB, LB, UB = self.x[head], self.L[head], self.U[head]
            lo_v = np.where(xB < LB - self._tol(LB), LB - xB, 0.0)
            hi_v = np.where(xB > UB + self._tol(UB), xB - UB, 0.0)
            viol = np.maximum(lo_v, hi_v)
            if self.m == 0 or viol.max() <= 0.0:
                return OPTIMAL
            r = int(np.argmax(viol))
            increase = lo_v[r] > 0
            row = self.T[r, :-1]
            nb = ~self.is_basic & ~self.fixed
            free = nb & ~np.isfinite(self.L) & ~np.isfinite(self.U)
            lower_nb = nb & ~self.at_upper & ~free
            upper_nb = nb & self.at_upper
            if increase:
                elig = (lower_nb & (row < -PIVOT_TOL)) | (upper_nb & (row > PIVOT_TOL))
            else:
                elig = (lower_nb & (row > PIVOT_TOL)) | (upper_nb & (row < -PIVOT_TOL))
            elig |= free & (np.abs(row) > PIVOT_TOL)
            if not elig.any():
                return INFEASIBLE
            cand = np.flatnonzero(elig)
            ratios = np.abs(d[cand]) / np.abs(row[cand])
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12 * (1.0 + best)]
            j = int(ties[np.argmax(np.abs(row[ties]))])
            target = LB[r] if increase else UB[r]
            step = (xB[r] - target) / row[j]
            self.x[head] = xB - self.T[:, j] * step
            entering_value = self.x[j] + step
            d = _price_update(d, row, j)
            self._pivot(r, j, target, not increase)
            self.x[j] = entering_value


def _price_update(d, row, j):
    """Reduced costs after pivoting column ``j`` into the basis on tableau ``row``.

    ``row`` is the pivot row before the pivot; the leaving column has a 1 in it,
    so it picks up ``-d_j / row_j`` and the entering column drops to zero.
    """
    out = d - (d[j] / row[j]) * row
    out[j] = 0.0
    return out
