"""Best-first branch-and-bound over binary variables.

Node LPs come from one of two backends: the embedded dense simplex (warm
started from the parent's optimal basis through the dual simplex) or HiGHS
through :func:`scipy.optimize.linprog` for models whose dense tableau would
not fit in memory. Branching and node order are fixed so that a solve is a
deterministic function of the model and the options, as long as the wall-clock
``time_limit`` does not bind; use ``node_limit`` for reproducible truncation.
"""
from __future__ import annotations

import collections
import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..errors import SolverError
from .model import MilpModel
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, BoundedSimplex, LPResult

log = logging.getLogger(__name__)

FEASIBLE_TIME_LIMIT = "feasible_time_limit"
NO_INCUMBENT = "limit_no_incumbent"

FEASIBILITY_TOL = 1e-7
INTEGRALITY_TOL = 1e-6
DENSE_CELL_LIMIT = 2_500_000
SNAPSHOT_BYTES = 256 * 2**20


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-6
    time_limit: float | None = None  # seconds of wall clock
    node_limit: int | None = None
    lp_backend: str = "auto"  # "simplex", "highs" or "auto"
    dive: bool = True
    rounding_every: int | None = None  # None: every node (simplex), every 10 (highs)


@dataclass
class MilpSolution:
    status: str
    incumbent: np.ndarray | None
    objective_value: float
    best_bound: float
    gap: float
    nodes: int = 0
    elapsed: float = 0.0
    backend: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def has_incumbent(self) -> bool:
        return self.incumbent is not None


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    if not math.isfinite(bound):
        return math.inf
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


# -- LP backends ------------------------------------------------------------

class _HighsLP:
    """Cold-start LP solves through HiGHS dual simplex."""

    def __init__(self, cm):
        self.cm = cm
        A = sp.csr_matrix(cm.A)
        le, ge, eq = cm.senses < 0, cm.senses > 0, cm.senses == 0
        self.A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
        self.b_ub = np.concatenate([cm.rhs[le], -cm.rhs[ge]]) if self.A_ub is not None else None
        self.A_eq = A[eq] if eq.any() else None
        self.b_eq = cm.rhs[eq] if eq.any() else None

    def solve(self, lb, ub, basis=None, keep_tableau=False) -> LPResult:
        bounds = np.column_stack([lb, ub])
        res = linprog(
            self.cm.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
            bounds=bounds, method="highs-ds",
            options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
        )
        if res.status == 0:
            x = np.minimum(np.maximum(res.x, lb), ub)
            return LPResult(OPTIMAL, x, float(self.cm.c @ x + self.cm.c0), None, int(res.nit))
        if res.status == 2:
            return LPResult(INFEASIBLE, None, math.inf)
        if res.status == 3:
            return LPResult(UNBOUNDED, None, -math.inf)
        raise SolverError(f"HiGHS LP failed: {res.message}")


class _SimplexLP:
    def __init__(self, cm):
        self.engine = BoundedSimplex(cm)

    def solve(self, lb, ub, basis=None, keep_tableau=False) -> LPResult:
        return self.engine.solve(lb, ub, basis, keep_tableau)


def _make_backend(model: MilpModel, name: str):
    cm = model.compile()
    if name == "auto":
        m, n = cm.A.shape
        name = "simplex" if m * (n + m) <= DENSE_CELL_LIMIT else "highs"
    if name == "simplex":
        return name, _SimplexLP(cm)
    if name == "highs":
        return name, _HighsLP(cm)
    raise ValueError(f"unknown LP backend {name!r}")


def solve_lp_relaxation(model: MilpModel, lp_backend: str = "simplex") -> MilpSolution:
    """Solve the model with binaries relaxed to their bounds."""
    t0 = time.monotonic()
    name, lp = _make_backend(model, lp_backend)
    cm = model.compile()
    res = lp.solve(cm.lb, cm.ub)
    elapsed = time.monotonic() - t0
    if res.status == OPTIMAL:
        return MilpSolution(OPTIMAL, res.x, res.objective, res.objective, 0.0, 1, elapsed, name)
    value = math.inf if res.status == INFEASIBLE else -math.inf
    return MilpSolution(res.status, None, value, value, math.inf, 1, elapsed, name)


# -- branch and bound ---------------------------------------------------------

@dataclass
class _Node:
    fixes: dict  # variable index -> 0.0 / 1.0
    basis: object
    depth: int


class _Search:
    def __init__(self, model: MilpModel, options: SolverOptions):
        self.model = model
        self.opt = options
        self.cm = model.compile()
        self.bins = self.cm.binaries
        self.backend_name, self.lp = _make_backend(model, options.lp_backend)
        self.t0 = time.monotonic()
        self.best_x = None
        self.best_obj = math.inf
        self.nodes = 0
        self.history = []
        every = options.rounding_every
        self.rounding_every = every if every is not None else (1 if self.backend_name == "simplex" else 10)
        self.tried = set()
        m, n = self.cm.A.shape
        self.max_snapshots = max(2, SNAPSHOT_BYTES // (8 * (m + 1) * (n + m + 1)))
        self.snapshots = collections.deque()

    def keep_snapshot(self, basis):
        # tableaux of recently processed nodes let their children skip refactoring
        if basis is None or basis.tableau is None:
            return
        self.snapshots.append(basis)
        while len(self.snapshots) > self.max_snapshots:
            self.snapshots.popleft().tableau = None

    # bookkeeping
    def elapsed(self):
        return time.monotonic() - self.t0

    def out_of_time(self):
        tl = self.opt.time_limit
        return tl is not None and self.elapsed() >= tl

    def prunable(self, bound):
        if self.best_x is None:
            return False
        return self.best_obj - bound <= self.opt.gap_tol * max(1.0, abs(self.best_obj))

    def bounds_with(self, fixes):
        lb, ub = self.cm.lb.copy(), self.cm.ub.copy()
        if fixes:
            idx = np.fromiter(fixes.keys(), dtype=np.int64)
            val = np.fromiter(fixes.values(), dtype=float)
            lb[idx] = val
            ub[idx] = val
        return lb, ub

    # incumbents
    def try_binaries(self, values, basis=None, source=""):
        """Fix every binary to ``values`` and complete the continuous part by LP."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.bins.shape or np.any((values != 0) & (values != 1)):
            raise ValueError("binary start must give 0/1 for every binary variable")
        key = values.astype(np.int8).tobytes()
        if key in self.tried:
            return False
        self.tried.add(key)
        lb, ub = self.cm.lb.copy(), self.cm.ub.copy()
        if np.any(values < lb[self.bins]) or np.any(values > ub[self.bins]):
            return False
        lb[self.bins] = values
        ub[self.bins] = values
        res = self.lp.solve(lb, ub, basis)
        if res.status != OPTIMAL:
            return False
        x = res.x.copy()
        x[self.bins] = values
        if self.model.max_violation(x) > FEASIBILITY_TOL:
            log.debug("discarding %s candidate: violation %.3g", source, self.model.max_violation(x))
            return False
        obj = self.model.evaluate(x)
        if obj < self.best_obj - 1e-12:
            self.best_obj = obj
            self.best_x = x
            self.history.append((self.nodes, round(self.elapsed(), 3), obj, source))
            return True
        return False

    def try_point(self, x, source="start"):
        """Accept a complete assignment as incumbent if it is feasible and integral."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cm.c.size,):
            raise ValueError("full start must assign every variable")
        v = x[self.bins]
        if np.any((v != 0) & (v != 1)) or self.model.max_violation(x) > FEASIBILITY_TOL:
            return False
        self.tried.add(v.astype(np.int8).tobytes())
        obj = self.model.evaluate(x)
        if obj < self.best_obj - 1e-12:
            self.best_obj = obj
            self.best_x = x.copy()
            self.history.append((self.nodes, round(self.elapsed(), 3), obj, source))
            return True
        return False

    def fractionality(self, x):
        v = x[self.bins]
        return np.abs(v - np.round(v))

    def dive(self, res, fixes):
        """Fractional diving: repeatedly fix the least fractional binaries."""
        fixes = dict(fixes)
        for _ in range(len(self.bins) + 1):
            if self.out_of_time():
                return
            frac = self.fractionality(res.x)
            open_ = np.flatnonzero(frac > INTEGRALITY_TOL)
            if open_.size == 0:
                self.try_binaries(np.round(res.x[self.bins]), res.basis, "dive")
                return
            if self.prunable(res.objective):
                return
            k = max(1, open_.size // 8)
            order = open_[np.lexsort((open_, frac[open_]))][:k]
            for pos in order:
                fixes[int(self.bins[pos])] = float(np.round(res.x[self.bins[pos]]))
            lb, ub = self.bounds_with(fixes)
            nxt = self.lp.solve(lb, ub, res.basis)
            if nxt.status != OPTIMAL and k == 1:
                pos = order[0]
                fixes[int(self.bins[pos])] = 1.0 - fixes[int(self.bins[pos])]
                lb, ub = self.bounds_with(fixes)
                nxt = self.lp.solve(lb, ub, res.basis)
            if nxt.status != OPTIMAL:
                return
            res = nxt

    def run(self, starts) -> MilpSolution:
        for s in starts:
            if len(s) == self.cm.c.size and len(s) != len(self.bins):
                self.try_point(s)
            else:
                self.try_binaries(s, source="start")

        heap = []
        counter = 0
        heapq.heappush(heap, (-math.inf, counter, _Node({}, None, 0)))
        root_done = False
        status = None
        while heap:
            bound = heap[0][0]
            if self.best_x is not None and self.prunable(bound):
                status = OPTIMAL
                break
            if self.out_of_time() or (self.opt.node_limit is not None and self.nodes >= self.opt.node_limit):
                status = FEASIBLE_TIME_LIMIT if self.best_x is not None else NO_INCUMBENT
                break
            bound, _, node = heapq.heappop(heap)
            lb, ub = self.bounds_with(node.fixes)
            res = self.lp.solve(lb, ub, node.basis, keep_tableau=True)
            self.nodes += 1
            if res.status == UNBOUNDED:
                if not root_done:
                    return self._finish(UNBOUNDED, -math.inf)
                raise SolverError("node LP unbounded below a bounded root")
            if res.status == INFEASIBLE or self.prunable(res.objective):
                root_done = True
                continue
            frac = self.fractionality(res.x)
            if frac.max(initial=0.0) <= INTEGRALITY_TOL:
                self.try_binaries(np.round(res.x[self.bins]), res.basis, "node")
                root_done = True
                continue
            if not root_done or (self.rounding_every and self.nodes % self.rounding_every == 0):
                self.try_binaries(np.round(res.x[self.bins]), res.basis, "rounding")
            if not root_done and self.opt.dive:
                self.dive(res, node.fixes)
                if self.prunable(res.objective):
                    root_done = True
                    continue
            root_done = True
            self.keep_snapshot(res.basis)

            # most fractional, ties to the lowest variable index
            score = np.minimum(frac, 1.0 - frac)
            pos = int(np.argmax(score))
            var = int(self.bins[pos])
            for value in (0.0, 1.0):
                counter += 1
                child = dict(node.fixes)
                child[var] = value
                heapq.heappush(heap, (res.objective, counter, _Node(child, res.basis, node.depth + 1)))

        if status is None:
            # tree exhausted
            if self.best_x is None:
                return self._finish(INFEASIBLE, math.inf)
            return self._finish(OPTIMAL, self.best_obj)
        if status == OPTIMAL:
            return self._finish(OPTIMAL, min(heap[0][0], self.best_obj))
        open_bound = heap[0][0] if heap else self.best_obj
        return self._finish(status, min(open_bound, self.best_obj))

    def _finish(self, status, bound):
        if status in (INFEASIBLE, UNBOUNDED, NO_INCUMBENT):
            obj = math.inf if status != UNBOUNDED else -math.inf
            return MilpSolution(status, None, obj, bound, math.inf, self.nodes, self.elapsed(),
                                self.backend_name, self.history)
        gap = relative_gap(self.best_obj, bound)
        return MilpSolution(status, self.best_x, self.best_obj, bound, gap, self.nodes,
                            self.elapsed(), self.backend_name, self.history)


def solve_milp(model: MilpModel, options: SolverOptions | None = None,
               starts: Sequence[Sequence[float]] = ()) -> MilpSolution:
    """Minimize ``model`` exactly (up to ``gap_tol``) or until a limit is hit.

    ``starts`` are optional 0/1 vectors over ``model.binary_indices``, each
    completed by an LP over the continuous variables, or complete assignments
    of every variable, which are only checked. Feasible starts seed the
    incumbent.
    """
    options = options or SolverOptions()
    search = _Search(model, options)
    if len(search.bins) == 0:
        sol = solve_lp_relaxation(model, search.backend_name)
        return sol
    return search.run(starts)
