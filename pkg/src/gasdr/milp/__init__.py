"""Mixed-integer linear models and an embedded branch-and-bound solver."""
from .bnb import (
    FEASIBILITY_TOL,
    FEASIBLE_TIME_LIMIT,
    INTEGRALITY_TOL,
    NO_INCUMBENT,
    MilpSolution,
    SolverOptions,
    relative_gap,
    solve_lp_relaxation,
    solve_milp,
)
from .model import BINARY, CONTINUOUS, MilpModel
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, BoundedSimplex

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "FEASIBILITY_TOL",
    "FEASIBLE_TIME_LIMIT",
    "INFEASIBLE",
    "INTEGRALITY_TOL",
    "NO_INCUMBENT",
    "OPTIMAL",
    "UNBOUNDED",
    "BoundedSimplex",
    "MilpModel",
    "MilpSolution",
    "SolverOptions",
    "relative_gap",
    "solve_lp_relaxation",
    "solve_milp",
]
