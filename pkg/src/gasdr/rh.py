"""Receding-horizon driver.

The horizon is cut into back-to-back windows. Each window is solved as its
own MILP starting from the temperatures the previous window ends at
(re-simulated from its schedule, never read from the MILP), and the window
schedules and trajectories are stitched into full-horizon results.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, SolverError, ValidationError
from .milp import FEASIBLE_TIME_LIMIT, OPTIMAL, SolverOptions, solve_milp
from .ocp import (
    CENTRALIZED,
    DECENTRALIZED,
    SolveOutcome,
    Type1Config,
    Type2Config,
    build_centralized,
    build_decentralized,
    compute_deviation,
    compute_gas,
    default_starts,
    extract_outcome,
    policy_objective,
)
from .thermal import AmbientSeries, Grid, HouseParams, ThermalCoefficients

__all__ = ["RhPlan", "plan_windows", "run_receding_horizon", "window_gap_mean"]


@dataclass(frozen=True)
class RhPlan:
    windows: tuple  # ((start_s, end_s), ...)
    t_rh: float

    @property
    def horizon(self) -> float:
        return self.windows[-1][1] if self.windows else 0.0

    def __len__(self):
        return len(self.windows)


def plan_windows(horizon: float, t_rh: float, grid: Grid) -> RhPlan:
    """Split ``[0, horizon]`` into windows of ``t_rh`` plus a shorter remainder."""
    if not t_rh > 0:
        raise ConfigurationError(f"receding-horizon window must be positive, got {t_rh}")
    per_window = t_rh / grid.dt_control
    if abs(per_window - round(per_window)) > 1e-9 * max(1.0, per_window):
        raise ConfigurationError(
            f"window length {t_rh} s is not a multiple of dt_control={grid.dt_control} s"
        )
    total = grid.with_horizon(horizon).n_blocks
    per_window = int(round(per_window))
    windows = []
    # boundaries come from integer block counts so no float drift accumulates
    for b0 in range(0, total, per_window):
        b1 = min(b0 + per_window, total)
        windows.append((b0 * grid.dt_control, b1 * grid.dt_control))
    return RhPlan(tuple(windows), float(t_rh))


def window_gap_mean(outcome: SolveOutcome) -> float:
    """Average relative gap over every MILP solved in a run."""
    gaps = [w["gap"] for w in outcome.windows]
    return float(np.mean(gaps)) if gaps else 0.0


def _solve_window(problem, options):
    sol = solve_milp(problem.model, options, default_starts(problem))
    if sol.status not in (OPTIMAL, FEASIBLE_TIME_LIMIT):
        raise SolverError(f"window solve of {problem.model.name!r} ended {sol.status!r}")
    return sol


def _decentralized_task(args):
    house, coeff, ambient, cfg, grid, options = args
    problem = build_decentralized(house, coeff, ambient, cfg, grid)
    sol = _solve_window(problem, options)
    return extract_outcome(problem, sol), sol.nodes


def run_receding_horizon(kind: str, fleet: Sequence[HouseParams], coeffs: Sequence[ThermalCoefficients],
                         ambient: AmbientSeries, config, grid: Grid, plan: RhPlan,
                         options: SolverOptions | None = None, workers: int = 1) -> SolveOutcome:
    """Solve ``plan``'s windows in order and stitch the results over ``grid``.

    ``kind`` selects one MILP per house per window (decentralized, with a
    :class:`Type1Config`) or one fleet MILP per window (centralized, with a
    :class:`Type2Config`). ``workers > 1`` solves the houses of a
    decentralized window in separate processes.
    """
    if kind == DECENTRALIZED and not isinstance(config, Type1Config):
        raise ValidationError("decentralized runs need a Type1Config")
    if kind == CENTRALIZED and not isinstance(config, Type2Config):
        raise ValidationError("centralized runs need a Type2Config")
    if kind not in (DECENTRALIZED, CENTRALIZED):
        raise ValidationError(f"unknown controller kind {kind!r}")
    if len(fleet) == 0:
        raise ValidationError("receding horizon needs at least one house")
    if len(fleet) != len(coeffs):
        raise ValidationError(f"{len(fleet)} houses but {len(coeffs)} coefficient sets")
    if not plan.windows:
        raise ConfigurationError("receding-horizon plan has no windows (zero horizon)")
    if plan.horizon != grid.horizon:
        raise ConfigurationError(f"plan covers {plan.horizon} s but the grid spans {grid.horizon} s")
    options = options or SolverOptions()
    t0 = time.monotonic()

    houses = list(fleet)
    schedules = [None] * len(houses)
    trajectories = [None] * len(houses)
    records = []
    pool = ProcessPoolExecutor(workers) if workers > 1 and kind == DECENTRALIZED else None
    try:
        for start, end in plan.windows:
            wgrid = grid.with_horizon(end - start)
            wamb = ambient.shifted(start)
            if kind == DECENTRALIZED:
                tasks = [(h, c, wamb, config, wgrid, options) for h, c in zip(houses, coeffs)]
                results = list(pool.map(_decentralized_task, tasks)) if pool else [
                    _decentralized_task(t) for t in tasks
                ]
                parts = [r[0] for r in results]
                for h, (part, nodes) in enumerate(results):
                    records.append(dict(start=start, end=end, house=houses[h].id, status=part.status,
                                        gap=part.gap, nodes=nodes, elapsed=part.elapsed))
                parts = [(p.schedules[0], p.trajectories[0]) for p in parts]
            else:
                problem = build_centralized(houses, coeffs, wamb, config, wgrid)
                sol = _solve_window(problem, options)
                part = extract_outcome(problem, sol)
                records.append(dict(start=start, end=end, house=None, status=sol.status,
                                    gap=sol.gap, nodes=sol.nodes, elapsed=sol.elapsed))
                parts = list(zip(part.schedules, part.trajectories))
            for h, (sched, traj) in enumerate(parts):
                schedules[h] = sched if schedules[h] is None else schedules[h] + sched
                trajectories[h] = traj if trajectories[h] is None else trajectories[h].join(traj)
                houses[h] = replace(houses[h], theta0=traj.final)
    finally:
        if pool is not None:
            pool.shutdown()

    setpoints = [h.setpoint if getattr(config, "setpoint", None) is None else config.setpoint
                 for h in fleet]
    for sched in schedules:
        sched.check(grid)
    delta = np.array([compute_deviation(tr, sp) for tr, sp in zip(trajectories, setpoints)])
    gas = np.array([compute_gas(s, h.burn_rate, grid) for s, h in zip(schedules, fleet)])
    worst = OPTIMAL if all(r["status"] == OPTIMAL for r in records) else FEASIBLE_TIME_LIMIT
    out = SolveOutcome(
        house_ids=[h.id for h in fleet],
        schedules=schedules,
        trajectories=trajectories,
        delta=delta,
        gas=gas,
        objective=policy_objective(kind, config, delta, gas),
        gap=0.0,
        status=worst,
        windows=records,
        elapsed=time.monotonic() - t0,
    )
    out.gap = window_gap_mean(out)
    return out
