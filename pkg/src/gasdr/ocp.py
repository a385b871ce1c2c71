"""MILP builders for the look-ahead heating controllers.

Two controllers share the same per-house block of the model:

* decentralized (one model per house): ``min lam*Delta + (1-lam)*G``;
* centralized (one model for the fleet): ``min mean(Delta_h)`` or
  ``min max(Delta_h)`` under a fleet-wide cap ``sum_h Q_h q_h <= gamma*D``
  on every control block.

The per-house block holds continuous states ``theta_0..theta_n``, one binary
per control block, and the deviation ``Delta >= 0``. The state rows are the
explicit Euler recursion used by :func:`gasdr.thermal.simulate_trajectory`::

    theta_{k+1} - (1 - alpha*dt) theta_k - dt*beta*Q q_{b(k)} = alpha*dt*ambient_k

so any binary assignment reproduces the simulator's trajectory. The
objective mixes K and kg as-is; no rescaling is applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .baseline import baseline_schedule
from .errors import ConsistencyError, ValidationError
from .milp import (
    FEASIBLE_TIME_LIMIT,
    OPTIMAL,
    MilpModel,
    MilpSolution,
    SolverOptions,
    solve_milp,
)
from .thermal import (
    AmbientSeries,
    ControlSchedule,
    Grid,
    HouseParams,
    ThermalCoefficients,
    Trajectory,
    simulate_trajectory,
)

DECENTRALIZED = "decentralized"
CENTRALIZED = "centralized"
MEAN_DEVIATION = "mean_deviation"
MAX_DEVIATION = "max_deviation"

STATE_MATCH_TOL = 1e-6  # K, MILP states vs re-simulation
PEAK_TOL = 1e-9  # kg/s


@dataclass(frozen=True)
class Type1Config:
    lam: float
    setpoint: float | None = None  # defaults to the house set-point

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lambda must lie in [0, 1], got {self.lam}")


@dataclass(frozen=True)
class Type2Config:
    gamma: float
    peak: float
    objective_kind: str = MAX_DEVIATION

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.peak > 0:
            raise ValidationError(f"peak demand must be positive, got {self.peak}")
        if self.objective_kind not in (MEAN_DEVIATION, MAX_DEVIATION):
            raise ValidationError(f"unknown objective {self.objective_kind!r}")

    @property
    def cap(self) -> float:
        return self.gamma * self.peak


@dataclass
class OcpProblem:
    """A built model plus the variable layout needed to read it back."""

    model: MilpModel
    kind: str
    houses: tuple
    coeffs: tuple
    setpoints: np.ndarray
    ambient: AmbientSeries
    grid: Grid
    theta_idx: np.ndarray  # (H, n+1)
    q_idx: np.ndarray  # (H, n_blocks)
    delta_idx: np.ndarray  # (H,)
    gas_idx: np.ndarray | None = None
    epigraph_idx: int | None = None
    config: object = None

    def start_vector(self, schedules: Sequence[ControlSchedule]) -> np.ndarray:
        """0/1 vector over ``model.binary_indices`` for per-house schedules."""
        values = np.zeros(self.model.num_variables)
        for h, sched in enumerate(schedules):
            sched.check(self.grid)
            values[self.q_idx[h]] = sched.values
        return values[self.model.binary_indices]

    def full_start(self, schedules: Sequence[ControlSchedule]) -> np.ndarray:
        """Complete assignment (states by simulation) for per-house schedules."""
        x = np.zeros(self.model.num_variables)
        deltas = []
        for h, sched in enumerate(schedules):
            traj = simulate_trajectory(self.houses[h], self.coeffs[h], self.ambient, sched, self.grid)
            x[self.q_idx[h]] = sched.values
            x[self.theta_idx[h]] = traj.theta
            deltas.append(compute_deviation(traj, self.setpoints[h]))
            x[self.delta_idx[h]] = deltas[-1]
            if self.gas_idx is not None:
                x[self.gas_idx[h]] = self.houses[h].burn_rate * self.grid.dt_control * sched.on_blocks()
        if self.epigraph_idx is not None:
            x[self.epigraph_idx] = max(deltas)
        return x


@dataclass
class SolveOutcome:
    house_ids: list
    schedules: list
    trajectories: list
    delta: np.ndarray  # K
    gas: np.ndarray  # kg
    objective: float
    gap: float
    status: str
    windows: list = field(default_factory=list)
    elapsed: float = 0.0


def _house_block(model: MilpModel, tag: str, house: HouseParams, coeff: ThermalCoefficients,
                 amb: np.ndarray, grid: Grid, setpoint: float):
    dt = grid.dt_state
    n = grid.n
    theta = np.empty(n + 1, dtype=np.int64)
    theta[0] = model.add_variable(f"theta({tag},0)", lb=house.theta0, ub=house.theta0)
    for k in range(1, n + 1):
        theta[k] = model.add_variable(f"theta({tag},{k})", lb=-math.inf, ub=math.inf)
    q = np.array([model.add_binary(f"q({tag},{b})") for b in range(grid.n_blocks)], dtype=np.int64)
    delta = model.add_variable(f"delta({tag})", lb=0.0, ub=math.inf)
    decay = 1.0 - coeff.alpha * dt
    gain = dt * coeff.beta * house.burn_rate
    block = grid.block_of_step()
    for k in range(n):
        model.add_constraint(
            [(theta[k + 1], 1.0), (theta[k], -decay), (q[block[k]], -gain)],
            "=", coeff.alpha * dt * amb[k], name=f"dyn({tag},{k})",
        )
    for k in range(1, n + 1):
        model.add_constraint([(theta[k], 1.0), (delta, -1.0)], "<=", setpoint, name=f"hi({tag},{k})")
        model.add_constraint([(theta[k], 1.0), (delta, 1.0)], ">=", setpoint, name=f"lo({tag},{k})")
    return theta, q, delta


def _check_inputs(houses, coeffs, ambient: AmbientSeries, grid: Grid):
    if len(houses) != len(coeffs):
        raise ValidationError(f"{len(houses)} houses but {len(coeffs)} coefficient sets")
    if grid.n:
        for c in coeffs:
            c.check_step(grid.dt_state)
    if not ambient.covers(grid.horizon):
        raise ValidationError(f"ambient covers {ambient.end} s, horizon is {grid.horizon} s")
    return ambient.sample(grid.state_times()[:-1]) if grid.n else np.empty(0)


def build_decentralized(house: HouseParams, coeff: ThermalCoefficients, ambient: AmbientSeries,
                        cfg: Type1Config, grid: Grid) -> OcpProblem:
    amb = _check_inputs([house], [coeff], ambient, grid)
    setpoint = house.setpoint if cfg.setpoint is None else cfg.setpoint
    model = MilpModel(f"decentralized_{house.id}")
    tag = str(house.id)
    theta, q, delta = _house_block(model, tag, house, coeff, amb, grid, setpoint)
    gas = model.add_variable(f"gas({tag})", lb=0.0, ub=math.inf)
    per_block = house.burn_rate * grid.dt_control
    model.add_constraint([(gas, 1.0)] + [(j, -per_block) for j in q], "=", 0.0, name=f"gas({tag})")
    model.set_objective({delta: cfg.lam, gas: 1.0 - cfg.lam})
    return OcpProblem(
        model, DECENTRALIZED, (house,), (coeff,), np.array([setpoint]), ambient, grid,
        theta[None, :], q[None, :], np.array([delta]), np.array([gas]), None, cfg,
    )


def build_centralized(fleet: Sequence[HouseParams], coeffs: Sequence[ThermalCoefficients],
                      ambient: AmbientSeries, cfg: Type2Config, grid: Grid) -> OcpProblem:
    if len(fleet) == 0:
        raise ValidationError("centralized model needs at least one house")
    amb = _check_inputs(fleet, coeffs, ambient, grid)
    model = MilpModel("centralized")
    thetas, qs, deltas = [], [], []
    for house, coeff in zip(fleet, coeffs):
        th, q, d = _house_block(model, str(house.id), house, coeff, amb, grid, house.setpoint)
        thetas.append(th)
        qs.append(q)
        deltas.append(d)
    q_idx = np.array(qs, dtype=np.int64).reshape(len(fleet), grid.n_blocks)
    for b in range(grid.n_blocks):
        model.add_constraint(
            [(q_idx[h, b], house.burn_rate) for h, house in enumerate(fleet)],
            "<=", cfg.cap, name=f"peak({b})",
        )
    epi = None
    if cfg.objective_kind == MEAN_DEVIATION:
        model.set_objective({d: 1.0 / len(fleet) for d in deltas})
    else:
        epi = model.add_variable("maxdev", lb=0.0, ub=math.inf)
        for h, d in enumerate(deltas):
            model.add_constraint([(epi, 1.0), (d, -1.0)], ">=", 0.0, name=f"epi({h})")
        model.set_objective({epi: 1.0})
    return OcpProblem(
        model, CENTRALIZED, tuple(fleet), tuple(coeffs),
        np.array([h.setpoint for h in fleet]), ambient, grid,
        np.array(thetas, dtype=np.int64).reshape(len(fleet), grid.n + 1), q_idx,
        np.array(deltas, dtype=np.int64), None, epi, cfg,
    )


# -- metrics -------------------------------------------------------------------

def compute_deviation(traj: Trajectory, setpoint: float) -> float:
    """Largest |setpoint - theta_k| over k >= 1 (the initial state is excluded)."""
    if len(traj) == 0:
        raise ValidationError("empty trajectory")
    if len(traj) == 1:
        return 0.0
    return float(np.max(np.abs(setpoint - traj.theta[1:])))


def compute_gas(schedule: ControlSchedule, burn_rate: float, grid: Grid) -> float:
    """Gas burnt (kg) by a block schedule."""
    if len(schedule) == 0:
        raise ValidationError("empty schedule")
    schedule.check(grid)
    return burn_rate * grid.dt_control * schedule.on_blocks()


def policy_objective(kind: str, config, delta: np.ndarray, gas: np.ndarray) -> float:
    if kind == DECENTRALIZED:
        return float(np.sum(config.lam * delta + (1.0 - config.lam) * gas))
    if config.objective_kind == MEAN_DEVIATION:
        return float(np.mean(delta))
    return float(np.max(delta))


def block_demand(houses, schedules) -> np.ndarray:
    """Aggregate flow per control block, summed in house order."""
    total = np.zeros(len(schedules[0]) if schedules else 0)
    for house, sched in zip(houses, schedules):
        total = total + house.burn_rate * np.asarray(sched.values, dtype=float)
    return total


def check_peak(houses, schedules, cap: float) -> None:
    demand = block_demand(houses, schedules)
    if demand.size and demand.max() > cap + PEAK_TOL:
        b = int(np.argmax(demand))
        raise ConsistencyError(f"block {b}: demand {demand[b]:.9g} kg/s exceeds cap {cap:.9g} kg/s")


def extract_outcome(problem: OcpProblem, sol: MilpSolution) -> SolveOutcome:
    """Read schedules from a solution and re-derive everything by simulation."""
    if sol.status not in (OPTIMAL, FEASIBLE_TIME_LIMIT) or sol.incumbent is None:
        raise ValidationError(f"cannot extract an outcome from a {sol.status!r} solution")
    x = sol.incumbent
    schedules, trajectories, delta, gas = [], [], [], []
    for h, (house, coeff) in enumerate(zip(problem.houses, problem.coeffs)):
        sched = ControlSchedule(tuple(int(round(v)) for v in x[problem.q_idx[h]]))
        traj = simulate_trajectory(house, coeff, problem.ambient, sched, problem.grid)
        err = float(np.max(np.abs(traj.theta - x[problem.theta_idx[h]])))
        if err > STATE_MATCH_TOL:
            raise ConsistencyError(
                f"house {house.id}: MILP states differ from re-simulation by {err:.3g} K"
            )
        schedules.append(sched)
        trajectories.append(traj)
        delta.append(compute_deviation(traj, problem.setpoints[h]))
        gas.append(compute_gas(sched, house.burn_rate, problem.grid) if len(sched) else 0.0)
    if problem.kind == CENTRALIZED:
        check_peak(problem.houses, schedules, problem.config.cap)
    delta, gas = np.array(delta), np.array(gas)
    return SolveOutcome(
        house_ids=[h.id for h in problem.houses],
        schedules=schedules,
        trajectories=trajectories,
        delta=delta,
        gas=gas,
        objective=policy_objective(problem.kind, problem.config, delta, gas),
        gap=sol.gap,
        status=sol.status,
        elapsed=sol.elapsed,
    )


# -- incumbent seeds -------------------------------------------------------------

# thresholds tried by the seeding heuristics, as multiples of one block's heating
# rise relative to the set-point
START_OFFSETS = (0.0, -0.25, -0.5, -0.75, -1.0)


def _block_rise(problem: OcpProblem) -> np.ndarray:
    return np.array([c.beta * h.burn_rate * problem.grid.dt_control
                     for h, c in zip(problem.houses, problem.coeffs)])


def thermostat_schedules(problem: OcpProblem, offset: float = 0.0) -> list:
    """Thermostat run from each house's initial state.

    The switching threshold is the set-point plus ``offset`` block rises.
    """
    rise = _block_rise(problem)
    return [
        baseline_schedule(replace(h, setpoint=float(sp + offset * r)), c, problem.ambient, problem.grid)[0]
        for h, c, sp, r in zip(problem.houses, problem.coeffs, problem.setpoints, rise)
    ]


def capped_thermostat_schedules(problem: OcpProblem, cap: float, offset: float = 0.0) -> list:
    """Thermostat rule under a fleet cap: coldest houses (relative to threshold) first."""
    grid = problem.grid
    H = len(problem.houses)
    amb = problem.ambient.sample(grid.state_times()[:-1]) if grid.n else np.empty(0)
    theta = np.array([h.theta0 for h in problem.houses], dtype=float)
    rates = np.array([h.burn_rate for h in problem.houses])
    alpha = np.array([c.alpha for c in problem.coeffs])
    gain = np.array([c.beta for c in problem.coeffs]) * rates
    dt = grid.dt_state
    threshold = problem.setpoints + offset * _block_rise(problem)
    values = np.zeros((H, grid.n_blocks), dtype=int)
    k = 0
    for b in range(grid.n_blocks):
        need = theta - threshold
        order = np.lexsort((np.arange(H), need))
        used = 0.0
        for h in order:
            if need[h] >= 0:
                break
            if used + rates[h] <= cap:
                values[h, b] = 1
                used += rates[h]
        q = values[:, b]
        for _ in range(grid.steps_per_block):
            theta = theta + dt * (-alpha * (theta - amb[k]) + gain * q)
            k += 1
    return [ControlSchedule(tuple(row)) for row in values]


def default_starts(problem: OcpProblem) -> list:
    """Complete incumbent candidates from thermostat rules at several thresholds."""
    H = len(problem.houses)
    seeds = [[ControlSchedule.zeros(problem.grid.n_blocks)] * H]
    for off in START_OFFSETS:
        if problem.kind == DECENTRALIZED:
            seeds.append(thermostat_schedules(problem, off))
        else:
            seeds.append(capped_thermostat_schedules(problem, problem.config.cap, off))
    return [problem.full_start(s) for s in seeds]


def solve_problem(problem: OcpProblem, options: SolverOptions | None = None,
                  starts=None) -> SolveOutcome:
    """Solve a built model (seeded with thermostat-style incumbents) and extract it."""
    if starts is None:
        starts = default_starts(problem)
    sol = solve_milp(problem.model, options, starts)
    out = extract_outcome(problem, sol)
    out.windows = [dict(start=0.0, end=problem.grid.horizon, status=sol.status, gap=sol.gap,
                        nodes=sol.nodes, elapsed=sol.elapsed)]
    return out
