"""Current-practice thermostat: fire whenever the house is below set-point.

Decisions are sampled at control-block boundaries and held for the block, so
the baseline acts at the same granularity as the optimized controllers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeError, ValidationError
from .thermal import (
    AmbientSeries,
    ControlSchedule,
    Grid,
    HouseParams,
    PhysicalConstants,
    Trajectory,
    compute_thermal_coefficients,
)

__all__ = [
    "AggregateDemand",
    "baseline_control",
    "baseline_schedule",
    "simulate_baseline",
    "aggregate_demand",
    "peak_demand",
]


def baseline_control(theta: float, setpoint: float) -> int:
    """Heaviside thermostat rule with H(0) = 0."""
    return 1 if theta < setpoint else 0


def baseline_schedule(house: HouseParams, coeff, ambient: AmbientSeries, grid: Grid):
    """Run the thermostat rule for one house; returns ``(schedule, trajectory)``."""
    amb = np.empty(0)
    if grid.n:
        coeff.check_step(grid.dt_state)
        amb = ambient.sample(grid.state_times()[:-1])
    alpha, gain, dt = coeff.alpha, coeff.beta * house.burn_rate, grid.dt_state
    theta = float(house.theta0)
    out = [theta]
    values = []
    k = 0
    for _ in range(grid.n_blocks):
        q = baseline_control(theta, house.setpoint)
        values.append(q)
        for _ in range(grid.steps_per_block):
            theta = theta + dt * (-alpha * (theta - amb[k]) + gain * q)
            out.append(theta)
            k += 1
    return ControlSchedule(tuple(values)), Trajectory(np.array(out), dt)


def simulate_baseline(fleet: Sequence[HouseParams], constants: PhysicalConstants,
                      ambient: AmbientSeries, grid: Grid):
    """Per-house ``(schedule, trajectory)`` pairs under the baseline thermostat."""
    results = []
    for house in fleet:
        coeff = compute_thermal_coefficients(constants, house)
        results.append(baseline_schedule(house, coeff, ambient, grid))
    return results


@dataclass(frozen=True)
class AggregateDemand:
    """Fleet gas mass flow (kg/s) on ``[t_k, t_{k+1})`` for ``k = 0..n-1``."""

    samples: np.ndarray
    dt_state: float

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return len(self.samples)

    def offsets(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt_state


def aggregate_demand(fleet: Sequence[HouseParams], schedules: Sequence[ControlSchedule],
                     grid: Grid) -> AggregateDemand:
    if len(fleet) != len(schedules):
        raise ShapeError(f"{len(fleet)} houses but {len(schedules)} schedules")
    total = np.zeros(grid.n)
    for house, sched in zip(fleet, schedules):
        total += house.burn_rate * sched.expand(grid)
    return AggregateDemand(total, grid.dt_state)


def peak_demand(demand: AggregateDemand) -> float:
    """Largest aggregate mass flow of a demand series."""
    if len(demand.samples) == 0:
        raise ValidationError("peak of an empty demand series is undefined")
    return float(np.max(demand.samples))
