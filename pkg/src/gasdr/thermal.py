"""Single-zone house thermodynamics.

Each house is a first-order RC model heated by an on/off gas furnace::

    dtheta/dt = -alpha * (theta - ambient(t)) + beta * burn_rate * q(t)

Everything inside the engine is SI (K, s, kg, m); Fahrenheit only appears at
file boundaries through the conversion helpers at the bottom of this module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    OutOfRangeError,
    ShapeError,
    ValidationError,
)

TEMPERATURE_BAND_K = (230.0, 330.0)
BURN_RATE_BAND = (3e-5, 12e-5)


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class PhysicalConstants:
    """Air and fuel properties. Defaults are the case-study values."""

    ca: float = 718.0  # J/(kg K), isochoric specific heat of air
    rho_a: float = 1.2754  # kg/m^3
    eg: float = 4.5938e7  # J/kg, heating value of natural gas

    def __post_init__(self):
        for name in ("ca", "rho_a", "eg"):
            _require_positive(name, getattr(self, name))


@dataclass(frozen=True)
class HouseParams:
    id: str
    volume: float  # m^3
    wall_area: float  # m^2
    kappa: float  # W/(m^2 K)
    burn_rate: float  # kg/s
    theta0: float  # K
    setpoint: float  # K
    category: str = ""

    def __post_init__(self):
        for name in ("volume", "wall_area", "kappa", "burn_rate"):
            _require_positive(name, getattr(self, name))
        lo, hi = TEMPERATURE_BAND_K
        for name in ("theta0", "setpoint"):
            value = getattr(self, name)
            if not (math.isfinite(value) and lo <= value <= hi):
                raise ValidationError(f"{name} must lie in [{lo}, {hi}] K, got {value!r}")

    def burn_rate_in_band(self) -> bool:
        lo, hi = BURN_RATE_BAND
        return lo <= self.burn_rate <= hi


@dataclass(frozen=True)
class ThermalCoefficients:
    alpha: float  # 1/s, loss rate towards ambient
    beta: float  # K/kg, temperature gain per kg of burnt gas

    def __post_init__(self):
        _require_positive("alpha", self.alpha)
        _require_positive("beta", self.beta)

    def check_step(self, dt: float) -> None:
        """Raise unless the explicit scheme is stable for step ``dt``."""
        if not dt > 0:
            raise ConfigurationError(f"time step must be positive, got {dt!r}")
        if self.alpha * dt >= 1.0:
            raise ConfigurationError(
                f"unstable explicit step: alpha*dt = {self.alpha * dt:.3g} >= 1 "
                f"(alpha={self.alpha:.3g} 1/s, dt={dt} s)"
            )


def compute_thermal_coefficients(constants: PhysicalConstants, house: HouseParams) -> ThermalCoefficients:
    """Loss and gain coefficients from house geometry and air/fuel properties.

    ``alpha = kappa*A / (ca*rho_a*V)`` and ``beta = eg / (ca*rho_a*V)``.
    """
    heat_capacity = constants.ca * constants.rho_a * house.volume  # J/K
    return ThermalCoefficients(
        alpha=house.kappa * house.wall_area / heat_capacity,
        beta=constants.eg / heat_capacity,
    )


@dataclass(frozen=True)
class AmbientSeries:
    """Outside temperature forecast as ``(offset_s, temperature_K)`` samples."""

    offsets: tuple
    temps: tuple

    def __post_init__(self):
        offsets = tuple(float(t) for t in self.offsets)
        temps = tuple(float(v) for v in self.temps)
        if len(offsets) == 0 or len(offsets) != len(temps):
            raise ValidationError("ambient series needs matching, non-empty offsets and temperatures")
        if offsets[0] != 0.0:
            raise ValidationError(f"first ambient offset must be 0, got {offsets[0]}")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValidationError("ambient offsets must be strictly increasing")
        if not all(math.isfinite(v) and v > 0 for v in temps):
            raise ValidationError("ambient temperatures must be finite and positive (K)")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "temps", temps)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, float]]) -> "AmbientSeries":
        return cls(tuple(s[0] for s in samples), tuple(s[1] for s in samples))

    @classmethod
    def constant(cls, temp: float, span: float) -> "AmbientSeries":
        if span <= 0:
            return cls((0.0,), (temp,))
        return cls((0.0, float(span)), (temp, temp))

    @property
    def end(self) -> float:
        return self.offsets[-1]

    def covers(self, span: float) -> bool:
        return span <= self.end

    def sample(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() < 0 or times.max() > self.end):
            raise OutOfRangeError(
                f"ambient queried on [{times.min()}, {times.max()}] s, covered [0, {self.end}] s"
            )
        return np.interp(times, self.offsets, self.temps)

    def shifted(self, start: float) -> "AmbientSeries":
        """Series re-based so that ``start`` becomes offset 0."""
        if start == 0:
            return self
        if not 0 <= start <= self.end:
            raise OutOfRangeError(f"shift {start} s outside [0, {self.end}] s")
        head = float(np.interp(start, self.offsets, self.temps))
        offs = [0.0]
        vals = [head]
        for t, v in zip(self.offsets, self.temps):
            if t > start:
                offs.append(t - start)
                vals.append(v)
        return AmbientSeries(tuple(offs), tuple(vals))


def ambient_at(series: AmbientSeries, t: float) -> float:
    """Linearly interpolated ambient temperature at offset ``t`` seconds."""
    if not 0 <= t <= series.end:
        raise OutOfRangeError(f"t={t} s outside ambient coverage [0, {series.end}] s")
    return float(np.interp(t, series.offsets, series.temps))


@dataclass(frozen=True)
class Grid:
    """State/control time discretization of a horizon.

    ``dt_control`` must be a whole number of state steps and ``horizon`` a
    whole number of control blocks. A zero horizon is allowed (no steps).
    """

    dt_state: float
    dt_control: float
    horizon: float
    n: int = field(init=False)
    steps_per_block: int = field(init=False)
    n_blocks: int = field(init=False)

    def __post_init__(self):
        if not (self.dt_state > 0 and self.dt_control > 0):
            raise ConfigurationError("dt_state and dt_control must be positive")
        if self.horizon < 0:
            raise ConfigurationError("horizon must be non-negative")
        spb = _whole_ratio(self.dt_control, self.dt_state, "dt_control", "dt_state")
        blocks = _whole_ratio(self.horizon, self.dt_control, "horizon", "dt_control", allow_zero=True)
        object.__setattr__(self, "steps_per_block", spb)
        object.__setattr__(self, "n_blocks", blocks)
        object.__setattr__(self, "n", spb * blocks)

    @classmethod
    def minutes(cls, dt_state_min=1, dt_control_min=3, horizon_min=60) -> "Grid":
        return cls(60.0 * dt_state_min, 60.0 * dt_control_min, 60.0 * horizon_min)

    def with_horizon(self, horizon: float) -> "Grid":
        return Grid(self.dt_state, self.dt_control, horizon)

    def state_times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt_state

    def block_of_step(self) -> np.ndarray:
        """Control-block index governing each state step ``k = 0..n-1``."""
        return np.arange(self.n) // self.steps_per_block


def _whole_ratio(num, den, num_name, den_name, allow_zero=False) -> int:
    ratio = num / den
    k = int(round(ratio))
    if abs(ratio - k) > 1e-9 or k < (0 if allow_zero else 1):
        raise ConfigurationError(f"{num_name}={num} is not a positive integer multiple of {den_name}={den}")
    return k


@dataclass(frozen=True)
class ControlSchedule:
    """Furnace on/off decision per control block."""

    values: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v not in (0, 1) for v in vals) or any(
            float(v) != float(o) for v, o in zip(vals, self.values)
        ):
            raise ValidationError("control schedule entries must be 0 or 1")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    @classmethod
    def zeros(cls, n_blocks: int) -> "ControlSchedule":
        return cls((0,) * n_blocks)

    def on_blocks(self) -> int:
        return sum(self.values)

    def expand(self, grid: Grid) -> np.ndarray:
        """Per state step ``k = 0..n-1`` values of q."""
        self.check(grid)
        return np.repeat(np.asarray(self.values, dtype=float), grid.steps_per_block)

    def check(self, grid: Grid) -> None:
        if len(self.values) != grid.n_blocks:
            raise ShapeError(f"schedule has {len(self.values)} blocks, grid has {grid.n_blocks}")

    def __add__(self, other: "ControlSchedule") -> "ControlSchedule":
        return ControlSchedule(self.values + other.values)


@dataclass(frozen=True)
class Trajectory:
    """Indoor temperatures at ``t_k = k*dt_state`` for ``k = 0..n``."""

    theta: np.ndarray
    dt_state: float

    def __post_init__(self):
        arr = np.array(self.theta, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "theta", arr)

    def __len__(self):
        return len(self.theta)

    @property
    def final(self) -> float:
        return float(self.theta[-1])

    def times(self) -> np.ndarray:
        return np.arange(len(self.theta)) * self.dt_state

    def join(self, other: "Trajectory") -> "Trajectory":
        """Concatenate a trajectory that starts where this one ends."""
        if other.theta[0] != self.theta[-1]:
            raise ShapeError("trajectories are not continuous at the join")
        return Trajectory(np.concatenate([self.theta, other.theta[1:]]), self.dt_state)


def euler_step(theta, theta_amb, coeff: ThermalCoefficients, burn_rate, q, dt) -> float:
    """One forward-difference step of the heating ODE."""
    if q not in (0, 1):
        raise ValidationError(f"q must be 0 or 1, got {q!r}")
    coeff.check_step(dt)
    return theta + dt * (-coeff.alpha * (theta - theta_amb) + coeff.beta * burn_rate * q)


def simulate_trajectory(house: HouseParams, coeff: ThermalCoefficients, ambient: AmbientSeries,
                        schedule: ControlSchedule, grid: Grid) -> Trajectory:
    """Integrate the house temperature over ``grid`` under a block schedule."""
    schedule.check(grid)
    if grid.n == 0:
        return Trajectory(np.array([house.theta0]), grid.dt_state)
    coeff.check_step(grid.dt_state)
    if not ambient.covers(grid.horizon):
        raise OutOfRangeError(f"ambient covers {ambient.end} s, grid needs {grid.horizon} s")
    amb = ambient.sample(grid.state_times()[:-1])
    q = schedule.expand(grid)
    return Trajectory(_integrate(house.theta0, amb, q, coeff, house.burn_rate, grid.dt_state), grid.dt_state)


def _integrate(theta0, amb, q, coeff, burn_rate, dt) -> np.ndarray:
    # Same expression as euler_step, without the per-call validation.
    alpha, gain = coeff.alpha, coeff.beta * burn_rate
    out = np.empty(len(amb) + 1)
    theta = float(theta0)
    out[0] = theta
    for k in range(len(amb)):
        theta = theta + dt * (-alpha * (theta - amb[k]) + gain * q[k])
        out[k + 1] = theta
    return out


def fahrenheit_to_kelvin(f: float) -> float:
    return (f - 32.0) * 5.0 / 9.0 + 273.15


def kelvin_to_fahrenheit(k: float) -> float:
    return (k - 273.15) * 9.0 / 5.0 + 32.0


def kelvin_dev_to_fahrenheit_dev(dk: float) -> float:
    """Temperature *difference* in K to a difference in degrees F."""
    return dk * 9.0 / 5.0
