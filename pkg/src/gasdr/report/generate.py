"""Synthetic inputs so the tool runs without external house or weather data.

The fleet spans 14 house categories, from a one-bedroom apartment to a large
two-storey home. Furnace burn rates scale linearly with floor area across the
residential band. Ambient profiles are hourly samples of a mild winter day
and of a cold-snap day.
"""
from __future__ import annotations

import math

import numpy as np

from ..thermal import BURN_RATE_BAND, HouseParams, fahrenheit_to_kelvin

__all__ = [
    "CATEGORIES",
    "HouseTemplate",
    "generate_fleet",
    "typical_day_profile",
    "polar_vortex_profile",
]

KAPPA = 0.11  # W/(m^2 K), same insulation everywhere
CEILING_M = 2.5
SETPOINTS_F = (66.0, 67.0, 68.0, 69.0, 70.0, 71.0, 72.0)


class HouseTemplate:
    def __init__(self, name: str, floor_m2: float, storeys: int):
        self.name = name
        self.floor_m2 = floor_m2
        self.storeys = storeys

    @property
    def volume(self) -> float:
        return self.floor_m2 * CEILING_M

    @property
    def wall_area(self) -> float:
        # square footprint: four walls per storey plus the roof
        footprint = self.floor_m2 / self.storeys
        return 4.0 * math.sqrt(footprint) * CEILING_M * self.storeys + footprint


_NAMES = ("studio", "apt-1br", "apt-2br", "condo-2br", "townhouse-2br", "bungalow-2br",
          "ranch-3br", "cape-3br", "colonial-3br", "split-3br", "ranch-4br",
          "colonial-4br", "farmhouse-4br", "estate-5br")
CATEGORIES = tuple(
    HouseTemplate(name, 50.0 + 25.0 * i, 1 if i < 7 else 2) for i, name in enumerate(_NAMES)
)


def _burn_rate(floor_m2: float) -> float:
    lo, hi = BURN_RATE_BAND
    a0, a1 = CATEGORIES[0].floor_m2, CATEGORIES[-1].floor_m2
    return round(lo + (hi - lo) * (floor_m2 - a0) / (a1 - a0), 10)


def generate_fleet(n_houses: int = 140, seed: int = 0):
    """Houses spread evenly over the categories.

    Returns ``(houses, temps_f)`` where ``temps_f`` holds the exact
    ``(theta0_f, setpoint_f)`` values the houses were built from, so the fleet
    can be written to CSV and read back bit-for-bit.
    """
    if n_houses <= 0:
        raise ValueError("fleet needs at least one house")
    rng = np.random.default_rng(seed)
    houses, temps = [], []
    width = len(str(n_houses))
    for i in range(n_houses):
        cat = CATEGORIES[i * len(CATEGORIES) // n_houses]
        setpoint = float(rng.choice(SETPOINTS_F))
        theta0 = round(setpoint + float(rng.uniform(-2.0, 1.0)), 1)
        houses.append(HouseParams(
            id=f"h{i + 1:0{width}d}",
            volume=cat.volume,
            wall_area=round(cat.wall_area, 6),
            kappa=KAPPA,
            burn_rate=_burn_rate(cat.floor_m2),
            theta0=fahrenheit_to_kelvin(theta0),
            setpoint=fahrenheit_to_kelvin(setpoint),
            category=cat.name,
        ))
        temps.append((theta0, setpoint))
    return houses, temps


def _hourly(shape, hours: float, step_min: float, top_f: float, swing_f: float, start_hour: float):
    n = int(round(hours * 60.0 / step_min))
    out = []
    for k in range(n + 1):
        minutes = k * step_min
        phase = ((start_hour + minutes / 60.0) % 24.0)
        out.append((float(minutes), round(top_f - swing_f * shape(phase), 3)))
    return out


def typical_day_profile(hours: float = 24.0, step_min: float = 60.0, high_f: float = 42.0,
                        swing_f: float = 15.0, start_hour: float = 0.0):
    """Mild day: sinusoid peaking mid-afternoon; ``(offset_minutes, temp_f)`` pairs."""

    def shape(h):
        return 0.5 * (1.0 - math.cos(2.0 * math.pi * (h - 15.0) / 24.0))

    return _hourly(shape, hours, step_min, high_f, swing_f, start_hour)


# fraction of the swing below the starting temperature, through a noon-to-noon day
_VORTEX = np.array([
    (0, 0.0), (3, 0.12), (6, 0.35), (9, 0.55), (12, 0.7), (15, 0.85),
    (18, 0.97), (19, 1.0), (21, 0.95), (24, 0.8),
])


def polar_vortex_profile(hours: float = 24.0, step_min: float = 60.0, high_f: float = 15.0,
                         swing_f: float = 40.0, start_hour: float = 0.0):
    """Cold snap: a steady plunge overnight with a slight morning recovery."""

    def shape(h):
        return float(np.interp(h, _VORTEX[:, 0], _VORTEX[:, 1]))

    return _hourly(shape, hours, step_min, high_f, swing_f, start_hour)
