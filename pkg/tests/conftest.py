import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gasdr.thermal import (  # noqa: E402
    AmbientSeries,
    Grid,
    HouseParams,
    PhysicalConstants,
    compute_thermal_coefficients,
)
from oracle import ToyHouse  # noqa: E402

CONSTANTS = PhysicalConstants()


def make_house(hid="h1", volume=300.0, wall_area=250.0, kappa=0.11, burn_rate=6e-5,
               theta0=291.0, setpoint=293.0):
    return HouseParams(hid, volume, wall_area, kappa, burn_rate, theta0, setpoint)


def to_house(toy: ToyHouse, hid: str) -> HouseParams:
    return HouseParams(hid, toy.volume, toy.wall_area, toy.kappa, toy.burn_rate, toy.theta0, toy.setpoint)


def coeffs_of(houses):
    return [compute_thermal_coefficients(CONSTANTS, h) for h in houses]


def toy_grid(n_blocks, dt_state=60.0, dt_control=180.0):
    return Grid(dt_state, dt_control, n_blocks * dt_control)


def ramp_ambient(grid: Grid, start=268.0, end=262.0):
    span = max(grid.horizon, grid.dt_state)
    return AmbientSeries((0.0, span), (start, end))


def step_ambient(grid: Grid) -> np.ndarray:
    """Ambient samples the oracle needs, one per state step."""
    return grid.state_times()[:-1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
