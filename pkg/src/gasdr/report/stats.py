"""Deviation statistics, run summaries and fleet-size projections."""
from __future__ import annotations

import statistics
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Sequence

from ..errors import ValidationError
from ..thermal import kelvin_dev_to_fahrenheit_dev

__all__ = ["DeviationStats", "RunReport", "deviation_stats", "make_report", "savings_projection"]


@dataclass(frozen=True)
class DeviationStats:
    """Across-house statistics of the maximum deviation, in degrees F."""

    mean: float
    max: float
    min: float
    std_dev: float


@dataclass(frozen=True)
class RunReport:
    scenario: str
    stats: DeviationStats
    total_gas: float  # kg
    gas_per_house: float  # kg
    time_s: float
    avg_gap_pct: float


def deviation_stats(deltas: Sequence[float]) -> DeviationStats:
    """Statistics of per-house deviations given in K; population std."""
    values = [kelvin_dev_to_fahrenheit_dev(float(d)) for d in deltas]
    if not values:
        raise ValidationError("deviation statistics need at least one house")
    # statistics works in exact rationals: the mean is correctly rounded (so it
    # stays within [min, max]) and identical values give a std of exactly 0
    return DeviationStats(
        mean=float(statistics.mean(values)),
        max=max(values),
        min=min(values),
        std_dev=float(statistics.pstdev(values)),
    )


def make_report(scenario: str, deltas, total_gas: float, house_count: int, time_s: float,
                avg_gap: float) -> RunReport:
    """Summary row; ``avg_gap`` is a fraction and is reported in percent."""
    if house_count <= 0:
        raise ValidationError("a run report needs at least one house")
    return RunReport(
        scenario=scenario,
        stats=deviation_stats(deltas),
        total_gas=float(total_gas),
        gas_per_house=float(total_gas) / house_count,
        time_s=float(time_s),
        avg_gap_pct=100.0 * float(avg_gap),
    )


def savings_projection(baseline_total: float, dr_total: float, fleet_size: int,
                       target_size: int) -> float:
    """Gas saved (kg) by ``target_size`` houses at this fleet's per-house saving.

    Inputs are taken as the shortest decimals that print as them (the values
    a CSV holds) and combined in decimal with one final rounding, so a
    per-house saving of 0.07 kg scales to exactly 700.0 kg at 10000 houses.
    Negative when the controlled fleet burns more than the baseline.
    """
    if not fleet_size > 0:
        raise ValidationError(f"fleet size must be positive, got {fleet_size}")
    if target_size < 0:
        raise ValidationError(f"target size must be non-negative, got {target_size}")
    with localcontext() as ctx:
        ctx.prec = 60
        saving = Decimal(repr(float(baseline_total))) - Decimal(repr(float(dr_total)))
        return float(saving * Decimal(int(target_size)) / Decimal(int(fleet_size)))
