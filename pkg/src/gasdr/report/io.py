"""CSV ingestion and emission.

Temperatures are Fahrenheit and times are minutes at the file boundary; the
engine works in K and seconds. Floats are written with ``repr`` (shortest
round-trip decimal) so that every file re-parses to identical values and
identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import math
import warnings
from pathlib import Path
from typing import Mapping, Sequence

from ..baseline import AggregateDemand
from ..errors import LoadError, ShapeError, ValidationError
from ..thermal import (
    AmbientSeries,
    Grid,
    HouseParams,
    fahrenheit_to_kelvin,
    kelvin_dev_to_fahrenheit_dev,
    kelvin_to_fahrenheit,
)

__all__ = [
    "HOUSE_COLUMNS",
    "AMBIENT_COLUMNS",
    "DEMAND_COLUMNS",
    "BOXPLOT_COLUMNS",
    "REPORT_COLUMNS",
    "SAVINGS_COLUMNS",
    "BurnRateWarning",
    "load_fleet",
    "load_ambient",
    "write_fleet",
    "write_ambient",
    "emit_demand_series",
    "emit_boxplot_data",
    "emit_run_report",
    "emit_savings",
    "read_rows",
]

HOUSE_COLUMNS = ("id", "category", "volume_m3", "wall_area_m2", "kappa_w_m2k",
                 "burn_rate_kg_s", "theta0_f", "setpoint_f")
AMBIENT_COLUMNS = ("offset_minutes", "temp_f")
DEMAND_COLUMNS = ("offset_minutes", "mass_flow_kg_s")
BOXPLOT_COLUMNS = ("scenario", "house_id", "delta_f")
REPORT_COLUMNS = ("scenario", "mean_f", "max_f", "min_f", "std_f", "total_gas_kg",
                  "gas_per_house_kg", "time_s", "avg_gap_pct")
SAVINGS_COLUMNS = ("scenario", "baseline_gas_kg", "dr_gas_kg", "fleet_size",
                   "target_size", "projected_saving_kg")


class BurnRateWarning(UserWarning):
    """A house burn rate lies outside the expected residential band."""


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool,)) or value is None:
        raise ValidationError(f"cannot format {value!r}")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _write(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_rows(path, columns):
    """Yield ``(line_number, row_dict)`` for a CSV with at least ``columns``."""
    path = Path(path)
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise LoadError(str(exc), path) from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise LoadError("file is empty", path)
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise LoadError(f"missing column(s) {', '.join(missing)}", path, 1)
        rows = []
        for row in reader:
            # the header is line 1, so the first data row is line 2
            rows.append((reader.line_num, row))
    if not rows:
        raise LoadError("no data rows", path)
    return rows


def _number(row, column, path, line) -> float:
    raw = row.get(column)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise LoadError(f"column {column}: {raw!r} is not a number", path, line) from None
    if not math.isfinite(value):
        raise LoadError(f"column {column}: {raw!r} is not finite", path, line)
    return value


def load_fleet(path) -> list:
    """Houses from ``houses.csv``; temperatures become K at load time."""
    houses, seen = [], set()
    for line, row in read_rows(path, HOUSE_COLUMNS):
        hid = (row["id"] or "").strip()
        if not hid:
            raise LoadError("empty house id", path, line)
        if hid in seen:
            raise LoadError(f"duplicate house id {hid!r}", path, line)
        seen.add(hid)
        vals = {c: _number(row, c, path, line) for c in HOUSE_COLUMNS[2:]}
        try:
            house = HouseParams(
                id=hid,
                volume=vals["volume_m3"],
                wall_area=vals["wall_area_m2"],
                kappa=vals["kappa_w_m2k"],
                burn_rate=vals["burn_rate_kg_s"],
                theta0=fahrenheit_to_kelvin(vals["theta0_f"]),
                setpoint=fahrenheit_to_kelvin(vals["setpoint_f"]),
                category=(row["category"] or "").strip(),
            )
        except ValidationError as exc:
            raise LoadError(str(exc), path, line) from None
        if not house.burn_rate_in_band():
            warnings.warn(f"{path}, row {line}: burn rate {house.burn_rate} kg/s is outside the "
                          f"usual residential band", BurnRateWarning, stacklevel=2)
        houses.append(house)
    return houses


def load_ambient(path) -> AmbientSeries:
    """Outside temperature samples from ``ambient.csv``."""
    offsets, temps = [], []
    for line, row in read_rows(path, AMBIENT_COLUMNS):
        minutes = _number(row, "offset_minutes", path, line)
        temp = fahrenheit_to_kelvin(_number(row, "temp_f", path, line))
        if offsets and minutes * 60.0 <= offsets[-1]:
            raise LoadError("offsets must be strictly increasing", path, line)
        if not offsets and minutes != 0:
            raise LoadError("first offset must be 0", path, line)
        if temp <= 0:
            raise LoadError(f"temperature {row['temp_f']} F is below absolute zero", path, line)
        offsets.append(minutes * 60.0)
        temps.append(temp)
    return AmbientSeries(tuple(offsets), tuple(temps))


def write_fleet(houses: Sequence[HouseParams], path, temps_f: Sequence[tuple] | None = None) -> None:
    """Write ``houses.csv``.

    ``temps_f`` optionally gives the exact ``(theta0_f, setpoint_f)`` to write;
    otherwise they are converted back from K.
    """
    rows = []
    for i, h in enumerate(houses):
        t0, sp = temps_f[i] if temps_f is not None else (kelvin_to_fahrenheit(h.theta0),
                                                          kelvin_to_fahrenheit(h.setpoint))
        rows.append((h.id, h.category, h.volume, h.wall_area, h.kappa, h.burn_rate, t0, sp))
    _write(path, HOUSE_COLUMNS, rows)


def write_ambient(samples_f: Sequence[tuple], path) -> None:
    """Write ``ambient.csv`` from ``(offset_minutes, temp_f)`` pairs."""
    _write(path, AMBIENT_COLUMNS, samples_f)


def emit_demand_series(demand: AggregateDemand, grid: Grid, path) -> None:
    if len(demand) != grid.n:
        raise ShapeError(f"demand has {len(demand)} samples, grid has {grid.n} steps")
    if demand.dt_state != grid.dt_state:
        raise ShapeError("demand series and grid use different state steps")
    rows = [(k * grid.dt_state / 60.0, float(v)) for k, v in enumerate(demand.samples)]
    _write(path, DEMAND_COLUMNS, rows)


def emit_boxplot_data(deltas: Mapping[str, Mapping[str, float]], path) -> None:
    """Per-house deviations (K in, F out); scenarios in insertion order, houses by id."""
    rows = []
    for scenario, per_house in deltas.items():
        for hid in sorted(per_house):
            rows.append((scenario, hid, kelvin_dev_to_fahrenheit_dev(per_house[hid])))
    _write(path, BOXPLOT_COLUMNS, rows)


def emit_run_report(reports, path) -> None:
    """One row per :class:`~gasdr.report.stats.RunReport`, in the given order."""
    rows = []
    for r in reports:
        s = r.stats
        rows.append((r.scenario, s.mean, s.max, s.min, s.std_dev, r.total_gas,
                     r.gas_per_house, r.time_s, r.avg_gap_pct))
    _write(path, REPORT_COLUMNS, rows)


def emit_savings(rows, path) -> None:
    """Rows of ``(scenario, baseline_gas, dr_gas, fleet_size, target_size, projected)``."""
    _write(path, SAVINGS_COLUMNS, rows)
