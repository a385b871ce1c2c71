"""File ingestion, statistics and result emission."""
from .generate import CATEGORIES, generate_fleet, polar_vortex_profile, typical_day_profile
from .io import (
    AMBIENT_COLUMNS,
    BOXPLOT_COLUMNS,
    DEMAND_COLUMNS,
    HOUSE_COLUMNS,
    REPORT_COLUMNS,
    SAVINGS_COLUMNS,
    BurnRateWarning,
    emit_boxplot_data,
    emit_demand_series,
    emit_run_report,
    emit_savings,
    load_ambient,
    load_fleet,
    read_rows,
    write_ambient,
    write_fleet,
)
from .stats import DeviationStats, RunReport, deviation_stats, make_report, savings_projection
