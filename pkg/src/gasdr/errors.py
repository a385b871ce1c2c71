"""Exception hierarchy shared by every module of the engine."""


class GasDRError(Exception):
    """Base class for all engine errors."""


class ValidationError(GasDRError, ValueError):
    """An input value violates a documented invariant."""


class ConfigurationError(ValidationError):
    """A grid, solver or scenario configuration is inconsistent."""


class ShapeError(ValidationError):
    """Array lengths or counts do not line up (schedule vs grid, fleet vs schedules)."""


class OutOfRangeError(ValidationError):
    """A query falls outside the covered interval of a series."""


class LoadError(GasDRError):
    """A data file could not be parsed into validated domain objects."""

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = ""
        if path is not None:
            where = f"{path}"
            if row is not None:
                where += f", row {row}"
            where += ": "
        super().__init__(where + message)


class SolverError(GasDRError):
    """The LP/MILP machinery failed numerically (e.g. singular basis)."""


class ConsistencyError(GasDRError):
    """Internal cross-check failed (MILP states vs re-simulation, peak guard)."""
