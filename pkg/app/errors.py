"""Exception hierarchy shared by the solvers, the CLI and the HTTP surface."""

from typing import Any, Dict, Optional


class LabError(Exception):
    """Base class for every error raised by the lab."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable error body."""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class InputDomainError(LabError, ValueError):
    """An input violates an operation's contract."""


class ConfigError(InputDomainError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        details: Dict[str, Any] = {}
        if key is not None:
            details["key"] = key
        if line is not None:
            details["line"] = line
        location = ""
        if key is not None:
            location += f" (key '{key}'"
            location += f", line {line})" if line is not None else ")"
        elif line is not None:
            location += f" (line {line})"
        super().__init__(f"{message}{location}", details)
        self.key = key
        self.line = line


class SolverError(LabError):
    """A numerical procedure failed to converge."""


class CapacityProximityError(SolverError):
    """The requested density lies closer to capacity than floating point resolves."""


class BracketError(SolverError):
    """The continuation constant could not be bracketed inside its caps."""


class StepSizeError(SolverError):
    """The time step violates the advective stability limit."""

    def __init__(self, message: str, suggested_dt: float, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        details["suggested_dt"] = suggested_dt
        super().__init__(message, details)
        self.suggested_dt = suggested_dt


class FitError(SolverError):
    """A log-linear fit is undefined for the supplied data."""


class ConsistencyError(LabError):
    """An internal invariant of a computation does not hold."""
