"""Exception classes for the Bell-test simulation and analysis toolkit."""

from typing import Dict, Any, List, Optional, Tuple


class BellBenchError(Exception):
    """Base exception for all bellbench errors."""

    exit_code: int = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        return self.message


class ConfigurationError(BellBenchError):
    """Raised when a run configuration is invalid or missing."""

    exit_code = 3

    def __init__(self, message: str, key: Optional[str] = None, path: Optional[str] = None):
        details = {"key": key, "path": path}
        super().__init__(message, details)
        self.key = key
        self.path = path


class ValidationError(BellBenchError):
    """Raised when a domain invariant is violated."""

    exit_code = 4

    def __init__(self, message: str, field: Optional[str] = None, value: Optional[Any] = None):
        details = {"field": field, "value": value}
        super().__init__(message, details)
        self.field = field
        self.value = value


class DataError(BellBenchError):
    """Raised when measurement data cannot be processed."""

    exit_code = 4


class CSVError(DataError):
    """Raised when a records CSV cannot be parsed."""

    def __init__(self, message: str, file_path: Optional[str] = None, line_number: Optional[int] = None):
        location = ""
        if file_path is not None:
            location = f"{file_path}:{line_number}: " if line_number is not None else f"{file_path}: "
        super().__init__(location + message, {"file_path": file_path, "line_number": line_number})
        self.file_path = file_path
        self.line_number = line_number


class IncompleteRecordError(DataError):
    """Raised when a record set lacks some of the 16 settings."""

    def __init__(self, message: str, missing: Optional[List[Tuple[int, int]]] = None):
        super().__init__(message, {"missing": missing or []})
        self.missing = missing or []


class UndefinedCorrelationError(DataError):
    """Raised when a correlation has no counts to estimate it from."""

    def __init__(self, message: str, setting: Optional[int] = None):
        super().__init__(message, {"setting": setting})
        self.setting = setting


class PreconditionError(DataError):
    """Raised when an input violates an operation's precondition."""


class FitError(DataError):
    """Raised when a fringe fit is degenerate or fails."""


class NonConvergenceError(BellBenchError):
    """Raised when the angle optimizer hits its round cap.

    The best-so-far angles travel with the exception so callers can still write them out.
    """

    exit_code = 5

    def __init__(self, message: str, best: Optional[Any] = None):
        super().__init__(message, {"best": best})
        self.best = best


class OutputError(BellBenchError):
    """Raised for output I/O problems."""

    exit_code = 6

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, {"path": path})
        self.path = path


def format_error_message(error: Exception) -> str:
    """Format error message for user display."""
    if isinstance(error, BellBenchError):
        return str(error)
    else:
        return f"Unexpected error: {error}"
