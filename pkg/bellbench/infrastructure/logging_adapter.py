"""
Logging adapter - binds the structured logger to one run.
Application services log through it so tests can point it at a temp directory.
"""

from typing import Any, Dict, Optional
from pathlib import Path

from ..logger import StructuredLogger


class LoggingAdapter:
    """Adapter for structured logging operations."""

    def __init__(self, run_id: Optional[str] = None, log_dir: Optional[Path] = None):
        self.logger = StructuredLogger(log_dir=log_dir, run_id=run_id)

    def info(self, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.logger.info(event, data)

    def warning(self, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.logger.warning(event, data)

    def error(self, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.logger.error(event, data)

    def log_file_written(self, path: Path, kind: str) -> None:
        self.logger.log_file_written(path, kind)

    def log_analysis_result(self, s: float, sigma: float, n_total: int, grinbaum_z: float) -> None:
        self.logger.log_analysis_result(s, sigma, n_total, grinbaum_z)

    def log_budget(self, terms: Dict[str, float], total: float, dominant: str) -> None:
        self.logger.log_budget(terms, total, dominant)

    @property
    def structured(self) -> StructuredLogger:
        """The underlying logger, for domain helpers that take one directly."""
        return self.logger

    @property
    def run_id(self) -> str:
        """Get the run ID."""
        return self.logger.run_id

    @property
    def log_file(self) -> Path:
        """Get the log file path."""
        return self.logger.log_file


def create_logging_adapter(run_id: Optional[str] = None, log_dir: Optional[Path] = None) -> LoggingAdapter:
    """Factory function to create logging adapter."""
    return LoggingAdapter(run_id=run_id, log_dir=log_dir)
