"""
Run log for bellbench.

Every simulate/analyze/optimize invocation appends newline-delimited JSON to
``<log_dir>/bellbench-YYYYMMDD.log.jsonl``; each line carries the run id so
interleaved runs sharing a directory can be told apart.
"""

import json
import uuid
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

Level = Literal["info", "warning", "error"]


@dataclass(frozen=True)
class LogEntry:
    """One line of the run log."""
    ts: str  # RFC3339 UTC
    run_id: str
    level: Level
    event: str
    data: Optional[Dict[str, Any]] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"), default=str)

    @classmethod
    def from_json(cls, line: str) -> "LogEntry":
        return cls(**json.loads(line))


def default_log_dir() -> Path:
    return Path("./runs") / datetime.now().strftime("%Y-%m-%d")


class StructuredLogger:
    """Append-only JSON-lines log bound to one run id."""

    def __init__(self, log_dir: Optional[Path] = None, run_id: Optional[str] = None):
        self.run_id = run_id or uuid.uuid4().hex[:8]
        self.log_dir = log_dir or default_log_dir()
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.log_file = self.log_dir / f"bellbench-{datetime.now().strftime('%Y%m%d')}.log.jsonl"

    def _log(self, level: Level, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        entry = LogEntry(ts=datetime.now(timezone.utc).isoformat(), run_id=self.run_id,
                         level=level, event=event, data=data)
        with open(self.log_file, "a", encoding="utf-8") as f:
            f.write(entry.to_json() + "\n")

    def info(self, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        self._log("info", event, data)

    def warning(self, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        self._log("warning", event, data)

    def error(self, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        self._log("error", event, data)

    def entries(self) -> List[LogEntry]:
        """Entries written under this run id, oldest first."""
        if not self.log_file.exists():
            return []
        lines = self.log_file.read_text(encoding="utf-8").splitlines()
        return [e for e in (LogEntry.from_json(line) for line in lines if line) if e.run_id == self.run_id]

    # Simulation

    def log_set_completed(self, set_index: int, coincidences: int, singles_a: int, singles_b: int) -> None:
        """Totals of one complete 16-setting set."""
        self.info("set_completed", {"set": set_index, "coincidences": coincidences,
                                    "singles_a": singles_a, "singles_b": singles_b})

    # Optimization

    def log_optimizer_round(self, round_index: int, angles: Sequence[float], max_change: float) -> None:
        self.info("optimizer_round", {"round": round_index, "angles": list(angles), "max_change": max_change})

    def log_optimizer_complete(self, angles: Sequence[float], iterations: int, converged: bool) -> None:
        level: Level = "info" if converged else "warning"
        self._log(level, "optimizer_complete",
                  {"angles": list(angles), "iterations": iterations, "converged": converged})

    # Analysis and output

    def log_analysis_result(self, s: float, sigma: float, n_total: int, grinbaum_z: float) -> None:
        self.info("analysis_complete", {"s": s, "sigma": sigma, "n_total": n_total, "grinbaum_z": grinbaum_z})

    def log_budget(self, terms: Dict[str, float], total: float, dominant: str) -> None:
        self.info("budget_computed", {"terms": terms, "total": total, "dominant": dominant})

    def log_file_written(self, path: Path, kind: str) -> None:
        self.info("file_written", {"path": str(path), "kind": kind})
