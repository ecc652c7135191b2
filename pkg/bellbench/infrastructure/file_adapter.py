"""
File system adapter - isolates file I/O operations.
Records CSV, report JSON, behavior tables and scan traces; every write goes to a
temporary file in the target directory and is renamed into place.
"""

from typing import Any, Dict, List, Optional
from pathlib import Path
import csv
import io
import json
import math
import os
import tempfile

from ..exceptions import CSVError, DataError, OutputError, ValidationError
from ..domain.models import BehaviorTable, MeasurementRecord, MeasurementRecordSet, ScanTrace

RECORD_HEADERS = ["set", "setting", "alice_deg", "bob_deg", "duration_s", "singles_a", "singles_b", "coincidences"]
SCAN_HEADERS = ["angle_deg", "coincidences"]


def format_float(value: float) -> str:
    """Shortest round-tripping representation, '.' decimal separator."""
    return repr(float(value))


def json_safe(value: Any) -> Any:
    """Replace non-finite floats with None so the document stays strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


class FileAdapter:
    """Adapter for file system operations."""

    def atomic_write_text(self, file_path: Path, content: str) -> Path:
        """Write content to a temporary sibling, then rename over the target."""
        try:
            file_path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(prefix=f".{file_path.name}.", dir=str(file_path.parent))
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                    f.write(content)
                os.replace(tmp_name, file_path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as e:
            raise OutputError(f"Cannot write {file_path}: {e.strerror or e}", path=str(file_path)) from e
        return file_path

    # ------------------------------------------------------------------
    # Records CSV
    # ------------------------------------------------------------------

    def records_to_csv(self, records: MeasurementRecordSet) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(RECORD_HEADERS)
        for r in records:
            writer.writerow([r.set_index, r.setting, format_float(r.alice_deg), format_float(r.bob_deg),
                             format_float(r.duration), r.singles_a, r.singles_b, r.coincidences])
        return buffer.getvalue()

    def write_records(self, file_path: Path, records: MeasurementRecordSet) -> Path:
        return self.atomic_write_text(file_path, self.records_to_csv(records))

    def read_records(self, file_path: Path) -> MeasurementRecordSet:
        """Parse a records CSV; errors carry the file path and line number."""
        try:
            with open(file_path, "r", newline="", encoding="utf-8") as f:
                rows = list(csv.reader(f))
        except FileNotFoundError as e:
            raise CSVError("file not found", file_path=str(file_path)) from e
        except (OSError, UnicodeDecodeError) as e:
            raise CSVError(f"cannot read file: {e}", file_path=str(file_path)) from e

        if not rows:
            raise CSVError("empty file, expected a header row", file_path=str(file_path), line_number=1)
        header = [h.strip() for h in rows[0]]
        if header != RECORD_HEADERS:
            raise CSVError(f"header must be {','.join(RECORD_HEADERS)}", file_path=str(file_path), line_number=1)

        records: List[MeasurementRecord] = []
        for line_number, row in enumerate(rows[1:], start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            records.append(self._parse_record(row, str(file_path), line_number))
        return MeasurementRecordSet(tuple(records))

    def _parse_record(self, row: List[str], file_path: str, line_number: int) -> MeasurementRecord:
        if len(row) != len(RECORD_HEADERS):
            raise CSVError(f"expected {len(RECORD_HEADERS)} fields, got {len(row)}",
                           file_path=file_path, line_number=line_number)
        values: Dict[str, Any] = {}
        for name, cell in zip(RECORD_HEADERS, row):
            try:
                if name in ("alice_deg", "bob_deg", "duration_s"):
                    values[name] = float(cell)
                else:
                    values[name] = int(cell)
            except ValueError as e:
                raise CSVError(f"column '{name}': cannot parse '{cell}'",
                               file_path=file_path, line_number=line_number) from e
        try:
            return MeasurementRecord(
                set_index=values["set"], setting=values["setting"],
                alice_deg=values["alice_deg"], bob_deg=values["bob_deg"], duration=values["duration_s"],
                singles_a=values["singles_a"], singles_b=values["singles_b"], coincidences=values["coincidences"],
            )
        except ValidationError as e:
            raise CSVError(f"column '{e.field}': {e.message}", file_path=file_path, line_number=line_number) from e

    # ------------------------------------------------------------------
    # JSON documents
    # ------------------------------------------------------------------

    def dumps_json(self, data: Dict[str, Any]) -> str:
        return json.dumps(json_safe(data), indent=2, allow_nan=False) + "\n"

    def write_json(self, file_path: Path, data: Dict[str, Any]) -> Path:
        return self.atomic_write_text(file_path, self.dumps_json(data))

    def read_json(self, file_path: Path) -> Dict[str, Any]:
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise DataError(f"{file_path}: file not found", {"path": str(file_path)}) from e
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"{file_path}: cannot parse JSON: {e}", {"path": str(file_path)}) from e
        if not isinstance(data, dict):
            raise DataError(f"{file_path}: expected a JSON object", {"path": str(file_path)})
        return data

    def read_behavior(self, file_path: Path) -> BehaviorTable:
        return BehaviorTable.from_dict(self.read_json(file_path))

    def write_behavior(self, file_path: Path, table: BehaviorTable) -> Path:
        return self.write_json(file_path, table.to_dict())

    # ------------------------------------------------------------------
    # Scan traces
    # ------------------------------------------------------------------

    def write_scan(self, file_path: Path, trace: ScanTrace) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(SCAN_HEADERS)
        for angle, count in trace.points:
            writer.writerow([format_float(angle), format_float(count)])
        return self.atomic_write_text(file_path, buffer.getvalue())

    def ensure_directory(self, dir_path: Path) -> Path:
        try:
            dir_path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create directory {dir_path}: {e.strerror or e}", path=str(dir_path)) from e
        if not os.access(dir_path, os.W_OK):
            raise OutputError(f"Directory is not writable: {dir_path}", path=str(dir_path))
        return dir_path


def create_file_adapter() -> FileAdapter:
    """Factory function to create file adapter."""
    return FileAdapter()
