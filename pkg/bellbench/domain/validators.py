"""
Atomic validators for measurement records and behavior tables.
Each validator has a single responsibility and can be composed.
"""

from typing import Any, Dict, List, Tuple

import numpy as np

from .models import (
    BehaviorTable, MeasurementRecordSet, ValidationResult, ValidationResultBuilder,
    SETTINGS_PER_SET,
)

ANGLE_TOLERANCE = 1e-9


class BaseValidator:
    """Base validator interface."""

    def validate(self, *args: Any, **kwargs: Any) -> ValidationResult:
        """Validate and return result."""
        raise NotImplementedError


class RecordStructureValidator(BaseValidator):
    """Checks that every set carries all 16 settings exactly once."""

    def validate(self, records: MeasurementRecordSet) -> ValidationResult:
        builder = ValidationResultBuilder()

        if len(records) == 0:
            return builder.add_error("record set is empty").build()

        seen: Dict[Tuple[int, int], int] = {}
        for record in records:
            key = (record.set_index, record.setting)
            seen[key] = seen.get(key, 0) + 1

        duplicates = sorted(key for key, count in seen.items() if count > 1)
        if duplicates:
            builder.add_error(f"duplicate (set, setting) rows: {duplicates[:5]}")

        missing = records.missing()
        if missing:
            builder.add_error(f"{len(missing)} (set, setting) rows missing, first {missing[:5]}")
            builder.set_metadata('missing', missing)

        builder.set_metadata('sets', records.sets)
        builder.set_metadata('rows', len(records))
        return builder.build()


class RecordConsistencyValidator(BaseValidator):
    """Checks angles and counts for consistency across sets."""

    def validate(self, records: MeasurementRecordSet) -> ValidationResult:
        builder = ValidationResultBuilder()

        angles: Dict[int, Tuple[float, float]] = {}
        for record in records:
            reference = angles.setdefault(record.setting, (record.alice_deg, record.bob_deg))
            if (abs(reference[0] - record.alice_deg) > ANGLE_TOLERANCE
                    or abs(reference[1] - record.bob_deg) > ANGLE_TOLERANCE):
                builder.add_warning(
                    f"set {record.set_index} setting {record.setting}: angles differ from earlier sets"
                )
            if record.coincidences > min(record.singles_a, record.singles_b):
                builder.add_warning(
                    f"set {record.set_index} setting {record.setting}: coincidences exceed singles"
                )

        durations = np.array([r.duration for r in records], dtype=float)
        if durations.size and float(np.ptp(durations)) > 1e-3 * float(np.mean(durations)):
            builder.add_warning("acquisition intervals vary by more than 0.1%")

        self._validate_totals(records, builder)
        return builder.build()

    def _validate_totals(self, records: MeasurementRecordSet, builder: ValidationResultBuilder) -> None:
        totals = records.coincidence_totals()
        empty: List[int] = [j for j in range(4) if int(totals[4 * j:4 * j + 4].sum()) == 0]
        for j in empty:
            builder.add_error(f"correlation {j} (settings {4 * j}-{4 * j + 3}) has zero coincidences")
        builder.set_metadata('coincidences', int(totals.sum()))
        builder.set_metadata('settings', SETTINGS_PER_SET)


class BehaviorTableValidator(BaseValidator):
    """Reports normalization and positivity margins of a behavior table."""

    def validate(self, table: BehaviorTable) -> ValidationResult:
        builder = ValidationResultBuilder()
        deviation = float(np.max(np.abs(table.p.sum(axis=(2, 3)) - 1.0)))
        min_value = float(np.min(table.p))
        if min_value < 0.0:
            builder.add_warning(f"entries slightly negative (min {min_value:.3g}) within tolerance")
        builder.set_metadata('max_normalization_deviation', deviation)
        builder.set_metadata('min_entry', min_value)
        return builder.build()


class CompositeValidator(BaseValidator):
    """Composite validator that runs multiple validators."""

    def __init__(self, validators: List[BaseValidator]):
        self.validators = validators

    def validate(self, *args: Any, **kwargs: Any) -> ValidationResult:
        """Run all validators and combine results."""
        builder = ValidationResultBuilder()

        for validator in self.validators:
            result = validator.validate(*args, **kwargs)
            for error in result.errors:
                builder.add_error(error)
            for warning in result.warnings:
                builder.add_warning(warning)
            for key, value in result.metadata.items():
                builder.set_metadata(key, value)

        return builder.build()


def create_record_validator() -> CompositeValidator:
    """Validator used before analyzing a record set."""
    return CompositeValidator([RecordStructureValidator(), RecordConsistencyValidator()])
