"""
Run configuration: pydantic models, presets and environment settings.

A configuration document is JSON. It may name a preset; the preset supplies the
base document and the remaining keys override it section by section.
"""

from typing import Any, Dict, List, Literal, Optional
from pathlib import Path
import copy
import hashlib
import json
import os

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from ..exceptions import ConfigurationError, ValidationError
from ..domain.models import (
    AccidentalConvention, ActuatorParams, ApparatusParams, ChshAngles, CoincidenceWindow,
    CorrelationModel, DetectorParams, ExperimentPlan, SourceParams, TimingParams,
    SETTINGS_PER_SET,
)

THREADS_ENV_VAR = "BELLBENCH_THREADS"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SourceConfig(_Section):
    """Either pre-polarizer singles rates or detected singles (dark counts included)."""
    pair_rate: float = Field(ge=0)
    singles_rate_a: Optional[float] = Field(default=None, ge=0)
    singles_rate_b: Optional[float] = Field(default=None, ge=0)
    detected_singles_a: Optional[float] = Field(default=None, ge=0)
    detected_singles_b: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _one_rate_form(self) -> 'SourceConfig':
        direct = self.singles_rate_a is not None and self.singles_rate_b is not None
        detected = self.detected_singles_a is not None and self.detected_singles_b is not None
        if direct == detected:
            raise ValueError("give either singles_rate_a/b or detected_singles_a/b")
        return self


class DetectorConfig(_Section):
    efficiency: float = Field(default=1.0, ge=0, le=1)
    dark_rate: float = Field(default=0.0, ge=0)
    dead_time: float = Field(default=0.0, ge=0)


class WindowConfig(_Section):
    half_width: float = Field(gt=0)


class TimingConfig(_Section):
    interval: float = Field(default=60.0, gt=0)
    jitter: float = Field(default=0.0, ge=0)
    clock_drift: float = Field(default=0.0, ge=0)


class ActuatorConfig(_Section):
    resolution: float = Field(default=0.1, ge=0)
    wedge_amplitude: float = Field(default=0.0, ge=0, lt=1)


class ModelConfig(_Section):
    v_hv: float = Field(default=1.0, ge=0, le=1)
    v_45: float = Field(default=1.0, ge=0, le=1)
    misalign_a: float = 0.0
    misalign_b: float = 0.0


class AnglesConfig(_Section):
    a0: float
    a1: float
    b0: float
    b1: float


class PlanConfig(_Section):
    angles: AnglesConfig
    sets: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    setting_order: Optional[List[int]] = None

    @model_validator(mode="after")
    def _order_is_permutation(self) -> 'PlanConfig':
        if self.setting_order is not None and sorted(self.setting_order) != list(range(SETTINGS_PER_SET)):
            raise ValueError("setting_order must be a permutation of 0..15")
        return self


class RunConfig(_Section):
    """Complete, validated run configuration."""
    preset: Optional[Literal["paper", "lab", "ideal"]] = None
    source: SourceConfig
    detector_a: DetectorConfig
    detector_b: DetectorConfig
    window: WindowConfig
    timing: TimingConfig
    actuator: ActuatorConfig
    model: ModelConfig
    plan: PlanConfig
    accidental_convention: Literal["half", "full"] = "half"
    mode: Literal["event", "aggregate"] = "aggregate"
    angle_samples: int = Field(default=20000, ge=1000)
    angle_seed: int = Field(default=0, ge=0)
    output_dir: Optional[str] = None

    def correlation_model(self) -> CorrelationModel:
        return CorrelationModel(**self.model.model_dump())

    def to_apparatus(self) -> ApparatusParams:
        """Domain parameters; invariant violations surface as configuration errors."""
        try:
            det_a = DetectorParams(**self.detector_a.model_dump())
            det_b = DetectorParams(**self.detector_b.model_dump())
            if self.source.detected_singles_a is not None and self.source.detected_singles_b is not None:
                source = SourceParams.from_detected(self.source.pair_rate,
                                                    self.source.detected_singles_a, self.source.detected_singles_b,
                                                    det_a.dark_rate, det_b.dark_rate)
            else:
                source = SourceParams(self.source.pair_rate, self.source.singles_rate_a or 0.0,
                                      self.source.singles_rate_b or 0.0)
            return ApparatusParams(
                source=source,
                det_a=det_a,
                det_b=det_b,
                window=CoincidenceWindow(self.window.half_width),
                timing=TimingParams(**self.timing.model_dump()),
                actuator=ActuatorParams(**self.actuator.model_dump()),
                model=self.correlation_model(),
                convention=AccidentalConvention.from_string(self.accidental_convention),
            )
        except ValidationError as e:
            raise ConfigurationError(f"Invalid configuration: {e.message}", key=e.field) from e

    def to_plan(self) -> ExperimentPlan:
        angles = self.plan.angles
        order = tuple(self.plan.setting_order) if self.plan.setting_order else tuple(range(SETTINGS_PER_SET))
        return ExperimentPlan(
            angles=ChshAngles.from_degrees(angles.a0, angles.a1, angles.b0, angles.b1),
            sets=self.plan.sets,
            interval=self.timing.interval,
            seed=self.plan.seed,
            setting_order=order,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def with_overrides(self, seed: Optional[int] = None, sets: Optional[int] = None,
                       mode: Optional[str] = None, output_dir: Optional[str] = None) -> 'RunConfig':
        """Apply command-line overrides and re-validate."""
        document = self.model_dump(mode="json")
        if seed is not None:
            document["plan"]["seed"] = seed
        if sets is not None:
            document["plan"]["sets"] = sets
        if mode is not None:
            document["mode"] = mode
        if output_dir is not None:
            document["output_dir"] = output_dir
        return validate_document(document)


LAB_PRESET: Dict[str, Any] = {
    "preset": "lab",
    "source": {"pair_rate": 449.0, "detected_singles_a": 4840.0, "detected_singles_b": 3450.0},
    "detector_a": {"efficiency": 0.4, "dark_rate": 91.7, "dead_time": 1.6e-6},
    "detector_b": {"efficiency": 0.4, "dark_rate": 106.2, "dead_time": 1.6e-6},
    "window": {"half_width": 1.2e-9},
    "timing": {"interval": 60.0, "jitter": 100e-9, "clock_drift": 1e-7},
    "actuator": {"resolution": 0.1, "wedge_amplitude": 0.0},
    "model": {"v_hv": 0.9999, "v_45": 0.9999, "misalign_a": 0.0, "misalign_b": 1.0},
    "plan": {"angles": {"a0": 1.9, "a1": 46.8, "b0": 22.9, "b1": 67.7}, "sets": 312, "seed": 2007},
    "accidental_convention": "half",
    "mode": "aggregate",
}

IDEAL_PRESET: Dict[str, Any] = {
    "preset": "ideal",
    "source": {"pair_rate": 1000.0, "singles_rate_a": 1000.0, "singles_rate_b": 1000.0},
    "detector_a": {"efficiency": 1.0, "dark_rate": 0.0, "dead_time": 0.0},
    "detector_b": {"efficiency": 1.0, "dark_rate": 0.0, "dead_time": 0.0},
    "window": {"half_width": 1.2e-9},
    "timing": {"interval": 60.0, "jitter": 0.0, "clock_drift": 0.0},
    "actuator": {"resolution": 0.0, "wedge_amplitude": 0.0},
    "model": {"v_hv": 1.0, "v_45": 1.0, "misalign_a": 0.0, "misalign_b": 0.0},
    "plan": {"angles": {"a0": 0.0, "a1": 45.0, "b0": 22.5, "b1": 67.5}, "sets": 1, "seed": 0},
    "accidental_convention": "half",
    "mode": "aggregate",
}

# "lab" names the same calibrated operating point as "paper".
PRESETS: Dict[str, Dict[str, Any]] = {
    "paper": {**LAB_PRESET, "preset": "paper"},
    "lab": LAB_PRESET,
    "ideal": IDEAL_PRESET,
}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; override wins, nested sections merge key by key."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def validate_document(document: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(document)
    except PydanticValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ConfigurationError(f"Invalid configuration at '{key}': {first['msg']}", key=key) from e


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigurationError(f"Unknown preset '{name}' (choose from {sorted(PRESETS)})", key="preset")
    return validate_document(PRESETS[name])


def load_config(path: Optional[Path] = None, preset: Optional[str] = None) -> RunConfig:
    """Load a configuration file, a preset, or a file layered over a preset.

    With neither a path nor a preset the paper preset is used.
    """
    if path is None:
        return preset_config(preset or "paper")
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Configuration file not found: {path}", path=str(path)) from e
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read configuration {path}: {e}", path=str(path)) from e
    if not isinstance(document, dict):
        raise ConfigurationError("Configuration must be a JSON object", path=str(path))

    base_name = preset or document.get("preset")
    if base_name is not None:
        if base_name not in PRESETS:
            raise ConfigurationError(f"Unknown preset '{base_name}'", key="preset", path=str(path))
        document = deep_merge(PRESETS[base_name], document)
    try:
        return validate_document(document)
    except ConfigurationError as e:
        e.path = str(path)
        e.details["path"] = str(path)
        raise


def worker_count() -> Optional[int]:
    """Thread cap from BELLBENCH_THREADS; None leaves the executor default."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be an integer, got '{raw}'", key=THREADS_ENV_VAR) from e
    if value < 1:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be >= 1", key=THREADS_ENV_VAR)
    return value
