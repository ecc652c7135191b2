"""
Application services.
Coordinates domain operations with the file and logging adapters for the
simulate, analyze, optimize, bounds and budget commands.
"""

from typing import Any, Dict, List, Optional
from pathlib import Path
from dataclasses import dataclass, field
from datetime import datetime, timezone
import math

from .. import __version__
from ..exceptions import (
    FitError, IncompleteRecordError, NonConvergenceError, UndefinedCorrelationError, ValidationError,
)
from ..domain.apparatus import accidental_rate, expected_chsh, expected_records, mean_singles
from ..domain.bounds import (
    bound_constants, bound_report, chsh_of_behavior, is_no_signaling,
)
from ..domain.budget import full_budget
from ..domain.estimators import correlation_table, estimate_s, estimate_visibility
from ..domain.models import (
    AccidentalConvention, ApparatusParams, BehaviorTable, BoundReport, ChshAngles, ErrorBudget,
    MeasurementRecordSet, OptimizedAngles, SResult, VisibilityEstimate, SIGN_CONVENTION,
)
from ..domain.quantum import model_chsh
from ..domain.validators import BehaviorTableValidator, create_record_validator
from ..infrastructure.config import RunConfig, worker_count
from ..infrastructure.file_adapter import FileAdapter, create_file_adapter
from ..infrastructure.logging_adapter import LoggingAdapter
from .event_sim import SimulationMode, simulate_records
from .optimizer import ModelOracle, SimulatedOracle, optimize

RECORDS_FILENAME = "records.csv"
REPORT_FILENAME = "report.json"
ANGLES_FILENAME = "optimized_angles.json"
DEFAULT_OPTIMIZER_RESOLUTION = 0.1

ACCIDENTALS_NOTE = (
    "the standard window is 2*half_width ('full'); the quoted accidental rate matches "
    "half_width ('half'). The event simulator counts |tA - tB| <= half_width, which is 'full'."
)


def truncate_1dp(value: float) -> float:
    """One decimal, truncated toward zero (4.35 sigma is quoted as 4.3)."""
    if not math.isfinite(value):
        return value
    return math.trunc(value * 10.0) / 10.0


@dataclass
class ReportDocument:
    """The JSON report; sections keep a fixed order."""
    s_result: SResult
    budget: ErrorBudget
    bounds: BoundReport
    visibilities: Dict[str, Any]
    accidentals: Dict[str, Any]
    model_prediction: Dict[str, float]
    provenance: Dict[str, Any]
    command: str = "analyze"

    def to_dict(self) -> Dict[str, Any]:
        s = self.s_result
        return {
            "tool": {"name": "bellbench", "version": __version__, "command": self.command},
            "s_result": {
                "s": s.s,
                "abs_s": s.abs_s,
                "sigma": self.budget.total,
                "sigma_counting": s.sigma,
                "n_total": s.n_total,
                "sign_convention": SIGN_CONVENTION,
                "correlations": [
                    {"label": label, "e": e, "sigma": sigma, "n_total": n}
                    for label, e, sigma, n in correlation_table(s)
                ],
            },
            "error_budget": {
                **self.budget.terms(),
                "total": self.budget.total,
                "total_with_clock": self.budget.total_with_clock,
                "dominant": self.budget.dominant_term,
                "excluded_from_total": ["ds_c", "ds_e"],
            },
            "bounds": {
                "s": self.bounds.s,
                "sigma": self.bounds.sigma,
                "z_local": self.bounds.z_local,
                "z_grinbaum": self.bounds.z_grinbaum,
                "z_grinbaum_reported": truncate_1dp(self.bounds.z_grinbaum),
                "tsirelson_gap": self.bounds.tsirelson_gap,
                "gap_sigmas": self.bounds.gap_sigmas,
                "constants": bound_constants(),
            },
            "visibilities": self.visibilities,
            "accidentals": self.accidentals,
            "model_prediction": self.model_prediction,
            "provenance": self.provenance,
        }


@dataclass
class SimulationReport:
    records: MeasurementRecordSet
    report: ReportDocument
    records_path: Optional[Path] = None
    report_path: Optional[Path] = None


@dataclass
class OptimizationReport:
    angles: OptimizedAngles
    s_found: float
    s_canonical: float
    visibilities: Dict[str, Optional[float]] = field(default_factory=dict)
    angles_path: Optional[Path] = None
    scan_paths: List[Path] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        a = self.angles
        return {
            "angles": {"a0": a.a0, "b0": a.b0, "a1": a.a1, "b1": a.b1},
            "iterations": a.iterations,
            "converged": a.converged,
            "s_found": self.s_found,
            "s_canonical": self.s_canonical,
            "visibilities": self.visibilities,
        }


@dataclass
class BoundsReport:
    chsh: float
    no_signaling: bool
    max_violation: float
    normalization_deviation: float
    gaps: Dict[str, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chsh": self.chsh,
            "abs_chsh": abs(self.chsh),
            "no_signaling": self.no_signaling,
            "max_violation": self.max_violation,
            "normalization_deviation": self.normalization_deviation,
            "gaps": self.gaps,
        }


def accidentals_section(params: ApparatusParams, angles: ChshAngles) -> Dict[str, Any]:
    ra, rb = mean_singles(params, angles)
    return {
        "singles_a": ra,
        "singles_b": rb,
        "half_width": params.window.half_width,
        "half": accidental_rate(ra, rb, params.window, AccidentalConvention.HALF),
        "full": accidental_rate(ra, rb, params.window, AccidentalConvention.FULL),
        "convention": params.convention.value,
        "note": ACCIDENTALS_NOTE,
    }


class AnalysisService:
    """Estimate S, its budget and its significance from a record set."""

    def __init__(self, config: RunConfig, log: Optional[LoggingAdapter] = None):
        self.config = config
        self.params = config.to_apparatus()
        self.log = log

    def validate(self, records: MeasurementRecordSet) -> None:
        result = create_record_validator().validate(records)
        if self.log is not None:
            for warning in result.warnings:
                self.log.warning("record_warning", {"message": warning})
        if result.is_valid:
            return
        missing = result.metadata.get("missing", [])
        if missing:
            raise IncompleteRecordError("; ".join(result.errors), missing=missing)
        totals = records.coincidence_totals()
        for j in range(4):
            if int(totals[4 * j:4 * j + 4].sum()) == 0:
                raise UndefinedCorrelationError(
                    f"correlation undefined: zero coincidences in settings {4 * j}-{4 * j + 3}", setting=4 * j)
        raise IncompleteRecordError("; ".join(result.errors))

    def analyze(self, records: MeasurementRecordSet, command: str = "analyze") -> ReportDocument:
        self.validate(records)
        s_result = estimate_s(records)
        angles = records.base_angles()
        budget = full_budget(records, self.params, angles=angles,
                             n_samples=self.config.angle_samples, seed=self.config.angle_seed)
        bounds = bound_report(s_result, sigma=budget.total if budget.total > 0 else None)
        model = self.params.model
        report = ReportDocument(
            s_result=s_result,
            budget=budget,
            bounds=bounds,
            visibilities={"v_hv": model.v_hv, "v_45": model.v_45, "source": "model"},
            accidentals=accidentals_section(self.params, angles),
            model_prediction={
                "expected_chsh": expected_chsh(self.params, angles),
                "model_chsh": model_chsh(model, angles),
            },
            provenance={
                "config_hash": self.config.config_hash(),
                "seed": self.config.plan.seed,
                "sets": records.sets,
                "mode": self.config.mode,
                "version": __version__,
                "generated_at": datetime.now(timezone.utc).isoformat(),
            },
            command=command,
        )
        if self.log is not None:
            self.log.log_analysis_result(s_result.s, budget.total, s_result.n_total, bounds.z_grinbaum)
            self.log.log_budget(budget.terms(), budget.total, budget.dominant_term)
        return report


class SimulationService:
    """Run the configured simulation and analyze its records."""

    def __init__(self, config: RunConfig, files: Optional[FileAdapter] = None,
                 log: Optional[LoggingAdapter] = None):
        self.config = config
        self.params = config.to_apparatus()
        self.files = files or create_file_adapter()
        self.log = log

    def simulate(self) -> MeasurementRecordSet:
        plan = self.config.to_plan()
        if self.log is not None:
            self.log.info("simulation_started", {"mode": self.config.mode, "sets": plan.sets, "seed": plan.seed})
        records = simulate_records(self.params, plan, SimulationMode.from_string(self.config.mode),
                                   max_workers=worker_count(),
                                   logger=self.log.structured if self.log is not None else None)
        if self.log is not None:
            self.log.info("simulation_complete", {"records": len(records),
                                                  "coincidences": int(records.coincidence_totals().sum())})
        return records

    def run(self, out_dir: Optional[Path] = None) -> SimulationReport:
        records = self.simulate()
        report = AnalysisService(self.config, self.log).analyze(records, command="simulate")
        result = SimulationReport(records=records, report=report)
        if out_dir is not None:
            self.files.ensure_directory(out_dir)
            result.records_path = self.files.write_records(out_dir / RECORDS_FILENAME, records)
            result.report_path = self.files.write_json(out_dir / REPORT_FILENAME, report.to_dict())
            if self.log is not None:
                self.log.log_file_written(result.records_path, "records")
                self.log.log_file_written(result.report_path, "report")
        return result


class OptimizationService:
    """Coordinate scans against the model or the event simulator."""

    def __init__(self, config: RunConfig, files: Optional[FileAdapter] = None,
                 log: Optional[LoggingAdapter] = None):
        self.config = config
        self.params = config.to_apparatus()
        self.files = files or create_file_adapter()
        self.log = log

    def resolution(self) -> float:
        resolution = self.params.actuator.resolution
        return resolution if resolution > 0 else DEFAULT_OPTIMIZER_RESOLUTION

    def run(self, dwell: float = 10.0, oracle_kind: str = "model", noisy: bool = False,
            max_rounds: int = 10, out_dir: Optional[Path] = None) -> OptimizationReport:
        seed = self.config.plan.seed
        if oracle_kind == "simulated":
            oracle: Any = SimulatedOracle(self.params, seed=seed)
        else:
            oracle = ModelOracle(self.params, seed=seed if noisy else None)
        if out_dir is not None:
            self.files.ensure_directory(out_dir)
        angles = optimize(oracle, self.resolution(), dwell, max_rounds=max_rounds,
                          logger=self.log.structured if self.log is not None else None)
        report = OptimizationReport(
            angles=angles,
            s_found=expected_chsh(self.params, angles.as_chsh_angles()),
            s_canonical=expected_chsh(self.params, ChshAngles.canonical()),
            visibilities=self._final_visibilities(angles),
        )
        if out_dir is not None:
            self._write(report, out_dir)
        if not angles.converged:
            raise NonConvergenceError(
                f"optimizer did not converge within {max_rounds} rounds", best=report.to_dict())
        return report

    def _final_visibilities(self, angles: OptimizedAngles) -> Dict[str, Optional[float]]:
        coarse = [t for t in angles.traces if t.label.endswith("-coarse")]
        result: Dict[str, Optional[float]] = {}
        for trace in coarse[-2:]:
            key = "scan_b" if trace.fixed_side == "a" else "scan_a"
            try:
                estimate: VisibilityEstimate = estimate_visibility(list(trace.points))
                result[key] = estimate.v
                result[f"{key}_sigma"] = estimate.sigma
            except (FitError, ValidationError) as e:
                if self.log is not None:
                    self.log.warning("visibility_fit_failed", {"trace": trace.label, "error": str(e)})
                result[key] = None
        return result

    def _write(self, report: OptimizationReport, out_dir: Path) -> None:
        report.angles_path = self.files.write_json(out_dir / ANGLES_FILENAME, report.to_dict())
        for trace in report.angles.traces:
            report.scan_paths.append(self.files.write_scan(out_dir / f"scan_{trace.label}.csv", trace))
        if self.log is not None:
            self.log.log_file_written(report.angles_path, "optimized_angles")


class BoundsService:
    """CHSH value, no-signaling verdict and bound gaps of a behavior table."""

    def evaluate(self, table: BehaviorTable) -> BoundsReport:
        chsh = chsh_of_behavior(table)
        verdict = is_no_signaling(table)
        validation = BehaviorTableValidator().validate(table)
        constants = bound_constants()
        return BoundsReport(
            chsh=chsh,
            no_signaling=verdict.ok,
            max_violation=verdict.max_violation,
            normalization_deviation=validation.metadata["max_normalization_deviation"],
            gaps={name: value - abs(chsh) for name, value in constants.items()},
        )


class BudgetService:
    """Error budget for recorded data or, without records, the noise-free expectation."""

    def __init__(self, config: RunConfig, log: Optional[LoggingAdapter] = None):
        self.config = config
        self.params = config.to_apparatus()
        self.log = log

    def budget(self, records: Optional[MeasurementRecordSet] = None) -> ErrorBudget:
        if records is None:
            records = expected_records(self.params, self.config.to_plan())
        budget = full_budget(records, self.params, angles=records.base_angles(),
                             n_samples=self.config.angle_samples, seed=self.config.angle_seed)
        if self.log is not None:
            self.log.log_budget(budget.terms(), budget.total, budget.dominant_term)
        return budget


class ApplicationCoordinator:
    """
    Coordinates all services for complete operations.
    Implements the facade pattern to provide simple interface.
    """

    def __init__(self, config: RunConfig, log: Optional[LoggingAdapter] = None,
                 files: Optional[FileAdapter] = None):
        self.config = config
        self.log = log
        self.files = files or create_file_adapter()

    def simulate(self, out_dir: Optional[Path] = None) -> SimulationReport:
        return SimulationService(self.config, self.files, self.log).run(out_dir)

    def analyze(self, records_path: Path, out_path: Optional[Path] = None) -> ReportDocument:
        records = self.files.read_records(records_path)
        report = AnalysisService(self.config, self.log).analyze(records)
        if out_path is not None:
            written = self.files.write_json(out_path, report.to_dict())
            if self.log is not None:
                self.log.log_file_written(written, "report")
        return report

    def optimize(self, dwell: float = 10.0, oracle_kind: str = "model", noisy: bool = False,
                 max_rounds: int = 10, out_dir: Optional[Path] = None) -> OptimizationReport:
        return OptimizationService(self.config, self.files, self.log).run(
            dwell=dwell, oracle_kind=oracle_kind, noisy=noisy, max_rounds=max_rounds, out_dir=out_dir)

    def bounds(self, table: BehaviorTable) -> BoundsReport:
        return BoundsService().evaluate(table)

    def budget(self, records_path: Optional[Path] = None) -> ErrorBudget:
        records = self.files.read_records(records_path) if records_path is not None else None
        return BudgetService(self.config, self.log).budget(records)
