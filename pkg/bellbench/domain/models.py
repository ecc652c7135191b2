"""
Core domain models for bellbench.
Immutable value objects with built-in validation. Numeric arrays are copied and
frozen on construction so a model can be shared between threads.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple
import math

import numpy as np
import numpy.typing as npt

from ..exceptions import IncompleteRecordError, ValidationError

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]

STATE_TOLERANCE = 1e-12
PSD_TOLERANCE = -1e-10
PROBABILITY_TOLERANCE = 1e-12

# Correlation bounds on |S|
LOCAL_BOUND = 2.0
GRINBAUM_BOUND = 2.82537
GRINBAUM_UNCERTAINTY = 2e-5  # quoted as 2.82537(2); not used in significance arithmetic
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
PR_BOUND = 4.0

SIGN_CONVENTION = "singlet: E(a,a) = -1; S reported signed, |S| compared with bounds"

# The 16 settings: correlation-pair major, outcome-sign minor.
CORRELATION_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))
CORRELATION_LABELS: Tuple[str, ...] = ("a0b0", "a0b1", "a1b0", "a1b1")
CHSH_COEFFICIENTS: Tuple[float, ...] = (1.0, -1.0, 1.0, 1.0)
OUTCOME_LABELS: Tuple[str, ...] = ("++", "+-", "-+", "--")
OUTCOME_SIGNS: Tuple[int, ...] = (1, -1, -1, 1)
SETTINGS_PER_SET = 16


def _require(condition: bool, message: str, field_name: str, value: Any) -> None:
    if not condition:
        raise ValidationError(message, field=field_name, value=value)


def _frozen_copy(values: Any, dtype: Any) -> Any:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


# ---------------------------------------------------------------------------
# Quantum states and settings
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Density matrix of the polarization pair, basis order HH, HV, VH, VV."""
    rho: ComplexArray

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=np.complex128)
        _require(rho.shape == (4, 4), f"density matrix must be 4x4, got {rho.shape}", "rho", rho.shape)
        hermitian_error = float(np.max(np.abs(rho - rho.conj().T)))
        _require(hermitian_error <= STATE_TOLERANCE, "density matrix is not Hermitian", "rho", hermitian_error)
        trace = complex(np.trace(rho))
        _require(abs(trace - 1.0) < STATE_TOLERANCE, "density matrix must have unit trace", "rho", trace)
        min_eigenvalue = float(np.min(np.linalg.eigvalsh(rho)))
        _require(min_eigenvalue >= PSD_TOLERANCE, "density matrix is not positive semidefinite",
                 "rho", min_eigenvalue)
        object.__setattr__(self, 'rho', _frozen_copy(rho, np.complex128))


@dataclass(frozen=True, order=True)
class PolarizerAngle:
    """Polarizer orientation in degrees, canonical in [0, 180)."""
    theta: float

    def __post_init__(self) -> None:
        value = float(self.theta)
        _require(math.isfinite(value), "polarizer angle must be finite", "theta", value)
        value = value % 180.0
        if value >= 180.0:  # -1e-17 % 180.0 rounds up to 180.0
            value = 0.0
        object.__setattr__(self, 'theta', value)

    @property
    def radians(self) -> float:
        return math.radians(self.theta)

    def shifted(self, delta: float) -> 'PolarizerAngle':
        """Return the orientation rotated by delta degrees."""
        return PolarizerAngle(self.theta + delta)

    def quantized(self, resolution: float) -> 'PolarizerAngle':
        """Round to the nearest multiple of resolution; resolution 0 leaves it unchanged."""
        if resolution <= 0:
            return self
        return PolarizerAngle(round(self.theta / resolution) * resolution)

    def __float__(self) -> float:
        return self.theta


@dataclass(frozen=True)
class SettingPair:
    """Analyzer orientations on side A and side B."""
    a: PolarizerAngle
    b: PolarizerAngle

    @classmethod
    def of(cls, a: float, b: float) -> 'SettingPair':
        """Factory method from degrees."""
        return cls(a=PolarizerAngle(a), b=PolarizerAngle(b))


@dataclass(frozen=True)
class ChshAngles:
    """The four base settings a0, a1, b0, b1 of a CHSH test."""
    a0: PolarizerAngle
    a1: PolarizerAngle
    b0: PolarizerAngle
    b1: PolarizerAngle

    @classmethod
    def from_degrees(cls, a0: float, a1: float, b0: float, b1: float) -> 'ChshAngles':
        """Factory method from degrees."""
        return cls(PolarizerAngle(a0), PolarizerAngle(a1), PolarizerAngle(b0), PolarizerAngle(b1))

    @classmethod
    def canonical(cls) -> 'ChshAngles':
        """Angles reaching 2*sqrt(2) on the singlet."""
        return cls.from_degrees(0.0, 45.0, 22.5, 67.5)

    def as_degrees(self) -> Tuple[float, float, float, float]:
        return (self.a0.theta, self.a1.theta, self.b0.theta, self.b1.theta)

    def pairs(self) -> List[SettingPair]:
        """Setting pairs in the order of the CHSH combination."""
        a = (self.a0, self.a1)
        b = (self.b0, self.b1)
        return [SettingPair(a[i], b[j]) for i, j in CORRELATION_PAIRS]

    def orientation(self, setting: int) -> SettingPair:
        """Analyzer orientations of one of the 16 settings.

        The '-' outcome of a single-channel analyzer is measured with the polarizer
        rotated by 90 degrees.
        """
        _require(0 <= setting < SETTINGS_PER_SET, "setting index must be in 0..15", "setting", setting)
        base = self.pairs()[setting // 4]
        outcome = OUTCOME_LABELS[setting % 4]
        a = base.a.shifted(90.0) if outcome[0] == "-" else base.a
        b = base.b.shifted(90.0) if outcome[1] == "-" else base.b
        return SettingPair(a, b)

    def quantized(self, resolution: float) -> 'ChshAngles':
        return ChshAngles(*(angle.quantized(resolution) for angle in (self.a0, self.a1, self.b0, self.b1)))


@dataclass(frozen=True)
class OutcomeProbabilities:
    """Joint outcome probabilities for one setting pair."""
    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self) -> None:
        values = self.as_tuple()
        for name, value in zip(("p_pp", "p_pm", "p_mp", "p_mm"), values):
            _require(-PROBABILITY_TOLERANCE <= value <= 1.0 + PROBABILITY_TOLERANCE,
                     f"{name} outside [0, 1]", name, value)
        total = sum(values)
        _require(abs(total - 1.0) <= PROBABILITY_TOLERANCE, "outcome probabilities must sum to 1",
                 "total", total)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.p_pp, self.p_pm, self.p_mp, self.p_mm)

    @property
    def correlation(self) -> float:
        return self.p_pp - self.p_pm - self.p_mp + self.p_mm


@dataclass(frozen=True)
class CorrelationModel:
    """Two-visibility correlation model with analyzer misalignment offsets (degrees)."""
    v_hv: float = 1.0
    v_45: float = 1.0
    misalign_a: float = 0.0
    misalign_b: float = 0.0

    def __post_init__(self) -> None:
        _require(0.0 <= self.v_hv <= 1.0, "v_hv must be in [0, 1]", "v_hv", self.v_hv)
        _require(0.0 <= self.v_45 <= 1.0, "v_45 must be in [0, 1]", "v_45", self.v_45)


# ---------------------------------------------------------------------------
# Apparatus
# ---------------------------------------------------------------------------

class AccidentalConvention(Enum):
    """Effective window used for the accidental-coincidence rate."""
    FULL = "full"  # tau_eff = 2 * half_width
    HALF = "half"  # tau_eff = half_width

    @classmethod
    def from_string(cls, value: str) -> 'AccidentalConvention':
        for convention in cls:
            if convention.value == value.lower().strip():
                return convention
        raise ValidationError(f"Unknown accidental convention: {value}", field="convention", value=value)


@dataclass(frozen=True)
class SourceParams:
    """Photon rates arriving at each arm before the polarizers (detected scale, no darks)."""
    pair_rate: float
    singles_rate_a: float
    singles_rate_b: float

    def __post_init__(self) -> None:
        for name in ("pair_rate", "singles_rate_a", "singles_rate_b"):
            value = getattr(self, name)
            _require(value >= 0.0, f"{name} must be >= 0", name, value)
        _require(self.pair_rate <= min(self.singles_rate_a, self.singles_rate_b),
                 "pair_rate cannot exceed the singles rates", "pair_rate", self.pair_rate)

    @classmethod
    def from_detected(cls, pair_rate: float, detected_a: float, detected_b: float,
                      dark_a: float, dark_b: float) -> 'SourceParams':
        """Build from detected singles (behind a polarizer, dark counts included)."""
        _require(detected_a >= dark_a, "detected rate below dark rate", "detected_a", detected_a)
        _require(detected_b >= dark_b, "detected rate below dark rate", "detected_b", detected_b)
        return cls(pair_rate=pair_rate,
                   singles_rate_a=2.0 * (detected_a - dark_a),
                   singles_rate_b=2.0 * (detected_b - dark_b))


@dataclass(frozen=True)
class DetectorParams:
    """Single-photon detector: efficiency, dark counts (1/s), non-paralyzable dead time (s)."""
    efficiency: float = 1.0
    dark_rate: float = 0.0
    dead_time: float = 0.0

    def __post_init__(self) -> None:
        _require(0.0 <= self.efficiency <= 1.0, "efficiency must be in [0, 1]", "efficiency", self.efficiency)
        _require(self.dark_rate >= 0.0, "dark_rate must be >= 0", "dark_rate", self.dark_rate)
        _require(self.dead_time >= 0.0, "dead_time must be >= 0", "dead_time", self.dead_time)


@dataclass(frozen=True)
class CoincidenceWindow:
    half_width: float

    def __post_init__(self) -> None:
        _require(self.half_width > 0.0, "half_width must be > 0", "half_width", self.half_width)


@dataclass(frozen=True)
class TimingParams:
    """Acquisition interval (s), absolute boundary jitter (s) and fractional clock drift."""
    interval: float = 60.0
    jitter: float = 0.0
    clock_drift: float = 0.0

    def __post_init__(self) -> None:
        _require(self.interval > 0.0, "interval must be > 0", "interval", self.interval)
        _require(self.jitter >= 0.0, "jitter must be >= 0", "jitter", self.jitter)
        _require(self.clock_drift >= 0.0, "clock_drift must be >= 0", "clock_drift", self.clock_drift)


@dataclass(frozen=True)
class ActuatorParams:
    """Rotation-stage resolution (degrees; 0 = ideal stage) and polarizer wedge error amplitude."""
    resolution: float = 0.1
    wedge_amplitude: float = 0.0

    def __post_init__(self) -> None:
        _require(self.resolution >= 0.0, "resolution must be >= 0", "resolution", self.resolution)
        _require(0.0 <= self.wedge_amplitude < 1.0, "wedge_amplitude must be in [0, 1)",
                 "wedge_amplitude", self.wedge_amplitude)

    def transmission(self, angle: PolarizerAngle) -> float:
        """Setting-dependent transmission factor caused by polarizer wedge errors."""
        return 1.0 - self.wedge_amplitude * math.sin(angle.radians) ** 2


@dataclass(frozen=True)
class ApparatusParams:
    """Everything needed to predict or simulate the counts of one setting."""
    source: SourceParams
    det_a: DetectorParams
    det_b: DetectorParams
    window: CoincidenceWindow
    timing: TimingParams
    actuator: ActuatorParams
    model: CorrelationModel
    convention: AccidentalConvention = AccidentalConvention.HALF

    def __post_init__(self) -> None:
        # Pair photons are thinned by the partner's efficiency in the event simulator,
        # so each arm must carry at least pair_rate / efficiency_of_other_arm photons.
        for arm, singles, other in (("a", self.source.singles_rate_a, self.det_b.efficiency),
                                    ("b", self.source.singles_rate_b, self.det_a.efficiency)):
            if self.source.pair_rate == 0.0:
                continue
            _require(other > 0.0, "pair_rate > 0 needs nonzero efficiencies", f"det_{arm}", other)
            _require(singles >= self.source.pair_rate / other - 1e-9,
                     f"singles_rate_{arm} too low for pair_rate at the given efficiencies",
                     f"singles_rate_{arm}", singles)


# ---------------------------------------------------------------------------
# Event streams and measurement records
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TimestampStream:
    """Detection times (s) of one detector within [0, duration)."""
    times: FloatArray
    label: str = ""
    duration: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'times', _frozen_copy(np.ravel(self.times), np.float64))

    @classmethod
    def of(cls, times: Iterable[float], label: str = "", duration: float = 0.0) -> 'TimestampStream':
        """Factory method from any iterable of times."""
        return cls(times=np.fromiter(times, dtype=np.float64), label=label, duration=duration)

    def __len__(self) -> int:
        return int(self.times.size)

    def is_sorted(self) -> bool:
        return bool(self.times.size < 2 or np.all(np.diff(self.times) >= 0.0))

    @property
    def rate(self) -> float:
        return len(self) / self.duration if self.duration > 0 else 0.0


@dataclass(frozen=True)
class CoincidenceCounts:
    """The four outcome counts of one correlation."""
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int
    duration: float = 0.0
    setting: Optional[SettingPair] = None

    def __post_init__(self) -> None:
        for name in ("n_pp", "n_pm", "n_mp", "n_mm"):
            value = getattr(self, name)
            _require(int(value) == value and value >= 0, f"{name} must be a nonnegative integer", name, value)
            object.__setattr__(self, name, int(value))

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.n_pp, self.n_pm, self.n_mp, self.n_mm)

    @property
    def total(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    @property
    def equal_outcomes(self) -> int:
        return self.n_pp + self.n_mm

    @property
    def unequal_outcomes(self) -> int:
        return self.n_pm + self.n_mp

    def orientations(self) -> List[SettingPair]:
        """The four analyzer orientations behind the counts."""
        if self.setting is None:
            return []
        a, b = self.setting.a, self.setting.b
        return [SettingPair(a, b), SettingPair(a, b.shifted(90.0)),
                SettingPair(a.shifted(90.0), b), SettingPair(a.shifted(90.0), b.shifted(90.0))]


@dataclass(frozen=True)
class ExperimentPlan:
    """Angles, repetitions, interval and seed of a 16-setting acquisition."""
    angles: ChshAngles
    sets: int = 1
    interval: float = 60.0
    seed: int = 0
    setting_order: Tuple[int, ...] = tuple(range(SETTINGS_PER_SET))

    def __post_init__(self) -> None:
        _require(self.sets >= 1, "sets must be >= 1", "sets", self.sets)
        _require(self.interval > 0.0, "interval must be > 0", "interval", self.interval)
        _require(sorted(self.setting_order) == list(range(SETTINGS_PER_SET)),
                 "setting_order must be a permutation of 0..15", "setting_order", self.setting_order)
        object.__setattr__(self, 'setting_order', tuple(int(s) for s in self.setting_order))


@dataclass(frozen=True)
class MeasurementRecord:
    """Counts of one (set, setting) acquisition interval."""
    set_index: int
    setting: int
    alice_deg: float
    bob_deg: float
    duration: float
    singles_a: int
    singles_b: int
    coincidences: int

    def __post_init__(self) -> None:
        _require(self.set_index >= 0, "set index must be >= 0", "set", self.set_index)
        _require(0 <= self.setting < SETTINGS_PER_SET, "setting index must be in 0..15", "setting", self.setting)
        _require(self.duration > 0.0, "duration must be > 0", "duration_s", self.duration)
        for name in ("singles_a", "singles_b", "coincidences"):
            value = getattr(self, name)
            _require(value >= 0, f"{name} must be >= 0", name, value)


@dataclass(frozen=True)
class MeasurementRecordSet:
    """All records of an experiment, one per (set, setting)."""
    records: Tuple[MeasurementRecord, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, 'records', tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Any:
        return iter(self.records)

    @property
    def set_indices(self) -> List[int]:
        return sorted({r.set_index for r in self.records})

    @property
    def sets(self) -> int:
        return len(self.set_indices)

    def sorted(self) -> 'MeasurementRecordSet':
        return MeasurementRecordSet(tuple(sorted(self.records, key=lambda r: (r.set_index, r.setting))))

    def missing(self) -> List[Tuple[int, int]]:
        """(set, setting) pairs absent from a dense 16-setting layout."""
        present = {(r.set_index, r.setting) for r in self.records}
        if not present:
            return [(0, s) for s in range(SETTINGS_PER_SET)]
        return [(k, s) for k in range(max(self.set_indices) + 1)
                for s in range(SETTINGS_PER_SET) if (k, s) not in present]

    def coincidence_totals(self) -> npt.NDArray[np.int64]:
        """Coincidences per setting pooled over sets."""
        totals = np.zeros(SETTINGS_PER_SET, dtype=np.int64)
        for r in self.records:
            totals[r.setting] += r.coincidences
        return totals

    def pooled_counts(self) -> List[CoincidenceCounts]:
        """The four correlations' outcome counts, pooled over sets."""
        totals = self.coincidence_totals()
        angles = self.base_angles() if self.records else None
        pairs = angles.pairs() if angles is not None else [None] * 4
        return [CoincidenceCounts(*(int(n) for n in totals[4 * j:4 * j + 4]),
                                  duration=self.total_duration(range(4 * j, 4 * j + 4)),
                                  setting=pairs[j])
                for j in range(4)]

    def total_duration(self, settings: Iterable[int]) -> float:
        wanted = set(settings)
        return float(sum(r.duration for r in self.records if r.setting in wanted))

    def mean_per_setting(self, attribute: str) -> FloatArray:
        """Per-setting mean over sets of a record attribute (singles_a, duration, ...)."""
        sums = np.zeros(SETTINGS_PER_SET)
        counts = np.zeros(SETTINGS_PER_SET)
        for r in self.records:
            sums[r.setting] += float(getattr(r, attribute))
            counts[r.setting] += 1
        return np.divide(sums, counts, out=np.zeros(SETTINGS_PER_SET), where=counts > 0)

    def base_angles(self) -> ChshAngles:
        """Recover a0, a1, b0, b1 from the '++' settings of the records."""
        by_setting: Dict[int, MeasurementRecord] = {}
        for r in self.records:
            by_setting.setdefault(r.setting, r)
        for needed in (0, 4, 8):
            if needed not in by_setting:
                raise IncompleteRecordError(f"setting {needed} missing; cannot recover angles",
                                            missing=[(-1, needed)])
        return ChshAngles.from_degrees(by_setting[0].alice_deg, by_setting[8].alice_deg,
                                       by_setting[0].bob_deg, by_setting[4].bob_deg)


# ---------------------------------------------------------------------------
# Estimates and budgets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationEstimate:
    e: float
    sigma: float
    n_total: int

    def __post_init__(self) -> None:
        _require(abs(self.e) <= 1.0 + PROBABILITY_TOLERANCE, "correlation outside [-1, 1]", "e", self.e)
        _require(self.sigma >= 0.0, "sigma must be >= 0", "sigma", self.sigma)


def _z_score(difference: float, sigma: float) -> float:
    if sigma > 0.0:
        return difference / sigma
    if difference == 0.0:
        return 0.0
    return math.copysign(math.inf, difference)


@dataclass(frozen=True)
class SResult:
    """Estimated S with its standard error and the correlations it came from."""
    s: float
    sigma: float
    correlations: Tuple[CorrelationEstimate, ...] = ()

    def __post_init__(self) -> None:
        _require(self.sigma >= 0.0, "sigma must be >= 0", "sigma", self.sigma)
        object.__setattr__(self, 'correlations', tuple(self.correlations))

    @classmethod
    def from_value(cls, s: float, sigma: float) -> 'SResult':
        """An S value without underlying correlations (e.g. a quoted result)."""
        return cls(s=s, sigma=sigma)

    @property
    def abs_s(self) -> float:
        return abs(self.s)

    @property
    def tsirelson_gap(self) -> float:
        return TSIRELSON_BOUND - self.abs_s

    @property
    def grinbaum_z(self) -> float:
        return _z_score(self.abs_s - GRINBAUM_BOUND, self.sigma)

    @property
    def n_total(self) -> int:
        return sum(c.n_total for c in self.correlations)


@dataclass(frozen=True)
class VisibilityEstimate:
    v: float
    sigma: float


@dataclass(frozen=True)
class ErrorBudget:
    """Standard-deviation contributions to S.

    ds_c (clock drift) and ds_e (efficiency drift) are reported but left out of the
    quadrature total.
    """
    ds_p: float
    ds_d: float
    ds_t: float
    ds_c: float
    ds_r: float
    ds_e: float = 0.0

    def __post_init__(self) -> None:
        for name, value in self.terms().items():
            _require(value >= 0.0, f"{name} must be >= 0", name, value)

    def terms(self) -> Dict[str, float]:
        return {"ds_p": self.ds_p, "ds_d": self.ds_d, "ds_t": self.ds_t,
                "ds_c": self.ds_c, "ds_r": self.ds_r, "ds_e": self.ds_e}

    def included_terms(self) -> Dict[str, float]:
        return {"ds_p": self.ds_p, "ds_d": self.ds_d, "ds_t": self.ds_t, "ds_r": self.ds_r}

    @property
    def total(self) -> float:
        return math.sqrt(self.ds_p ** 2 + self.ds_d ** 2 + self.ds_t ** 2 + self.ds_r ** 2)

    @property
    def total_with_clock(self) -> float:
        return math.sqrt(self.total ** 2 + self.ds_c ** 2)

    @property
    def dominant_term(self) -> str:
        included = self.included_terms()
        return max(included, key=lambda name: included[name])


# ---------------------------------------------------------------------------
# Behaviors and bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BehaviorTable:
    """p[x][y][a][b]: outcome index 0 is '+', 1 is '-'; settings x, y in {0, 1}."""
    p: FloatArray
    tolerance: float = PROBABILITY_TOLERANCE

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.float64)
        _require(p.shape == (2, 2, 2, 2), f"behavior table must be 2x2x2x2, got {p.shape}", "p", p.shape)
        min_value = float(np.min(p))
        _require(min_value >= -self.tolerance, "behavior table has negative entries", "p", min_value)
        deviation = float(np.max(np.abs(p.sum(axis=(2, 3)) - 1.0)))
        if deviation > self.tolerance:
            raise ValidationError(f"behavior table is not normalized (max deviation {deviation:.3g})",
                                  field="p", value=deviation)
        object.__setattr__(self, 'p', _frozen_copy(p, np.float64))

    @classmethod
    def from_function(cls, fn: Callable[[int, int, int, int], float]) -> 'BehaviorTable':
        """Build from fn(x, y, a, b)."""
        p = np.zeros((2, 2, 2, 2))
        for x in range(2):
            for y in range(2):
                for a in range(2):
                    for b in range(2):
                        p[x, y, a, b] = fn(x, y, a, b)
        return cls(p)

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BehaviorTable':
        if "p" not in data:
            raise ValidationError("behavior table document needs a 'p' entry", field="p")
        try:
            p = np.asarray(data["p"], dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"behavior table 'p' must be a numeric 2x2x2x2 array: {e}", field="p") from e
        return cls(p)


@dataclass(frozen=True)
class NoSignalingVerdict:
    ok: bool
    max_violation: float


@dataclass(frozen=True)
class LocalStrategy:
    """Deterministic local strategy: outcome (+1/-1) per setting on each side."""
    a0: int
    a1: int
    b0: int
    b1: int

    def __post_init__(self) -> None:
        for name in ("a0", "a1", "b0", "b1"):
            value = getattr(self, name)
            _require(value in (-1, 1), f"{name} must be +1 or -1", name, value)

    @property
    def chsh(self) -> int:
        return self.a0 * self.b0 - self.a0 * self.b1 + self.a1 * self.b0 + self.a1 * self.b1


@dataclass(frozen=True)
class BoundReport:
    s: float
    sigma: float
    z_local: float
    z_grinbaum: float
    tsirelson_gap: float
    gap_sigmas: float


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanTrace:
    """Counts recorded while rotating one polarizer with the other one fixed."""
    label: str
    fixed_side: str
    fixed_deg: float
    points: Tuple[Tuple[float, float], ...] = ()


@dataclass(frozen=True)
class OptimizedAngles:
    a0: float
    b0: float
    a1: float
    b1: float
    iterations: int
    converged: bool
    traces: Tuple[ScanTrace, ...] = field(default=())

    def as_chsh_angles(self) -> ChshAngles:
        return ChshAngles.from_degrees(self.a0, self.a1, self.b0, self.b1)


# ---------------------------------------------------------------------------
# Validation results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationResult:
    """Immutable validation result."""
    is_valid: bool
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ValidationResultBuilder:
    """Mutable builder for ValidationResult."""
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add_error(self, error: str) -> 'ValidationResultBuilder':
        self.errors.append(error)
        return self

    def add_warning(self, warning: str) -> 'ValidationResultBuilder':
        self.warnings.append(warning)
        return self

    def set_metadata(self, key: str, value: Any) -> 'ValidationResultBuilder':
        self.metadata[key] = value
        return self

    def build(self) -> ValidationResult:
        return ValidationResult(
            is_valid=len(self.errors) == 0,
            errors=self.errors.copy(),
            warnings=self.warnings.copy(),
            metadata=self.metadata.copy()
        )
