"""
Seeded Monte Carlo of the detection chain.

Event mode generates timestamp streams per (set, setting) and counts
coincidences; aggregate mode draws the counts directly from the rate model.
Each (set, setting) draws from its own RNG substream derived from
(seed, set, setting), so results do not depend on scheduling or thread count.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt

from ..exceptions import PreconditionError, ValidationError
from ..logger import StructuredLogger
from ..domain.apparatus import registered_setting_rates
from ..domain.models import (
    ApparatusParams, CoincidenceWindow, ExperimentPlan, MeasurementRecord,
    MeasurementRecordSet, PolarizerAngle, SettingPair, TimestampStream,
)
from ..domain.quantum import model_correlation

SeedLike = Union[int, np.random.Generator]


class SimulationMode(Enum):
    EVENT = "event"
    AGGREGATE = "aggregate"

    @classmethod
    def from_string(cls, value: str) -> 'SimulationMode':
        for mode in cls:
            if mode.value == value.lower().strip():
                return mode
        raise ValidationError(f"Unknown simulation mode: {value}", field="mode", value=value)


class SettingCounts(NamedTuple):
    singles_a: int
    singles_b: int
    coincidences: int


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for one (set, setting) cell."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(keys)))


def _generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _poisson_times(rng: np.random.Generator, rate: float, duration: float) -> npt.NDArray[np.float64]:
    n = int(rng.poisson(rate * duration)) if rate > 0 else 0
    return np.sort(rng.uniform(0.0, duration, size=n))


def apply_dead_time(times: npt.NDArray[np.float64], dead_time: float) -> npt.NDArray[np.float64]:
    """Non-paralyzable dead time: drop events within dead_time of the last kept event."""
    if dead_time <= 0.0 or times.size < 2:
        return times
    keep = np.ones(times.size, dtype=bool)
    # only events closer than dead_time to their predecessor can be lost
    candidates = np.flatnonzero(np.diff(times) < dead_time) + 1
    reference: Dict[int, float] = {}
    for j in candidates:
        ref = times[j - 1] if keep[j - 1] else reference[j - 1]
        if times[j] - ref < dead_time:
            keep[j] = False
            reference[j] = ref
    return times[keep]


def generate_stream(rate: float, duration: float, dead_time: float, seed: SeedLike,
                    label: str = "") -> TimestampStream:
    """Homogeneous Poisson arrivals on [0, duration) thinned by dead time."""
    if rate < 0:
        raise ValidationError("rate must be >= 0", field="rate", value=rate)
    if duration <= 0:
        raise ValidationError("duration must be > 0", field="duration", value=duration)
    rng = _generator(seed)
    times = apply_dead_time(_poisson_times(rng, rate, duration), dead_time)
    return TimestampStream(times=times, label=label, duration=duration)


def match_coincidences(sa: TimestampStream, sb: TimestampStream, window: CoincidenceWindow) -> int:
    """Greedy earliest-match pairing with |tA - tB| <= half_width.

    Each event takes part in at most one coincidence. The B pointer only moves
    forward, so the pass is linear once the candidate ranges are known.
    """
    if not sa.is_sorted() or not sb.is_sorted():
        raise PreconditionError("timestamp streams must be sorted",
                                {"unsorted": [s.label for s in (sa, sb) if not s.is_sorted()]})
    a, b = sa.times, sb.times
    if a.size == 0 or b.size == 0:
        return 0
    hw = window.half_width
    lo = np.searchsorted(b, a - hw, side='left')
    hi = np.searchsorted(b, a + hw, side='right')
    count = 0
    j = 0
    for i in np.flatnonzero(hi > lo):
        j = max(j, int(lo[i]))
        if j < hi[i]:
            count += 1
            j += 1
    return count


def simulate_setting(params: ApparatusParams, a: PolarizerAngle, b: PolarizerAngle,
                     duration: float, seed: SeedLike) -> SettingCounts:
    """Event-level simulation of one analyzer setting."""
    rng = _generator(seed)
    source, det_a, det_b = params.source, params.det_a, params.det_b
    setting = SettingPair(a, b)
    w_a = params.actuator.transmission(a)
    w_b = params.actuator.transmission(b)

    pairs_a = np.empty(0)
    pairs_b = np.empty(0)
    if source.pair_rate > 0:
        # pair_rate is on the detected scale; emit enough pairs for both efficiencies
        emitted = _poisson_times(rng, source.pair_rate / (det_a.efficiency * det_b.efficiency), duration)
        e = model_correlation(params.model, setting)
        p_equal = max((1.0 + e) / 4.0, 0.0)
        p_unequal = max((1.0 - e) / 4.0, 0.0)
        probs = np.array([p_equal, p_unequal, p_unequal, p_equal])
        outcome = rng.choice(4, size=emitted.size, p=probs / probs.sum())
        pass_a = (outcome == 0) | (outcome == 1)
        pass_b = (outcome == 0) | (outcome == 2)
        seen_a = pass_a & (rng.random(emitted.size) < det_a.efficiency * w_a)
        seen_b = pass_b & (rng.random(emitted.size) < det_b.efficiency * w_b)
        pairs_a, pairs_b = emitted[seen_a], emitted[seen_b]

    excess_a = max(source.singles_rate_a - (source.pair_rate / det_b.efficiency if source.pair_rate else 0.0), 0.0)
    excess_b = max(source.singles_rate_b - (source.pair_rate / det_a.efficiency if source.pair_rate else 0.0), 0.0)

    stream_a = np.sort(np.concatenate([
        pairs_a,
        _poisson_times(rng, excess_a * w_a / 2.0, duration),
        _poisson_times(rng, det_a.dark_rate, duration),
    ]))
    stream_b = np.sort(np.concatenate([
        pairs_b,
        _poisson_times(rng, excess_b * w_b / 2.0, duration),
        _poisson_times(rng, det_b.dark_rate, duration),
    ]))
    sa = TimestampStream(apply_dead_time(stream_a, det_a.dead_time), label="A", duration=duration)
    sb = TimestampStream(apply_dead_time(stream_b, det_b.dead_time), label="B", duration=duration)
    return SettingCounts(len(sa), len(sb), match_coincidences(sa, sb, params.window))


def _realized_duration(params: ApparatusParams, interval: float, rng: np.random.Generator) -> float:
    """Interval actually integrated, given boundary jitter and clock drift."""
    timing = params.timing
    if timing.jitter == 0 and timing.clock_drift == 0:
        return interval
    offset = timing.jitter * rng.uniform(-1.0, 1.0) + interval * timing.clock_drift * rng.uniform(-1.0, 1.0)
    return max(interval + offset, np.finfo(float).tiny)


def _cell(params: ApparatusParams, plan: ExperimentPlan, set_index: int, setting: int) -> MeasurementRecord:
    rng = substream(plan.seed, set_index, setting)
    pair = plan.angles.quantized(params.actuator.resolution).orientation(setting)
    counts = simulate_setting(params, pair.a, pair.b, _realized_duration(params, plan.interval, rng), rng)
    return MeasurementRecord(set_index, setting, pair.a.theta, pair.b.theta, plan.interval, *counts)


def _assemble(cells: Dict[Tuple[int, int], MeasurementRecord], plan: ExperimentPlan,
              logger: Optional[StructuredLogger]) -> MeasurementRecordSet:
    records: List[MeasurementRecord] = []
    for set_index in range(plan.sets):
        chunk = [cells[(set_index, setting)] for setting in plan.setting_order]
        records.extend(chunk)
        if logger is not None:
            logger.log_set_completed(set_index,
                                     coincidences=sum(r.coincidences for r in chunk),
                                     singles_a=sum(r.singles_a for r in chunk),
                                     singles_b=sum(r.singles_b for r in chunk))
    return MeasurementRecordSet(tuple(records))


def run_experiment(params: ApparatusParams, plan: ExperimentPlan, max_workers: Optional[int] = None,
                   logger: Optional[StructuredLogger] = None) -> MeasurementRecordSet:
    """Event-level simulation of every (set, setting) cell of the plan."""
    keys = [(k, s) for k in range(plan.sets) for s in plan.setting_order]
    cells: Dict[Tuple[int, int], MeasurementRecord] = {}
    if max_workers == 1:
        for key in keys:
            cells[key] = _cell(params, plan, *key)
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {pool.submit(_cell, params, plan, *key): key for key in keys}
            for future in as_completed(futures):
                cells[futures[future]] = future.result()
    return _assemble(cells, plan, logger)


def sample_counts_aggregate(params: ApparatusParams, plan: ExperimentPlan,
                            logger: Optional[StructuredLogger] = None) -> MeasurementRecordSet:
    """Poisson counts from the registered rates, without event-level simulation."""
    angles = plan.angles.quantized(params.actuator.resolution)
    rates = {s: registered_setting_rates(params, angles.orientation(s)) for s in plan.setting_order}
    cells: Dict[Tuple[int, int], MeasurementRecord] = {}
    for set_index in range(plan.sets):
        for setting in plan.setting_order:
            rng = substream(plan.seed, set_index, setting)
            duration = _realized_duration(params, plan.interval, rng)
            r = rates[setting]
            pair = angles.orientation(setting)
            cells[(set_index, setting)] = MeasurementRecord(
                set_index, setting, pair.a.theta, pair.b.theta, plan.interval,
                singles_a=int(rng.poisson(r.singles_a * duration)),
                singles_b=int(rng.poisson(r.singles_b * duration)),
                coincidences=int(rng.poisson(r.coincidences * duration)),
            )
    return _assemble(cells, plan, logger)


def simulate_records(params: ApparatusParams, plan: ExperimentPlan,
                     mode: SimulationMode = SimulationMode.AGGREGATE, max_workers: Optional[int] = None,
                     logger: Optional[StructuredLogger] = None) -> MeasurementRecordSet:
    if mode is SimulationMode.EVENT:
        return run_experiment(params, plan, max_workers=max_workers, logger=logger)
    return sample_counts_aggregate(params, plan, logger=logger)
