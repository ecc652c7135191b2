"""
Coordinate-scan search for the polarizer angles that maximize |S|.

Starting from a = 0, rotate b and locate the coincidence minimum; b0 and b1
sit 22.5 and 67.5 degrees past it. Then fix b = b0, rotate a and place a0 and a1
22.5 degrees either side of the minimum. Alternate until no angle moves by
more than the actuator resolution.
"""

from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..exceptions import ValidationError
from ..logger import StructuredLogger
from ..domain.apparatus import registered_setting_rates
from ..domain.models import ApparatusParams, OptimizedAngles, PolarizerAngle, ScanTrace, SettingPair
from .event_sim import simulate_setting, substream

COARSE_STEP_DEG = 5.0
FINE_HALF_SPAN_DEG = 5.0
FIT_HALF_SPAN_DEG = 2.0
DEFAULT_MAX_ROUNDS = 10


class ExperimentOracle(Protocol):
    """Returns a coincidence count for analyzer angles (a, b) integrated over dwell seconds."""

    def __call__(self, a: PolarizerAngle, b: PolarizerAngle, dwell: float) -> float: ...


class ModelOracle:
    """Coincidences from the rate model; Poisson noise when a seed is given."""

    def __init__(self, params: ApparatusParams, seed: Optional[int] = None):
        self.params = params
        self.rng = np.random.default_rng(seed) if seed is not None else None

    def __call__(self, a: PolarizerAngle, b: PolarizerAngle, dwell: float) -> float:
        mean = registered_setting_rates(self.params, SettingPair(a, b)).coincidences * dwell
        if self.rng is None:
            return mean
        return float(self.rng.poisson(mean))


class SimulatedOracle:
    """Coincidences from the event-level simulator."""

    def __init__(self, params: ApparatusParams, seed: int = 0):
        self.params = params
        self.seed = seed
        self.calls = 0

    def __call__(self, a: PolarizerAngle, b: PolarizerAngle, dwell: float) -> float:
        rng = substream(self.seed, self.calls)
        self.calls += 1
        return float(simulate_setting(self.params, a, b, dwell, rng).coincidences)


def quantize(theta: float, resolution: float) -> float:
    return float(round(theta / resolution) * resolution)


def angle_difference(x: float, y: float) -> float:
    """Signed difference of two polarizer angles, folded into [-90, 90)."""
    return (x - y + 90.0) % 180.0 - 90.0


def scan_fringe(oracle: ExperimentOracle, fixed: PolarizerAngle, side: str,
                sweep: Sequence[float], dwell: float) -> List[Tuple[float, float]]:
    """Rotate one polarizer with the other fixed; side names the fixed polarizer."""
    if len(sweep) == 0:
        raise ValidationError("sweep must not be empty", field="sweep", value=0)
    if side not in ("a", "b"):
        raise ValidationError("side must be 'a' or 'b'", field="side", value=side)
    points = []
    for theta in sweep:
        moving = PolarizerAngle(theta)
        a, b = (fixed, moving) if side == "a" else (moving, fixed)
        points.append((float(theta), float(oracle(a, b, dwell))))
    return points


def _fit_minimum(points: List[Tuple[float, float]], resolution: float) -> float:
    """Vertex of a parabola fitted around the lowest scanned point."""
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    best = float(x[int(np.argmin(y))])
    near = np.abs(x - best) <= FIT_HALF_SPAN_DEG + 1e-9
    if np.count_nonzero(near) >= 3:
        curvature, slope, _ = np.polyfit(x[near] - best, y[near], 2)
        if curvature > 0:
            vertex = best - slope / (2.0 * curvature)
            if abs(vertex - best) <= FIT_HALF_SPAN_DEG:
                best = float(vertex)
    return quantize(best, resolution)


def locate_minimum(oracle: ExperimentOracle, fixed: PolarizerAngle, side: str, resolution: float,
                   dwell: float, label: str, traces: List[ScanTrace]) -> float:
    """Coarse 5-degree scan over a half turn, then a fine scan at the resolution step."""
    coarse = scan_fringe(oracle, fixed, side, list(np.arange(0.0, 180.0, COARSE_STEP_DEG)), dwell)
    center = min(coarse, key=lambda p: p[1])[0]
    steps = int(round(FINE_HALF_SPAN_DEG / resolution))
    fine_sweep = [center + k * resolution for k in range(-steps, steps + 1)]
    fine = scan_fringe(oracle, fixed, side, fine_sweep, dwell)
    traces.append(ScanTrace(f"{label}-coarse", side, fixed.theta, tuple(coarse)))
    traces.append(ScanTrace(f"{label}-fine", side, fixed.theta, tuple(fine)))
    return _fit_minimum(fine, resolution)


def optimize(oracle: ExperimentOracle, resolution: float, dwell: float,
             max_rounds: int = DEFAULT_MAX_ROUNDS, logger: Optional[StructuredLogger] = None) -> OptimizedAngles:
    """Alternating b and a scans until the angles settle to the resolution.

    Returns converged=False with the last angles when max_rounds is reached.
    """
    if resolution <= 0:
        raise ValidationError("optimizer needs resolution > 0", field="resolution", value=resolution)
    if dwell <= 0:
        raise ValidationError("dwell must be > 0", field="dwell", value=dwell)

    traces: List[ScanTrace] = []
    a0 = 0.0
    current: Optional[Tuple[float, float, float, float]] = None
    for round_index in range(1, max_rounds + 1):
        b_min = locate_minimum(oracle, PolarizerAngle(a0), "a", resolution, dwell, f"round{round_index}-b", traces)
        b0 = PolarizerAngle(quantize(b_min + 22.5, resolution)).theta
        b1 = PolarizerAngle(quantize(b_min + 67.5, resolution)).theta
        a_min = locate_minimum(oracle, PolarizerAngle(b0), "b", resolution, dwell, f"round{round_index}-a", traces)
        new = (PolarizerAngle(quantize(a_min - 22.5, resolution)).theta, b0,
               PolarizerAngle(quantize(a_min + 22.5, resolution)).theta, b1)

        change = (max(abs(angle_difference(x, y)) for x, y in zip(new, current))
                  if current is not None else float("inf"))
        if logger is not None:
            logger.log_optimizer_round(round_index, new, change)
        current = new
        a0 = new[0]
        if change <= resolution + 1e-9:
            result = OptimizedAngles(*new, iterations=round_index, converged=True, traces=tuple(traces))
            break
    else:
        assert current is not None
        result = OptimizedAngles(*current, iterations=max_rounds, converged=False, traces=tuple(traces))

    if logger is not None:
        logger.log_optimizer_complete([result.a0, result.b0, result.a1, result.b1],
                                      result.iterations, result.converged)
    return result
