"""
Estimators for correlations, S and fringe visibilities from measured counts.
"""

from typing import List, Optional, Sequence, Tuple
import math

import numpy as np
from scipy.optimize import curve_fit

from ..exceptions import FitError, IncompleteRecordError, UndefinedCorrelationError, ValidationError
from .models import (
    CoincidenceCounts, CorrelationEstimate, FloatArray, MeasurementRecordSet, SResult,
    VisibilityEstimate, CHSH_COEFFICIENTS, CORRELATION_LABELS,
)

MIN_FRINGE_SPAN_DEG = 90.0


def estimate_correlation(counts: CoincidenceCounts, setting: Optional[int] = None) -> CorrelationEstimate:
    """E = (N++ - N+- - N-+ + N--)/N with Poisson error sqrt(4*P*M/N^3)."""
    n = counts.total
    if n == 0:
        where = f" (setting {setting})" if setting is not None else ""
        raise UndefinedCorrelationError(f"correlation undefined: zero total counts{where}", setting=setting)
    plus = counts.equal_outcomes
    minus = counts.unequal_outcomes
    e = (plus - minus) / n
    sigma = math.sqrt(4.0 * plus * minus / n ** 3)
    return CorrelationEstimate(e=e, sigma=sigma, n_total=n)


def combine_correlations(estimates: Sequence[CorrelationEstimate]) -> SResult:
    """S from four correlation estimates; errors add in quadrature."""
    s = sum(c * est.e for c, est in zip(CHSH_COEFFICIENTS, estimates))
    sigma = math.sqrt(sum(est.sigma ** 2 for est in estimates))
    return SResult(s=float(s), sigma=sigma, correlations=tuple(estimates))


def estimate_s(records: MeasurementRecordSet) -> SResult:
    """Pool counts per setting over all sets and combine into S."""
    present = {r.setting for r in records}
    absent = [s for s in range(16) if s not in present]
    if absent:
        raise IncompleteRecordError(f"settings missing from records: {absent}",
                                    missing=[(-1, s) for s in absent])
    pooled = records.pooled_counts()
    estimates = [estimate_correlation(counts, setting=4 * j) for j, counts in enumerate(pooled)]
    return combine_correlations(estimates)


def correlation_table(result: SResult) -> List[Tuple[str, float, float, int]]:
    """(label, e, sigma, n_total) rows for display."""
    return [(label, est.e, est.sigma, est.n_total) for label, est in zip(CORRELATION_LABELS, result.correlations)]


def _fringe(theta_deg: FloatArray, c0: float, v: float, phase_deg: float) -> FloatArray:
    return np.asarray(c0 * (1.0 + v * np.cos(np.radians(2.0 * theta_deg - 2.0 * phase_deg))))


def estimate_visibility(scan: Sequence[Tuple[float, float]]) -> VisibilityEstimate:
    """Fit c0*(1 + V*cos(2*theta - 2*phi)) to a polarizer scan.

    Counts are weighted with Poisson errors; sigma_V comes from the fit covariance.
    """
    if len(scan) < 3:
        raise FitError(f"fringe fit needs at least 3 points, got {len(scan)}")
    theta = np.array([p[0] for p in scan], dtype=np.float64)
    counts = np.array([p[1] for p in scan], dtype=np.float64)
    if np.any(counts < 0):
        raise ValidationError("scan counts must be >= 0", field="scan", value=float(counts.min()))
    if float(np.ptp(counts)) == 0.0:
        raise FitError("degenerate scan: all counts are equal")
    span = float(np.ptp(theta))
    if span < MIN_FRINGE_SPAN_DEG:
        raise ValidationError(f"scan spans {span:.3g} degrees; needs at least half a fringe period",
                              field="scan", value=span)

    c_max, c_min = float(counts.max()), float(counts.min())
    guess = [(c_max + c_min) / 2.0, (c_max - c_min) / (c_max + c_min), float(theta[int(np.argmax(counts))])]
    sigma = np.sqrt(np.maximum(counts, 1.0))
    try:
        popt, pcov = curve_fit(_fringe, theta, counts, p0=guess, sigma=sigma, absolute_sigma=True, maxfev=10000)
    except (RuntimeError, ValueError) as e:
        raise FitError(f"fringe fit failed: {e}") from e

    v = abs(float(popt[1]))
    sigma_v = float(np.sqrt(pcov[1, 1])) if np.isfinite(pcov[1, 1]) else math.nan
    if not math.isfinite(v) or not math.isfinite(sigma_v):
        raise FitError("fringe fit did not produce a finite visibility")
    return VisibilityEstimate(v=v, sigma=sigma_v)
