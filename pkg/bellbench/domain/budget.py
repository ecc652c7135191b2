"""
Uncertainty budget of S: counting statistics, exposure-time errors (dead time,
interval jitter, clock drift) and angle errors.
"""

from typing import Optional, Union
import math

import numpy as np
import numpy.typing as npt

from ..exceptions import ValidationError
from .estimators import estimate_s
from .models import (
    ApparatusParams, ChshAngles, CorrelationModel, ErrorBudget, MeasurementRecordSet,
    OUTCOME_SIGNS, SETTINGS_PER_SET,
)
from .quantum import model_chsh_array

MIN_ANGLE_SAMPLES = 1000

FractionalError = Union[float, npt.ArrayLike]


def counting_term(records: MeasurementRecordSet) -> float:
    """ds_p: the Poisson standard error of estimate_s."""
    return estimate_s(records).sigma


def exposure_term(records: MeasurementRecordSet, f: FractionalError) -> float:
    """Propagate independent per-interval relative exposure errors f to S.

    f is one value for every setting or an array of 16. Each setting count of a
    set is scaled by its own (1 + delta), |delta| ~ f; the error of the pooled
    estimate shrinks with sqrt(sets).
    """
    fractions = np.broadcast_to(np.asarray(f, dtype=np.float64), (SETTINGS_PER_SET,))
    if np.any(fractions < 0):
        raise ValidationError("fractional exposure error must be >= 0", field="f", value=float(fractions.min()))
    if not np.any(fractions > 0):
        return 0.0

    totals = records.coincidence_totals().astype(np.float64)
    signs = np.array(OUTCOME_SIGNS, dtype=np.float64)
    variance = 0.0
    for j in range(4):
        n_k = totals[4 * j:4 * j + 4]
        n = float(n_k.sum())
        if n == 0.0:
            continue
        e = float(np.dot(signs, n_k)) / n
        # dE/dN_k = (sign_k - E)/N
        weights = (signs - e) * n_k / n
        variance += float(np.sum((weights * fractions[4 * j:4 * j + 4]) ** 2))
    return math.sqrt(variance / max(records.sets, 1))


def dead_time_fractions(records: MeasurementRecordSet, params: ApparatusParams) -> npt.NDArray[np.float64]:
    """Per-setting live-time error sqrt(N_singles)*dead_time/interval, both detectors in quadrature."""
    intervals = records.mean_per_setting('duration')
    singles_a = records.mean_per_setting('singles_a')
    singles_b = records.mean_per_setting('singles_b')
    safe = np.where(intervals > 0, intervals, 1.0)
    f_a = np.sqrt(singles_a) * params.det_a.dead_time / safe
    f_b = np.sqrt(singles_b) * params.det_b.dead_time / safe
    return np.asarray(np.hypot(f_a, f_b), dtype=np.float64)


def dead_time_term(records: MeasurementRecordSet, params: ApparatusParams) -> float:
    """ds_d: acquisition-time fluctuations caused by dead time."""
    return exposure_term(records, dead_time_fractions(records, params))


def angle_term(model: CorrelationModel, angles: ChshAngles, resolution: float,
               n_samples: int = 20000, seed: int = 0) -> float:
    """ds_r: spread of the model S under independent uniform angle errors within +-resolution."""
    if n_samples < MIN_ANGLE_SAMPLES:
        raise ValidationError(f"angle_term needs at least {MIN_ANGLE_SAMPLES} samples",
                              field="n_samples", value=n_samples)
    if resolution < 0:
        raise ValidationError("resolution must be >= 0", field="resolution", value=resolution)
    if resolution == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    base = np.array(angles.as_degrees())
    samples = base + rng.uniform(-resolution, resolution, size=(n_samples, 4))
    s = model_chsh_array(model, samples[:, 0], samples[:, 1], samples[:, 2], samples[:, 3])
    return float(np.std(s, ddof=1))


def full_budget(records: MeasurementRecordSet, params: ApparatusParams,
                model: Optional[CorrelationModel] = None, angles: Optional[ChshAngles] = None,
                n_samples: int = 20000, seed: int = 0) -> ErrorBudget:
    """Assemble every term of the budget.

    The efficiency-drift term is carried as an explicit zero.
    """
    model = model or params.model
    angles = angles or records.base_angles()
    interval = params.timing.interval
    return ErrorBudget(
        ds_p=counting_term(records),
        ds_d=dead_time_term(records, params),
        ds_t=exposure_term(records, params.timing.jitter / interval),
        ds_c=exposure_term(records, params.timing.clock_drift),
        ds_r=angle_term(model, angles, params.actuator.resolution, n_samples=n_samples, seed=seed),
        ds_e=0.0,
    )
