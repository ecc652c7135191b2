"""
Quantum states of the polarization pair, analyzer projectors and exact outcome
probabilities, correlations and CHSH values.

Conventions: H is 0 degrees, angles increase counterclockwise viewed along the
beam, basis order HH, HV, VH, VV with side A as the first factor. The '-'
outcome of an analyzer at theta is the '+' projector at theta + 90.
"""

from typing import Callable, List, Optional, Tuple, Union
import math

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize

from ..exceptions import ValidationError
from .models import (
    ChshAngles, CorrelationModel, FloatArray, OutcomeProbabilities, PolarizerAngle,
    SettingPair, TwoQubitState, CHSH_COEFFICIENTS, PSD_TOLERANCE, STATE_TOLERANCE,
)

ArrayLike = Union[float, npt.NDArray[np.float64]]
CorrelationFn = Callable[[SettingPair], float]

_SINGLET_VECTOR = np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / math.sqrt(2.0)


def singlet_state() -> TwoQubitState:
    """|psi-><psi-| with |psi-> = (|HV> - |VH>)/sqrt(2)."""
    return TwoQubitState(np.outer(_SINGLET_VECTOR, _SINGLET_VECTOR.conj()))


def maximally_mixed_state() -> TwoQubitState:
    return TwoQubitState(np.eye(4, dtype=np.complex128) / 4.0)


def werner_state(v: float) -> TwoQubitState:
    """Singlet mixed with white noise: v*singlet + (1 - v)*I/4."""
    if not 0.0 <= v <= 1.0:
        raise ValidationError("visibility must be in [0, 1]", field="v", value=v)
    return TwoQubitState(v * singlet_state().rho + (1.0 - v) * np.eye(4, dtype=np.complex128) / 4.0)


def is_valid_state(matrix: npt.ArrayLike) -> bool:
    """True when the matrix satisfies the density-matrix invariants."""
    rho = np.asarray(matrix, dtype=np.complex128)
    if rho.shape != (4, 4):
        return False
    if float(np.max(np.abs(rho - rho.conj().T))) > STATE_TOLERANCE:
        return False
    if abs(complex(np.trace(rho)) - 1.0) >= STATE_TOLERANCE:
        return False
    return bool(np.min(np.linalg.eigvalsh(rho)) >= PSD_TOLERANCE)


def reduced_state(state: TwoQubitState, keep: str = "a") -> npt.NDArray[np.complex128]:
    """Partial trace keeping side 'a' or side 'b'."""
    rho = state.rho.reshape(2, 2, 2, 2)
    if keep == "a":
        return np.asarray(np.einsum('ijkj->ik', rho))
    if keep == "b":
        return np.asarray(np.einsum('ijil->jl', rho))
    raise ValidationError("keep must be 'a' or 'b'", field="keep", value=keep)


def purity(state: TwoQubitState) -> float:
    return float(np.real(np.trace(state.rho @ state.rho)))


def projector(angle: PolarizerAngle) -> npt.NDArray[np.float64]:
    """Projector onto cos(theta)|H> + sin(theta)|V>."""
    vector = np.array([math.cos(angle.radians), math.sin(angle.radians)])
    return np.outer(vector, vector)


def outcome_probabilities(state: TwoQubitState, setting: SettingPair) -> OutcomeProbabilities:
    """Joint probabilities Tr(rho * P_x(a) (x) P_y(b)) for x, y in {+, -}."""
    a_plus, b_plus = projector(setting.a), projector(setting.b)
    a_minus, b_minus = np.eye(2) - a_plus, np.eye(2) - b_plus
    values = np.array([
        np.real(np.trace(state.rho @ np.kron(pa, pb)))
        for pa, pb in ((a_plus, b_plus), (a_plus, b_minus), (a_minus, b_plus), (a_minus, b_minus))
    ])
    # rounding in PSD-tolerant states can leave entries at -1e-17
    values = np.clip(values, 0.0, None)
    values = values / values.sum()
    return OutcomeProbabilities(*(float(v) for v in values))


def correlation(state: TwoQubitState, setting: SettingPair) -> float:
    return outcome_probabilities(state, setting).correlation


def chsh_combination(correlations: List[float]) -> float:
    """E(a0,b0) - E(a0,b1) + E(a1,b0) + E(a1,b1)."""
    return float(sum(c * e for c, e in zip(CHSH_COEFFICIENTS, correlations)))


def chsh_value(state: TwoQubitState, a0: PolarizerAngle, a1: PolarizerAngle,
               b0: PolarizerAngle, b1: PolarizerAngle) -> float:
    angles = ChshAngles(a0, a1, b0, b1)
    return chsh_combination([correlation(state, pair) for pair in angles.pairs()])


def model_correlation_array(model: CorrelationModel, a_deg: ArrayLike, b_deg: ArrayLike) -> ArrayLike:
    """Vectorized two-visibility correlation over arrays of angles in degrees."""
    a = np.radians(np.asarray(a_deg, dtype=np.float64) + model.misalign_a)
    b = np.radians(np.asarray(b_deg, dtype=np.float64) + model.misalign_b)
    result = -(model.v_hv * np.cos(2.0 * a) * np.cos(2.0 * b) + model.v_45 * np.sin(2.0 * a) * np.sin(2.0 * b))
    if np.ndim(result) == 0:
        return float(result)
    return np.asarray(result, dtype=np.float64)


def model_correlation(model: CorrelationModel, setting: SettingPair) -> float:
    """E(a, b) of the two-visibility model, including analyzer misalignments."""
    return float(model_correlation_array(model, setting.a.theta, setting.b.theta))


def model_chsh(model: CorrelationModel, angles: ChshAngles) -> float:
    return chsh_combination([model_correlation(model, pair) for pair in angles.pairs()])


def model_chsh_array(model: CorrelationModel, a0: FloatArray, a1: FloatArray,
                     b0: FloatArray, b1: FloatArray) -> FloatArray:
    """model_chsh over arrays of angle samples."""
    terms = [model_correlation_array(model, a, b) for a, b in ((a0, b0), (a0, b1), (a1, b0), (a1, b1))]
    return np.asarray(sum(c * t for c, t in zip(CHSH_COEFFICIENTS, terms)), dtype=np.float64)


def tsirelson_limit(model: CorrelationModel) -> float:
    """Analytic maximum of |S| over all angles for the two-visibility model."""
    return 2.0 * math.sqrt(model.v_hv ** 2 + model.v_45 ** 2)


def maximize_chsh(correlation_fn: CorrelationFn, starts: int = 8, seed: int = 0,
                  initial: Optional[ChshAngles] = None) -> Tuple[float, ChshAngles]:
    """Numerically maximize |S| over the four angles.

    Multi-start Nelder-Mead on both signs of S; returns (max |S|, angles).
    """
    rng = np.random.default_rng(seed)
    guesses = [np.array((initial or ChshAngles.canonical()).as_degrees())]
    guesses += [rng.uniform(0.0, 180.0, size=4) for _ in range(max(starts - 1, 0))]

    def signed(sign: float) -> Callable[[FloatArray], float]:
        def objective(x: FloatArray) -> float:
            angles = ChshAngles.from_degrees(*(float(v) for v in x))
            return -sign * chsh_combination([correlation_fn(pair) for pair in angles.pairs()])
        return objective

    best_value = -math.inf
    best_x = guesses[0]
    for sign in (1.0, -1.0):
        objective = signed(sign)
        for guess in guesses:
            result = minimize(objective, guess, method="Nelder-Mead",
                              options={"xatol": 1e-8, "fatol": 1e-13, "maxiter": 5000, "maxfev": 10000})
            if -result.fun > best_value:
                best_value = float(-result.fun)
                best_x = result.x
    return best_value, ChshAngles.from_degrees(*(float(v) for v in best_x))
