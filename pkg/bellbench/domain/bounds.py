"""
The correlation-bound landscape: local deterministic strategies, the PR box,
no-signaling checks on behavior tables, and significance of an S estimate
against the local, Grinbaum and Tsirelson bounds.

Behavior tables are indexed p[x, y, a, b]; outcome bit 0 is '+', bit 1 is '-'.
"""

from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ValidationError
from .models import (
    BehaviorTable, BoundReport, ChshAngles, LocalStrategy, NoSignalingVerdict, SettingPair, SResult,
    TwoQubitState, CHSH_COEFFICIENTS, CORRELATION_PAIRS, GRINBAUM_BOUND, LOCAL_BOUND,
    PR_BOUND, PROBABILITY_TOLERANCE, TSIRELSON_BOUND,
)
from .quantum import outcome_probabilities, singlet_state

_OUTCOME_SIGN = np.array([1.0, -1.0])
_PARITY = np.outer(_OUTCOME_SIGN, _OUTCOME_SIGN)


def behavior_correlations(table: BehaviorTable) -> np.ndarray:
    """E[x, y] = sum_ab sign(a) sign(b) p[x, y, a, b]."""
    return np.einsum('xyab,ab->xy', table.p, _PARITY)


def chsh_of_behavior(table: BehaviorTable) -> float:
    e = behavior_correlations(table)
    return float(sum(c * e[x, y] for c, (x, y) in zip(CHSH_COEFFICIENTS, CORRELATION_PAIRS)))


def uniform_behavior() -> BehaviorTable:
    return BehaviorTable(np.full((2, 2, 2, 2), 0.25))


def pr_box() -> BehaviorTable:
    """p(a, b | x, y) = 1/2 when a xor b = (1 - x) * y, else 0."""
    return BehaviorTable.from_function(lambda x, y, a, b: 0.5 if (a ^ b) == (1 - x) * y else 0.0)


def local_strategies() -> List[LocalStrategy]:
    """All 16 deterministic local strategies."""
    return [LocalStrategy(a0, a1, b0, b1) for a0, a1, b0, b1 in product((1, -1), repeat=4)]


def local_deterministic_bound() -> Tuple[float, LocalStrategy]:
    """Maximum |S| over deterministic local strategies and one strategy reaching it."""
    best = max(local_strategies(), key=lambda strategy: abs(strategy.chsh))
    return float(abs(best.chsh)), best


def deterministic_behavior(strategy: LocalStrategy) -> BehaviorTable:
    bits_a = (0 if strategy.a0 == 1 else 1, 0 if strategy.a1 == 1 else 1)
    bits_b = (0 if strategy.b0 == 1 else 1, 0 if strategy.b1 == 1 else 1)
    return BehaviorTable.from_function(lambda x, y, a, b: float(a == bits_a[x] and b == bits_b[y]))


def no_signaling_vertices() -> List[BehaviorTable]:
    """The 16 local deterministic tables followed by the 8 PR-type tables.

    PR-type tables are a xor b = xy xor alpha*x xor beta*y xor gamma, in the order
    of (alpha, beta, gamma) counted in binary.
    """
    vertices = [deterministic_behavior(strategy) for strategy in local_strategies()]
    for alpha, beta, gamma in product((0, 1), repeat=3):
        vertices.append(BehaviorTable.from_function(
            lambda x, y, a, b, al=alpha, be=beta, ga=gamma:
                0.5 if (a ^ b) == ((x * y) ^ (al * x) ^ (be * y) ^ ga) else 0.0
        ))
    return vertices


def relabel_behavior(table: BehaviorTable, swap_x: bool = False, swap_y: bool = False,
                     flip_a: Sequence[bool] = (False, False),
                     flip_b: Sequence[bool] = (False, False)) -> BehaviorTable:
    """Exchange setting labels and flip outcome labels per setting."""
    p = table.p.copy()
    if swap_x:
        p = p[::-1, :, :, :]
    if swap_y:
        p = p[:, ::-1, :, :]
    for x in range(2):
        if flip_a[x]:
            p[x] = p[x][:, ::-1, :].copy()
    for y in range(2):
        if flip_b[y]:
            p[:, y] = p[:, y][:, :, ::-1].copy()
    return BehaviorTable(p)


def mix_behaviors(tables: Sequence[BehaviorTable], weights: Sequence[float]) -> BehaviorTable:
    """Convex mixture of behavior tables."""
    w = np.asarray(weights, dtype=np.float64)
    if len(tables) != w.size or w.size == 0:
        raise ValidationError("need one weight per table", field="weights", value=list(w))
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValidationError("weights must be nonnegative and sum to 1", field="weights", value=float(w.sum()))
    p = np.tensordot(w / w.sum(), np.stack([t.p for t in tables]), axes=1)
    return BehaviorTable(p)


def is_no_signaling(table: BehaviorTable, tol: float = PROBABILITY_TOLERANCE) -> NoSignalingVerdict:
    """Marginals of A must not depend on y, nor those of B on x."""
    marginal_a = table.p.sum(axis=3)  # [x, y, a]
    marginal_b = table.p.sum(axis=2)  # [x, y, b]
    violation_a = float(np.max(np.abs(marginal_a[:, 0, :] - marginal_a[:, 1, :])))
    violation_b = float(np.max(np.abs(marginal_b[0, :, :] - marginal_b[1, :, :])))
    violation = max(violation_a, violation_b)
    return NoSignalingVerdict(ok=violation <= tol, max_violation=violation)


def quantum_behavior(state: TwoQubitState, angles: ChshAngles) -> BehaviorTable:
    """Behavior of a two-qubit state measured at a0/a1 (x) and b0/b1 (y)."""
    a = (angles.a0, angles.a1)
    b = (angles.b0, angles.b1)
    p = np.zeros((2, 2, 2, 2))
    for x, y in product(range(2), repeat=2):
        probs = outcome_probabilities(state, SettingPair(a[x], b[y]))
        p[x, y] = np.array(probs.as_tuple()).reshape(2, 2)
    return BehaviorTable(p)


def builtin_behavior(name: str) -> BehaviorTable:
    """Named tables: pr, local, quantum (singlet at canonical angles), uniform."""
    key = name.lower().strip()
    if key == "pr":
        return pr_box()
    if key == "local":
        return deterministic_behavior(local_deterministic_bound()[1])
    if key == "quantum":
        return quantum_behavior(singlet_state(), ChshAngles.canonical())
    if key == "uniform":
        return uniform_behavior()
    raise ValidationError(f"unknown builtin behavior: {name}", field="builtin", value=name)


def bound_report(result: SResult, sigma: Optional[float] = None) -> BoundReport:
    """Distances of |S| to the local, Grinbaum and Tsirelson bounds in units of sigma."""
    sigma = result.sigma if sigma is None else sigma
    if sigma <= 0:
        raise ValidationError("bound report needs sigma > 0", field="sigma", value=sigma)
    abs_s = abs(result.s)
    gap = TSIRELSON_BOUND - abs_s
    return BoundReport(
        s=result.s,
        sigma=sigma,
        z_local=(abs_s - LOCAL_BOUND) / sigma,
        z_grinbaum=(abs_s - GRINBAUM_BOUND) / sigma,
        tsirelson_gap=gap,
        gap_sigmas=gap / sigma,
    )


def bound_constants() -> Dict[str, float]:
    return {"local": LOCAL_BOUND, "grinbaum": GRINBAUM_BOUND, "tsirelson": TSIRELSON_BOUND, "pr": PR_BOUND}
