"""Tests for behavior tables, no-signaling checks and the bound landscape."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellbench.domain.bounds import (
    behavior_correlations, bound_constants, bound_report, builtin_behavior, chsh_of_behavior,
    deterministic_behavior, is_no_signaling, local_deterministic_bound, local_strategies, mix_behaviors,
    no_signaling_vertices, pr_box, quantum_behavior, relabel_behavior, uniform_behavior,
)
from bellbench.domain.models import BehaviorTable, ChshAngles, LocalStrategy, SResult
from bellbench.domain.quantum import singlet_state
from bellbench.exceptions import ValidationError

from .strategies import density_matrices, chsh_angles, random_angles, random_density_matrix

ROOT2 = math.sqrt(2.0)


def _signaling_table() -> BehaviorTable:
    """Product distribution where Alice's marginal depends on Bob's setting."""
    def p(x: int, y: int, a: int, b: int) -> float:
        p_a = 0.5 + 0.1 * y
        return (p_a if a == 0 else 1.0 - p_a) * 0.5
    return BehaviorTable.from_function(p)


class TestBehaviors:
    """CHSH values of the named behaviors."""

    def test_pr_box(self):
        table = pr_box()
        assert chsh_of_behavior(table) == pytest.approx(4.0)
        np.testing.assert_allclose(table.p.sum(axis=3), 0.5)
        np.testing.assert_allclose(table.p.sum(axis=2), 0.5)

    def test_uniform(self):
        assert chsh_of_behavior(uniform_behavior()) == 0.0

    def test_quantum_singlet(self):
        table = quantum_behavior(singlet_state(), ChshAngles.canonical())
        assert chsh_of_behavior(table) == pytest.approx(-2.0 * ROOT2, abs=1e-12)

    def test_correlations_of_pr_box(self):
        np.testing.assert_allclose(behavior_correlations(pr_box()), [[1.0, -1.0], [1.0, 1.0]])

    @pytest.mark.parametrize("name, value", [("pr", 4.0), ("local", 2.0), ("uniform", 0.0),
                                             ("quantum", -2.0 * ROOT2)])
    def test_builtin_behaviors(self, name, value):
        assert chsh_of_behavior(builtin_behavior(name)) == pytest.approx(value, abs=1e-12)

    def test_unknown_builtin(self):
        with pytest.raises(ValidationError):
            builtin_behavior("magic")

    def test_unnormalized_table_rejected(self):
        p = np.full((2, 2, 2, 2), 0.25)
        p[0, 0, 0, 0] = 0.3
        with pytest.raises(ValidationError, match="max deviation"):
            BehaviorTable(p)

    def test_negative_entry_rejected(self):
        p = np.full((2, 2, 2, 2), 0.25)
        p[0, 0, 0, 0], p[0, 0, 0, 1] = -0.25, 0.75
        with pytest.raises(ValidationError, match="negative"):
            BehaviorTable(p)

    def test_document_round_trip(self):
        restored = BehaviorTable.from_dict(pr_box().to_dict())
        np.testing.assert_array_equal(restored.p, pr_box().p)
        with pytest.raises(ValidationError):
            BehaviorTable.from_dict({"q": []})

    @pytest.mark.parametrize("p", [[[1, 2], [3]], [[[["x", 0.5]]]], {"a": 1}])
    def test_non_numeric_or_ragged_table_rejected(self, p):
        with pytest.raises(ValidationError):
            BehaviorTable.from_dict({"p": p})


class TestLocalStrategies:
    """Deterministic local strategies."""

    def test_sixteen_strategies_with_values_two(self):
        strategies = local_strategies()
        assert len(strategies) == 16
        assert {abs(s.chsh) for s in strategies} == {2}

    def test_local_bound(self):
        bound, strategy = local_deterministic_bound()
        assert bound == 2.0
        assert strategy == LocalStrategy(1, 1, 1, 1)
        assert chsh_of_behavior(deterministic_behavior(strategy)) == pytest.approx(2.0)

    def test_strategy_outcomes_validated(self):
        with pytest.raises(ValidationError):
            LocalStrategy(1, 0, 1, 1)

    def test_random_local_mixtures_stay_below_two(self):
        rng = np.random.default_rng(17)
        tables = [deterministic_behavior(s) for s in local_strategies()]
        worst = max(abs(chsh_of_behavior(mix_behaviors(tables, rng.dirichlet(np.ones(16)))))
                    for _ in range(10_000))
        assert worst <= 2.0 + 1e-12


class TestNoSignaling:
    """Marginal independence checks."""

    def test_pr_box_is_no_signaling(self):
        verdict = is_no_signaling(pr_box())
        assert verdict.ok
        assert verdict.max_violation == 0.0

    def test_quantum_behaviors_are_no_signaling(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            verdict = is_no_signaling(quantum_behavior(random_density_matrix(rng), random_angles(rng)))
            assert verdict.ok, verdict.max_violation

    def test_signaling_table_detected(self):
        verdict = is_no_signaling(_signaling_table())
        assert not verdict.ok
        assert verdict.max_violation == pytest.approx(0.1)

    @given(density_matrices(), chsh_angles())
    def test_quantum_behavior_respects_tsirelson(self, state, angles):
        assert abs(chsh_of_behavior(quantum_behavior(state, angles))) <= 2.0 * ROOT2 + 1e-9


class TestVertices:
    """Vertices of the no-signaling polytope."""

    def test_vertex_count_and_values(self):
        vertices = no_signaling_vertices()
        values = [chsh_of_behavior(v) for v in vertices]
        assert len(vertices) == 24
        assert all(abs(v) == pytest.approx(2.0) for v in values[:16])
        # the other six PR-type tables saturate CHSH variants with different signs
        assert sorted(round(v, 12) for v in values[16:]) == [-4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0]

    def test_pr_box_is_the_unique_vertex_at_four(self):
        vertices = no_signaling_vertices()
        at_four = [i for i, v in enumerate(vertices) if chsh_of_behavior(v) == pytest.approx(4.0)]
        assert at_four == [18]
        np.testing.assert_array_equal(vertices[18].p, pr_box().p)

    def test_all_vertices_are_no_signaling(self):
        assert all(is_no_signaling(v).ok for v in no_signaling_vertices())

    @given(st.floats(0.0, 1.0))
    def test_chsh_is_linear_in_mixtures(self, weight):
        mixed = mix_behaviors([pr_box(), uniform_behavior()], [weight, 1.0 - weight])
        assert chsh_of_behavior(mixed) == pytest.approx(4.0 * weight, abs=1e-12)

    def test_mixture_weights_validated(self):
        with pytest.raises(ValidationError):
            mix_behaviors([pr_box(), uniform_behavior()], [0.7, 0.7])
        with pytest.raises(ValidationError):
            mix_behaviors([pr_box()], [0.5, 0.5])


class TestRelabeling:
    """Setting and outcome relabelings."""

    def test_flipping_all_outcomes_of_one_side_negates_s(self):
        flipped = relabel_behavior(pr_box(), flip_a=(True, True))
        assert chsh_of_behavior(flipped) == pytest.approx(-4.0)

    def test_relabeling_twice_is_identity(self):
        once = relabel_behavior(pr_box(), swap_x=True, flip_b=(False, True))
        twice = relabel_behavior(once, swap_x=True, flip_b=(False, True))
        np.testing.assert_array_equal(twice.p, pr_box().p)

    def test_relabeled_pr_box_is_a_vertex(self):
        relabeled = relabel_behavior(pr_box(), swap_y=True)
        assert any(np.array_equal(relabeled.p, v.p) for v in no_signaling_vertices()[16:])


class TestBoundReport:
    """Significance against the local, Grinbaum and Tsirelson bounds."""

    def test_reference_result(self):
        report = bound_report(SResult.from_value(2.82759, 0.00051))
        assert report.z_grinbaum == pytest.approx(4.35, abs=0.01)
        assert report.tsirelson_gap == pytest.approx(0.00084, abs=1e-5)
        assert report.gap_sigmas == pytest.approx(1.65, abs=0.02)

    def test_at_local_bound(self):
        assert bound_report(SResult.from_value(-2.0, 0.01)).z_local == 0.0

    def test_at_tsirelson_bound(self):
        assert bound_report(SResult.from_value(2.0 * ROOT2, 0.001)).tsirelson_gap == pytest.approx(0.0, abs=1e-15)

    def test_sigma_override(self):
        report = bound_report(SResult.from_value(2.82759, 0.00049), sigma=0.00051)
        assert report.sigma == 0.00051

    @pytest.mark.parametrize("sigma", [0.0, -1e-3])
    def test_non_positive_sigma_rejected(self, sigma):
        with pytest.raises(ValidationError):
            bound_report(SResult.from_value(2.8, 0.001), sigma=sigma)

    def test_constants(self):
        constants = bound_constants()
        assert constants["local"] < constants["grinbaum"] < constants["tsirelson"] < constants["pr"]
        assert constants["grinbaum"] == 2.82537
