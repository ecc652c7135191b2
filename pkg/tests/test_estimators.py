"""Tests for correlation, S and visibility estimators."""

import dataclasses
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellbench.application.event_sim import sample_counts_aggregate
from bellbench.application.optimizer import ModelOracle, scan_fringe
from bellbench.domain.apparatus import expected_records
from bellbench.domain.estimators import (
    combine_correlations, correlation_table, estimate_correlation, estimate_s, estimate_visibility,
)
from bellbench.domain.models import (
    ChshAngles, CoincidenceCounts, CorrelationModel, ExperimentPlan, MeasurementRecordSet, PolarizerAngle,
    SResult,
)
from bellbench.exceptions import FitError, IncompleteRecordError, UndefinedCorrelationError, ValidationError

counts = st.integers(min_value=0, max_value=10**6)


class TestCorrelationEstimate:
    """E and its Poisson error from four outcome counts."""

    def test_perfect_correlation(self):
        est = estimate_correlation(CoincidenceCounts(100, 0, 0, 100))
        assert (est.e, est.sigma, est.n_total) == (1.0, 0.0, 200)

    def test_uniform_counts(self):
        est = estimate_correlation(CoincidenceCounts(25, 25, 25, 25))
        assert est.e == 0.0
        assert est.sigma == pytest.approx(0.1)

    def test_zero_counts_undefined(self):
        with pytest.raises(UndefinedCorrelationError) as exc:
            estimate_correlation(CoincidenceCounts(0, 0, 0, 0), setting=4)
        assert exc.value.setting == 4

    def test_error_at_lab_statistics(self):
        n = 8_300_000
        e = -1.0 / math.sqrt(2.0)
        plus = round(n * (1 + e) / 2)
        est = estimate_correlation(CoincidenceCounts(plus // 2, (n - plus) // 2, (n - plus) // 2, plus // 2))
        assert est.sigma == pytest.approx(2.45e-4, rel=1e-2)

    @given(counts, counts, counts, counts)
    def test_error_identity(self, n_pp, n_pm, n_mp, n_mm):
        c = CoincidenceCounts(n_pp, n_pm, n_mp, n_mm)
        if c.total == 0:
            return
        est = estimate_correlation(c)
        assert est.sigma ** 2 == pytest.approx((1.0 - est.e ** 2) / c.total, rel=1e-9)

    @given(counts, counts, counts, counts, st.integers(2, 50))
    def test_scaling_counts(self, n_pp, n_pm, n_mp, n_mm, k):
        c = CoincidenceCounts(n_pp, n_pm, n_mp, n_mm)
        if c.total == 0:
            return
        base = estimate_correlation(c)
        scaled = estimate_correlation(CoincidenceCounts(k * n_pp, k * n_pm, k * n_mp, k * n_mm))
        assert scaled.e == pytest.approx(base.e, abs=1e-12)
        assert scaled.sigma == pytest.approx(base.sigma / math.sqrt(k), rel=1e-9, abs=1e-15)

    def test_error_matches_poisson_resampling(self):
        rng = np.random.default_rng(1)
        draws = rng.poisson(25.0, size=(100_000, 4))
        plus = draws[:, 0] + draws[:, 3]
        total = draws.sum(axis=1)
        e = (2 * plus - total) / total
        assert float(np.std(e)) == pytest.approx(0.1, rel=0.02)


class TestEstimateS:
    """Pooling records into S."""

    def test_combine_adds_errors_in_quadrature(self):
        estimates = [estimate_correlation(CoincidenceCounts(25, 25, 25, 25))] * 4
        result = combine_correlations(estimates)
        assert result.s == 0.0
        assert result.sigma == pytest.approx(0.2)

    def test_ideal_counts_approach_tsirelson(self, ideal_params):
        records = expected_records(ideal_params, ExperimentPlan(angles=ChshAngles.canonical(), sets=10))
        result = estimate_s(records)
        assert abs(result.s + 2.0 * math.sqrt(2.0)) < 3.0 * result.sigma + 1e-3

    def test_missing_settings(self, ideal_params):
        records = expected_records(ideal_params, ExperimentPlan(angles=ChshAngles.canonical(), sets=1))
        partial = MeasurementRecordSet(tuple(r for r in records if r.setting != 5))
        with pytest.raises(IncompleteRecordError) as exc:
            estimate_s(partial)
        assert (-1, 5) in exc.value.missing

    def test_invariant_under_set_permutation(self, lab_params, lab_plan):
        records = sample_counts_aggregate(lab_params, dataclasses.replace(lab_plan, sets=5))
        shuffled = list(records)
        random.Random(0).shuffle(shuffled)
        assert estimate_s(MeasurementRecordSet(tuple(shuffled))) == estimate_s(records)

    def test_lab_counting_error(self, lab_params, lab_plan):
        result = estimate_s(sample_counts_aggregate(lab_params, lab_plan))
        assert result.sigma == pytest.approx(4.9e-4, rel=0.1)
        assert result.n_total == pytest.approx(33_184_329, rel=1e-2)

    def test_correlation_table_rows(self, ideal_params):
        result = estimate_s(expected_records(ideal_params, ExperimentPlan(angles=ChshAngles.canonical())))
        rows = correlation_table(result)
        assert [row[0] for row in rows] == ["a0b0", "a0b1", "a1b0", "a1b1"]
        assert rows[1][1] == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-3)

    def test_reference_value_significance(self):
        result = SResult.from_value(2.82759, 0.00051)
        assert result.grinbaum_z == pytest.approx(4.35, abs=0.01)
        assert result.tsirelson_gap == pytest.approx(0.00084, abs=1e-5)


class TestVisibility:
    """Fringe fits to polarizer scans."""

    SWEEP = list(np.arange(0.0, 180.0, 5.0))

    def test_noiseless_perfect_fringe(self):
        scan = [(t, 1000.0 * (1.0 + math.cos(math.radians(2.0 * t - 40.0)))) for t in self.SWEEP]
        estimate = estimate_visibility(scan)
        assert estimate.v == pytest.approx(1.0, abs=1e-6)

    def test_model_fringe_at_45_degrees(self, ideal_params):
        params = dataclasses.replace(ideal_params, model=CorrelationModel(v_hv=1.0, v_45=0.999))
        scan = scan_fringe(ModelOracle(params), PolarizerAngle(45.0), "a", self.SWEEP, dwell=10.0)
        assert estimate_visibility(scan).v == pytest.approx(0.999, abs=1e-4)

    def test_noisy_fringe_within_error(self):
        rng = np.random.default_rng(8)
        scan = [(t, float(rng.poisson(5000.0 * (1.0 + 0.95 * math.cos(math.radians(2.0 * t)))))) for t in self.SWEEP]
        estimate = estimate_visibility(scan)
        assert estimate.sigma < 0.01
        assert abs(estimate.v - 0.95) < 4.0 * estimate.sigma

    def test_constant_scan_is_degenerate(self):
        with pytest.raises(FitError):
            estimate_visibility([(t, 100.0) for t in self.SWEEP])

    def test_too_few_points(self):
        with pytest.raises(FitError):
            estimate_visibility([(0.0, 1.0), (90.0, 5.0)])

    def test_span_below_half_period(self):
        with pytest.raises(ValidationError):
            estimate_visibility([(t, 100.0 + t) for t in (0.0, 10.0, 20.0, 30.0)])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            estimate_visibility([(0.0, -1.0), (45.0, 5.0), (90.0, 10.0), (135.0, 5.0)])
