"""End-to-end checks of the headline numbers: bounds, budget, significance and optimizer."""

import dataclasses
import math

import numpy as np
import pytest

from bellbench.application.event_sim import match_coincidences, run_experiment, sample_counts_aggregate
from bellbench.application.optimizer import ModelOracle, optimize
from bellbench.application.services import AnalysisService, truncate_1dp
from bellbench.domain.apparatus import accidental_rate, expected_chsh, expected_records, mean_singles
from bellbench.domain.bounds import (
    bound_report, chsh_of_behavior, is_no_signaling, local_deterministic_bound, pr_box,
)
from bellbench.domain.budget import counting_term, full_budget
from bellbench.domain.estimators import estimate_s
from bellbench.domain.models import (
    GRINBAUM_BOUND, AccidentalConvention, ChshAngles, CoincidenceWindow, ErrorBudget, PolarizerAngle, SResult,
    TimestampStream,
)
from bellbench.domain.quantum import chsh_value, correlation, maximize_chsh, singlet_state, werner_state

from .test_event_sim import _greedy_reference

ROOT2 = math.sqrt(2.0)


def test_singlet_reaches_tsirelson_bound():
    s = chsh_value(singlet_state(), *(PolarizerAngle(x) for x in (0.0, 45.0, 22.5, 67.5)))
    assert abs(s) == pytest.approx(2.0 * ROOT2, abs=1e-12)


def test_local_bound_is_two():
    bound, _ = local_deterministic_bound()
    assert bound == 2


def test_pr_box_reaches_four_without_signaling():
    table = pr_box()
    assert chsh_of_behavior(table) == pytest.approx(4.0, abs=1e-12)
    verdict = is_no_signaling(table)
    assert verdict.ok
    assert verdict.max_violation <= 1e-12


def test_counting_term_at_lab_scale(lab_params, lab_plan):
    records = expected_records(lab_params, lab_plan)
    assert int(records.coincidence_totals().sum()) == pytest.approx(33.18e6, rel=1e-3)
    assert counting_term(records) == pytest.approx(4.9e-4, rel=0.1)


def test_exposure_terms_at_lab_scale(lab_params, lab_plan):
    budget = full_budget(expected_records(lab_params, lab_plan), lab_params)
    assert budget.ds_c / budget.ds_t == pytest.approx(60.0, rel=1e-9)
    assert 4.7e-11 / 3 <= budget.ds_t <= 4.7e-11 * 3
    assert 2.8e-9 / 3 <= budget.ds_c <= 2.8e-9 * 3
    assert 5.4e-7 / 2 <= budget.ds_d <= 5.4e-7 * 2


def test_reference_budget_combines_in_quadrature():
    budget = ErrorBudget(ds_p=4.9e-4, ds_d=5.4e-7, ds_t=4.7e-11, ds_c=0.0, ds_r=1.2e-4)
    assert budget.total == pytest.approx(5.045e-4, abs=1e-6)
    assert abs(budget.total - 0.00051) < 1e-5


def test_significance_of_reference_value():
    report = bound_report(SResult.from_value(2.82759, 0.00051))
    assert (2.82759 - GRINBAUM_BOUND) / 0.00051 == pytest.approx(4.35, abs=0.005)
    assert truncate_1dp(report.z_grinbaum) == 4.3
    assert report.tsirelson_gap == pytest.approx(0.00084, abs=5e-6)


def test_accidentals_at_lab_singles(lab_config, lab_params, lab_plan):
    ra, rb = mean_singles(lab_params, lab_plan.angles)
    half = accidental_rate(ra, rb, lab_params.window, AccidentalConvention.HALF)
    full = accidental_rate(ra, rb, lab_params.window, AccidentalConvention.FULL)
    assert half == pytest.approx(0.0200, rel=5e-3)
    assert full == pytest.approx(0.0401, rel=5e-3)
    document = AnalysisService(lab_config).analyze(expected_records(lab_params, lab_plan)).to_dict()
    assert "full" in document["accidentals"]["note"]


def test_optimizer_recovers_canonical_angles(ideal_params, lab_params):
    angles = optimize(ModelOracle(ideal_params), resolution=0.1, dwell=10.0)
    assert angles.converged
    for found, target in zip((angles.a0, angles.b0, angles.a1, angles.b1), (0.0, 22.5, 45.0, 67.5)):
        assert found == pytest.approx(target, abs=0.1)

    found = optimize(ModelOracle(lab_params), resolution=0.1, dwell=10.0)
    assert abs(expected_chsh(lab_params, found.as_chsh_angles())) >= \
        abs(expected_chsh(lab_params, ChshAngles.canonical()))


@pytest.mark.parametrize("v", [0.9, 0.99, 0.999])
def test_werner_maximum_scales_with_visibility(v):
    state = werner_state(v)
    best, _ = maximize_chsh(lambda pair: correlation(state, pair), starts=3)
    assert best == pytest.approx(v * 2.0 * ROOT2, abs=1e-6)


def test_matching_equals_quadratic_reference():
    rng = np.random.default_rng(2024)
    a = np.sort(rng.uniform(0.0, 1.0, 10_000))
    b = np.sort(rng.uniform(0.0, 1.0, 10_000))
    half_width = 1e-5
    window = CoincidenceWindow(half_width)
    count = match_coincidences(TimestampStream(a, duration=1.0), TimestampStream(b, duration=1.0), window)
    assert count == _greedy_reference(a, b, half_width)


@pytest.mark.slow
def test_event_and_aggregate_rates_agree_at_lab_rates(full_window_params, lab_plan):
    plan = dataclasses.replace(lab_plan, sets=1, seed=3)
    event = run_experiment(full_window_params, plan).coincidence_totals().astype(float)
    aggregate = sample_counts_aggregate(full_window_params, dataclasses.replace(plan, seed=4))
    aggregate_counts = aggregate.coincidence_totals().astype(float)
    combined = np.sqrt(event + aggregate_counts)
    assert np.all(np.abs(event - aggregate_counts) < 4.0 * combined + 1.0)


@pytest.mark.slow
def test_counting_interval_coverage(lab_params, lab_plan):
    plan = dataclasses.replace(lab_plan, sets=10)
    expected = expected_chsh(lab_params, plan.angles)
    sigma = counting_term(expected_records(lab_params, plan))

    runs = [estimate_s(sample_counts_aggregate(lab_params, dataclasses.replace(plan, seed=k)))
            for k in range(1000)]
    values = np.array([r.s for r in runs])
    covered = np.mean([abs(r.s - expected) <= 1.96 * r.sigma for r in runs])

    assert float(np.std(values, ddof=1)) == pytest.approx(sigma, rel=0.15)
    assert 0.93 <= covered <= 0.97
