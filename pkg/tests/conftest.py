"""Shared fixtures for the bellbench test suite."""

import dataclasses
from pathlib import Path

import pytest
from hypothesis import settings

from bellbench.domain.models import AccidentalConvention, ApparatusParams, ChshAngles, ExperimentPlan
from bellbench.infrastructure.config import RunConfig, preset_config

settings.register_profile("bellbench", deadline=None, max_examples=50)
settings.load_profile("bellbench")


@pytest.fixture
def lab_config() -> RunConfig:
    return preset_config("lab")


@pytest.fixture
def ideal_config() -> RunConfig:
    return preset_config("ideal")


@pytest.fixture
def lab_params(lab_config: RunConfig) -> ApparatusParams:
    return lab_config.to_apparatus()


@pytest.fixture
def ideal_params(ideal_config: RunConfig) -> ApparatusParams:
    return ideal_config.to_apparatus()


@pytest.fixture
def lab_plan(lab_config: RunConfig) -> ExperimentPlan:
    return lab_config.to_plan()


@pytest.fixture
def canonical_plan() -> ExperimentPlan:
    return ExperimentPlan(angles=ChshAngles.canonical(), sets=1, interval=60.0, seed=0)


@pytest.fixture
def full_window_params(lab_params: ApparatusParams) -> ApparatusParams:
    """Lab apparatus predicting accidentals the way the event simulator realizes them."""
    return dataclasses.replace(lab_params, convention=AccidentalConvention.FULL)


@pytest.fixture
def log_dir(tmp_path: Path) -> Path:
    return tmp_path / "logs"
