"""Shared fixtures: one full default-scenario run and one small fast run."""

from __future__ import annotations

import time
from types import SimpleNamespace

import pytest

from shellcohort.pipeline import PipelineConfig, run_pipeline
from shellcohort.synth import ScenarioConfig, simulate, write_scenario


@pytest.fixture(scope="session")
def default_run(tmp_path_factory):
    """Default synthetic scenario pushed through the full pipeline once.

    Shared by the end-to-end acceptance checks; ``elapsed`` covers data
    generation plus the pipeline run.
    """
    base = tmp_path_factory.mktemp("default_scenario")
    scenario = ScenarioConfig()
    t0 = time.perf_counter()
    observations, truth = simulate(scenario)
    survey_path, truth_path = write_scenario(observations, truth, base / "survey.csv")
    config = PipelineConfig(input_path=survey_path, output_dir=base / "run1")
    manifest = run_pipeline(config)
    elapsed = time.perf_counter() - t0
    return SimpleNamespace(
        base=base,
        scenario=scenario,
        survey_path=survey_path,
        truth_path=truth_path,
        config=config,
        out=base / "run1",
        manifest=manifest,
        elapsed=elapsed,
    )


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """Small two-reef scenario for fast structural checks of the pipeline."""
    base = tmp_path_factory.mktemp("small_scenario")
    scenario = ScenarioConfig(
        years=(2010, 2014),
        n_strata=1,
        n_reefs=2,
        recruitment_per_year=70,
        growth_increments_mm=(15.0, 30.0),
        length_sd_mm=(5.0, 4.5),
        annual_survival=(0.9, 0.9),
        seed=7,
    )
    observations, truth = simulate(scenario)
    survey_path, truth_path = write_scenario(observations, truth, base / "survey.csv")
    config = PipelineConfig(
        input_path=survey_path,
        output_dir=base / "out",
        years=(2010, 2014),
        min_per_year=100,
        min_run=4,
    )
    manifest = run_pipeline(config)
    return SimpleNamespace(
        base=base,
        scenario=scenario,
        survey_path=survey_path,
        truth_path=truth_path,
        config=config,
        out=base / "out",
        manifest=manifest,
    )
