"""shellcohort: age structure and cohort growth from shell-length surveys.

The package estimates the age composition of sessile shellfish populations
that cannot be aged directly: per-reef length samples are decomposed into
Gaussian mixture components, component means are converted to ages through
river-wide quantile cutoffs, and same-age components are linked across years
into growing cohort chains.  A seeded synthetic-survey generator provides
ground truth for end-to-end validation.
"""

from .aging import AgedComponent, RiverModel, age_cutoffs, assign_ages, fit_river_model, pool_duplicates
from .linking import (
    ChainMember,
    CohortChain,
    ComponentTable,
    cohort_summary,
    initial_labels,
    link_cohorts,
    relabel_unassigned,
)
from .mixtures import (
    FitConfig,
    LogNormalFit,
    MixtureFit,
    adjust_weights,
    bic,
    candidate_fits,
    em_fit,
    fit_lognormal,
    select_model,
    spat_fraction,
)
from .pipeline import ComponentRecord, PipelineConfig, RunManifest, run_pipeline
from .survey import (
    Sample,
    SampleCondition,
    ShellObservation,
    SurveyFormatError,
    build_samples,
    classify_sample,
    eligible_reefs,
    parse_survey_csv,
)
from .synth import (
    ScenarioConfig,
    TruthRecord,
    loglik_oracle,
    mixture_moments_oracle,
    read_truth_csv,
    simulate,
    write_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AgedComponent",
    "ChainMember",
    "CohortChain",
    "ComponentRecord",
    "ComponentTable",
    "FitConfig",
    "LogNormalFit",
    "MixtureFit",
    "PipelineConfig",
    "RiverModel",
    "RunManifest",
    "Sample",
    "SampleCondition",
    "ScenarioConfig",
    "ShellObservation",
    "SurveyFormatError",
    "TruthRecord",
    "adjust_weights",
    "age_cutoffs",
    "assign_ages",
    "bic",
    "build_samples",
    "candidate_fits",
    "classify_sample",
    "cohort_summary",
    "eligible_reefs",
    "em_fit",
    "fit_lognormal",
    "fit_river_model",
    "initial_labels",
    "link_cohorts",
    "loglik_oracle",
    "mixture_moments_oracle",
    "parse_survey_csv",
    "pool_duplicates",
    "read_truth_csv",
    "relabel_unassigned",
    "run_pipeline",
    "select_model",
    "simulate",
    "spat_fraction",
    "write_scenario",
]
