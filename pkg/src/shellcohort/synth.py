"""Synthetic survey generation with known cohort structure, plus oracles.

The generator builds a population whose age classes advance along configured
mean growth increments: age-1 animals (spat) draw lengths from a log-normal,
and each older class a draws from a Gaussian centred on the spat mean plus
the first a - 1 increments.  Survival thins each class binomially between
years.  Because every animal's cohort and age are known, the output doubles
as ground truth for end-to-end recovery checks: a sidecar CSV carries
``row_id,true_cohort,true_age`` aligned with the survey rows.

The module also hosts small self-contained oracles (mixture moments,
mixture log-likelihood) used to cross-check the fitting code; they share no
implementation with it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .survey import HEADER, ShellObservation

TRUTH_HEADER = ("row_id", "true_cohort", "true_age")

#: Minimum ratio of a growth increment to its destination-class length sd;
#: below this the age classes blur together and the scenario stops being a
#: meaningful recovery target.
SEPARABILITY = 3.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Settings for one synthetic survey.

    ``growth_increments_mm[i]`` is the mean length gain moving from age
    i + 1 to age i + 2; ``length_sd_mm[i]`` is the sd of the age-(i + 2)
    class; ``annual_survival[i]`` is the chance an age-(i + 1) animal lives
    to age i + 2.  The oldest representable age is
    ``len(growth_increments_mm) + 1``.
    """

    years: tuple[int, int] = (2003, 2017)
    n_strata: int = 1
    n_reefs: int = 5
    recruitment_per_year: int = 400
    growth_increments_mm: tuple[float, ...] = (15.0, 30.0, 26.0, 24.0)
    length_sd_mm: tuple[float, ...] = (5.0, 4.5, 4.5, 4.5)
    annual_survival: tuple[float, ...] = (0.93, 0.93, 0.93, 0.93)
    spat_meanlog: float = 3.28
    spat_sdlog: float = 0.5
    seed: int = 42

    def __post_init__(self):
        y0, y1 = self.years
        if y0 > y1:
            raise ValueError(f"invalid year range {self.years!r}")
        if self.n_strata < 1 or self.n_reefs < 1:
            raise ValueError("need at least one stratum and one reef")
        if self.recruitment_per_year < 1:
            raise ValueError("recruitment_per_year must be at least 1")
        k = len(self.growth_increments_mm)
        if k < 1:
            raise ValueError("need at least one growth increment")
        if len(self.length_sd_mm) != k or len(self.annual_survival) != k:
            raise ValueError(
                "growth_increments_mm, length_sd_mm and annual_survival must have equal length"
            )
        if any(s <= 0 for s in self.length_sd_mm):
            raise ValueError("length sds must be positive")
        if any(not 0.0 < s <= 1.0 for s in self.annual_survival):
            raise ValueError("annual survival rates must lie in (0, 1]")
        if self.spat_sdlog <= 0:
            raise ValueError("spat_sdlog must be positive")
        for i, (inc, sd) in enumerate(zip(self.growth_increments_mm, self.length_sd_mm)):
            if inc < SEPARABILITY * sd:
                raise ValueError(
                    f"growth increment {i} ({inc}) below {SEPARABILITY}x its class sd ({sd}); "
                    "age classes would not be separable"
                )

    @property
    def max_age(self) -> int:
        return len(self.growth_increments_mm) + 1

    @property
    def spat_mean_mm(self) -> float:
        return math.exp(self.spat_meanlog + 0.5 * self.spat_sdlog**2)

    def class_mean_mm(self, age: int) -> float:
        """Expected length of the age-``age`` class."""
        if not 1 <= age <= self.max_age:
            raise ValueError(f"age must lie in [1, {self.max_age}], got {age}")
        return self.spat_mean_mm + sum(self.growth_increments_mm[: age - 1])


@dataclass(frozen=True)
class TruthRecord:
    """Ground truth for one survey row."""

    true_cohort: str
    true_age: int


def simulate(config: ScenarioConfig) -> tuple[list[ShellObservation], list[TruthRecord]]:
    """Generate a survey with per-row ground truth.

    Rows come out ordered by stratum, reef, year and age, with each reef
    driven by its own seeded RNG stream -- identical configs give identical
    output.  Before the first output year the population dynamics are warmed
    up for ``max_age - 1`` unobserved years, so the survey opens on an
    established population with every age class present.
    """
    observations: list[ShellObservation] = []
    truth: list[TruthRecord] = []
    y0, y1 = config.years
    for si in range(config.n_strata):
        stratum_id = f"SIM{si + 1}"
        for ri in range(config.n_reefs):
            reef_id = str(101 + ri)
            rng = np.random.default_rng([config.seed, si, ri])
            alive: dict[int, int] = {}
            for year in range(y0 - config.max_age + 1, y1 + 1):
                alive[1] = config.recruitment_per_year
                if year < y0:  # warm-up: advance the population, emit nothing
                    alive = _survive(alive, config, rng)
                    continue
                for age in range(1, config.max_age + 1):
                    count = alive.get(age, 0)
                    if count == 0:
                        continue
                    if age == 1:
                        lengths = rng.lognormal(
                            config.spat_meanlog, config.spat_sdlog, size=count
                        )
                        stage = "spat"
                    else:
                        lengths = rng.normal(
                            config.class_mean_mm(age),
                            config.length_sd_mm[age - 2],
                            size=count,
                        )
                        stage = "live"
                    lengths = np.maximum(lengths, 0.1)  # guard pathological configs
                    cohort = f"{stratum_id}.{reef_id}.{year - age + 1}"
                    for length in lengths:
                        observations.append(
                            ShellObservation(stratum_id, reef_id, year, stage, float(length))
                        )
                        truth.append(TruthRecord(cohort, age))
                alive = _survive(alive, config, rng)
    return observations, truth


def _survive(alive: dict[int, int], config: ScenarioConfig, rng) -> dict[int, int]:
    """Binomially thin each age class into next year's class one age older."""
    survivors: dict[int, int] = {}
    for age in range(1, config.max_age):
        count = alive.get(age, 0)
        if count:
            survivors[age + 1] = int(rng.binomial(count, config.annual_survival[age - 1]))
    return survivors


def truth_path_for(survey_path) -> Path:
    """Sidecar path: ``survey.csv`` -> ``survey.truth.csv``."""
    return Path(survey_path).with_suffix(".truth.csv")


def write_scenario(observations, truth, survey_path) -> tuple[Path, Path]:
    """Write the survey CSV and its aligned ground-truth sidecar.

    ``row_id`` in the sidecar is the 0-based index of the corresponding data
    row of the survey file (header excluded).  Returns both paths.
    """
    if len(observations) != len(truth):
        raise ValueError("observations and truth records must align one-to-one")
    survey_path = Path(survey_path)
    sidecar = truth_path_for(survey_path)
    with survey_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for obs in observations:
            writer.writerow(
                [obs.stratum_id, obs.reef_id, obs.year, obs.stage, repr(obs.length_mm)]
            )
    with sidecar.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_HEADER)
        for row_id, rec in enumerate(truth):
            writer.writerow([row_id, rec.true_cohort, rec.true_age])
    return survey_path, sidecar


def read_truth_csv(path) -> list[TruthRecord]:
    """Load a ground-truth sidecar, validating row ids are 0..n-1 in order."""
    records: list[TruthRecord] = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != TRUTH_HEADER:
            raise ValueError(f"bad truth header: {header!r}")
        for expected, row in enumerate(reader):
            row_id, cohort, age = row
            if int(row_id) != expected:
                raise ValueError(f"truth rows out of order at row_id {row_id}")
            records.append(TruthRecord(cohort, int(age)))
    return records


def mixture_moments_oracle(components) -> tuple[float, float]:
    """Moments of a finite mixture, from first principles.

    ``components`` holds (mean, sd, weight) triples whose weights must sum to
    1 within 1e-9.  Returns (mean, sd) of the mixture distribution:
    mean = sum(w * m), var = sum(w * (s^2 + m^2)) - mean^2.
    """
    comps = [(float(m), float(s), float(w)) for m, s, w in components]
    if not comps:
        raise ValueError("mixture needs at least one component")
    total = sum(w for _, _, w in comps)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"component weights sum to {total!r}, expected 1")
    mean = sum(w * m for m, _, w in comps)
    second = sum(w * (s * s + m * m) for m, s, w in comps)
    var = second - mean * mean
    return mean, math.sqrt(max(var, 0.0))


def loglik_oracle(lengths, fit) -> float:
    """Gaussian-mixture log-likelihood evaluated independently of the EM code.

    ``fit`` needs ``means``, ``sds`` and ``raw_weights`` attributes.  Uses
    plain ``math`` with a per-point max shift; intended as a slow reference.
    """
    params = list(zip(fit.means, fit.sds, fit.raw_weights))
    log_2pi = math.log(2.0 * math.pi)
    total = 0.0
    for x in lengths:
        terms = []
        for m, s, w in params:
            z = (x - m) / s
            terms.append(math.log(w) - math.log(s) - 0.5 * (log_2pi + z * z))
        shift = max(terms)
        total += shift + math.log(sum(math.exp(t - shift) for t in terms))
    return total
