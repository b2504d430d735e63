"""Survey ingest: CSV parsing, per-sample fit gating, reef eligibility.

The unit of analysis is the *sample*: all shells measured on one reef in one
year, split by life stage (``spat`` = young-of-year, ``live`` = older
animals).  A sample always retains every measured length -- downstream
river-level pooling uses all of them -- while ``SampleCondition`` records
which per-sample fits the protocol's count thresholds permit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

STAGES = ("spat", "live")

HEADER = ("stratum_id", "reef_id", "year", "stage", "length_mm")

#: Sample-size thresholds for the fit/flag decision table.
SPAT_FIT_MIN = 25
SPAT_FLAG_MAX = 50
LIVE_FIT_MIN = 50
LIVE_FLAG_MAX = 250


class SurveyFormatError(ValueError):
    """Malformed survey CSV; message cites row number, field and reason."""


@dataclass(frozen=True)
class ShellObservation:
    """One measured shell."""

    stratum_id: str
    reef_id: str
    year: int
    stage: str
    length_mm: float

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}, got {self.stage!r}")
        if not self.length_mm > 0:
            raise ValueError(f"length_mm must be positive, got {self.length_mm!r}")


@dataclass(frozen=True)
class SampleCondition:
    """Which fits a sample's counts permit, and small-sample flags."""

    fit_lognormal: bool
    flag_spat_small: bool
    fit_gmm: bool
    flag_live_small: bool


@dataclass(frozen=True)
class Sample:
    """All lengths measured on one reef in one year, split by stage."""

    stratum_id: str
    reef_id: str
    year: int
    spat_lengths: tuple[float, ...]
    live_lengths: tuple[float, ...]
    condition: SampleCondition

    @property
    def n_spat(self) -> int:
        return len(self.spat_lengths)

    @property
    def n_live(self) -> int:
        return len(self.live_lengths)

    @property
    def n_total(self) -> int:
        return self.n_spat + self.n_live

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.stratum_id, self.reef_id, self.year)


def classify_sample(n_spat: int, n_live: int) -> SampleCondition:
    """Apply the count-threshold decision table.

    Spat are fit when n_spat >= 25 and flagged small for 25 <= n_spat <= 50;
    live mixtures are fit when n_live >= 50 and flagged small for
    50 <= n_live <= 250.
    """
    if n_spat < 0 or n_live < 0:
        raise ValueError("counts must be non-negative")
    return SampleCondition(
        fit_lognormal=n_spat >= SPAT_FIT_MIN,
        flag_spat_small=SPAT_FIT_MIN <= n_spat <= SPAT_FLAG_MAX,
        fit_gmm=n_live >= LIVE_FIT_MIN,
        flag_live_small=LIVE_FIT_MIN <= n_live <= LIVE_FLAG_MAX,
    )


def parse_survey_csv(path, years: tuple[int, int] = (2003, 2023)) -> list[ShellObservation]:
    """Read a survey CSV into validated observations.

    Expects exactly the header ``stratum_id,reef_id,year,stage,length_mm``.
    ``stage`` is case-insensitive; ``year`` must fall inside the closed
    ``years`` window; ``length_mm`` must be a positive number.  Any violation
    raises SurveyFormatError naming the offending row, field and reason.
    """
    path = Path(path)
    year_min, year_max = years
    if year_min > year_max:
        raise ValueError(f"invalid year window {years!r}")
    observations: list[ShellObservation] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SurveyFormatError("row 1: file is empty, expected a header row") from None
        if tuple(h.strip() for h in header) != HEADER:
            raise SurveyFormatError(
                f"row 1: header mismatch: expected {','.join(HEADER)!r}, got {','.join(header)!r}"
            )
        for row in reader:
            rownum = reader.line_num
            if not row:
                continue
            if len(row) != len(HEADER):
                raise SurveyFormatError(
                    f"row {rownum}: expected {len(HEADER)} fields, got {len(row)}"
                )
            stratum_id, reef_id, year_txt, stage_txt, length_txt = (v.strip() for v in row)
            if not stratum_id:
                raise SurveyFormatError(f"row {rownum}: field 'stratum_id': must be non-empty")
            if not reef_id:
                raise SurveyFormatError(f"row {rownum}: field 'reef_id': must be non-empty")
            try:
                year = int(year_txt)
            except ValueError:
                raise SurveyFormatError(
                    f"row {rownum}: field 'year': not an integer: {year_txt!r}"
                ) from None
            if not year_min <= year <= year_max:
                raise SurveyFormatError(
                    f"row {rownum}: field 'year': {year} outside window "
                    f"[{year_min}, {year_max}]"
                )
            stage = stage_txt.lower()
            if stage not in STAGES:
                raise SurveyFormatError(
                    f"row {rownum}: field 'stage': expected one of {STAGES}, got {stage_txt!r}"
                )
            try:
                length = float(length_txt)
            except ValueError:
                raise SurveyFormatError(
                    f"row {rownum}: field 'length_mm': not a number: {length_txt!r}"
                ) from None
            if not (math.isfinite(length) and length > 0):
                raise SurveyFormatError(
                    f"row {rownum}: field 'length_mm': must be a positive finite "
                    f"number, got {length_txt!r}"
                )
            observations.append(ShellObservation(stratum_id, reef_id, year, stage, length))
    return observations


def build_samples(observations) -> dict[tuple[str, str, int], Sample]:
    """Group observations into per-(stratum, reef, year) samples.

    Lengths keep their input order within each stage; every observation lands
    in exactly one sample.
    """
    spat: dict[tuple[str, str, int], list[float]] = {}
    live: dict[tuple[str, str, int], list[float]] = {}
    for obs in observations:
        key = (obs.stratum_id, obs.reef_id, obs.year)
        bucket = spat if obs.stage == "spat" else live
        bucket.setdefault(key, []).append(obs.length_mm)
    samples: dict[tuple[str, str, int], Sample] = {}
    for key in sorted(set(spat) | set(live)):
        s = tuple(spat.get(key, ()))
        l = tuple(live.get(key, ()))
        samples[key] = Sample(
            stratum_id=key[0],
            reef_id=key[1],
            year=key[2],
            spat_lengths=s,
            live_lengths=l,
            condition=classify_sample(len(s), len(l)),
        )
    return samples


def eligible_reefs(
    samples: dict[tuple[str, str, int], Sample],
    min_per_year: int = 300,
    min_run: int = 8,
) -> set[tuple[str, str]]:
    """Reefs with a long-enough unbroken run of well-sampled years.

    A reef qualifies when at least ``min_run`` *consecutive* calendar years
    each total ``min_per_year`` or more measured shells (both stages
    combined).  Ineligible reefs still contribute lengths to river-level
    pooling; they just get no per-reef fits.
    """
    if min_per_year < 1:
        raise ValueError("min_per_year must be at least 1")
    if min_run < 1:
        raise ValueError("min_run must be at least 1")
    qualifying: dict[tuple[str, str], set[int]] = {}
    for sample in samples.values():
        if sample.n_total >= min_per_year:
            qualifying.setdefault((sample.stratum_id, sample.reef_id), set()).add(sample.year)
    eligible = set()
    for reef, years in qualifying.items():
        run = 1
        best = 1
        ordered = sorted(years)
        for prev, cur in zip(ordered, ordered[1:]):
            run = run + 1 if cur == prev + 1 else 1
            best = max(best, run)
        if best >= min_run:
            eligible.add(reef)
    return eligible
