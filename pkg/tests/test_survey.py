"""Survey parsing, sample grouping, gating, and reef eligibility."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shellcohort.survey import (
    HEADER,
    Sample,
    SampleCondition,
    ShellObservation,
    SurveyFormatError,
    build_samples,
    classify_sample,
    eligible_reefs,
    parse_survey_csv,
)


def write_csv(tmp_path, rows, header=",".join(HEADER)):
    path = tmp_path / "survey.csv"
    path.write_text("\n".join([header, *rows]) + "\n")
    return path


class TestParse:
    def test_direct_field_mapping(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,spat,18.5"])
        (obs,) = parse_survey_csv(path)
        assert obs == ShellObservation("JAMES", "331", 2010, "spat", 18.5)

    def test_stage_is_case_insensitive(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,SPAT,18.5", "JAMES,331,2010,Live,44.0"])
        stages = [o.stage for o in parse_survey_csv(path)]
        assert stages == ["spat", "live"]

    def test_header_only_gives_empty_list(self, tmp_path):
        path = write_csv(tmp_path, [])
        assert parse_survey_csv(path) == []

    def test_non_positive_length_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,live,-3"])
        with pytest.raises(SurveyFormatError, match=r"row 2: field 'length_mm'.*positive"):
            parse_survey_csv(path)

    def test_non_numeric_length_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,live,abc"])
        with pytest.raises(SurveyFormatError, match=r"row 2: field 'length_mm'"):
            parse_survey_csv(path)

    def test_unknown_stage_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,dead,44.0"])
        with pytest.raises(SurveyFormatError, match=r"row 2: field 'stage'"):
            parse_survey_csv(path)

    def test_year_outside_window_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,1999,live,44.0"])
        with pytest.raises(SurveyFormatError, match=r"row 2: field 'year'.*outside window"):
            parse_survey_csv(path)

    def test_error_cites_correct_row_number(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,live,44.0", "JAMES,331,20xx,live,44.0"])
        with pytest.raises(SurveyFormatError, match=r"row 3: field 'year'"):
            parse_survey_csv(path)

    def test_wrong_field_count_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,live"])
        with pytest.raises(SurveyFormatError, match=r"row 2: expected 5 fields, got 4"):
            parse_survey_csv(path)

    def test_header_mismatch_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["JAMES,331,2010,live,44.0"], header="a,b,c,d,e")
        with pytest.raises(SurveyFormatError, match="header mismatch"):
            parse_survey_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SurveyFormatError, match="empty"):
            parse_survey_csv(path)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            parse_survey_csv(tmp_path / "nope.csv")

    def test_row_order_preserved(self, tmp_path):
        rows = [f"J,1,2010,live,{40 + i}.0" for i in range(10)]
        path = write_csv(tmp_path, rows)
        lengths = [o.length_mm for o in parse_survey_csv(path)]
        assert lengths == [40.0 + i for i in range(10)]


class TestBuildSamples:
    def test_three_observations_one_key(self):
        obs = [ShellObservation("J", "331", 2010, "live", 40.0 + i) for i in range(3)]
        samples = build_samples(obs)
        assert set(samples) == {("J", "331", 2010)}
        assert samples[("J", "331", 2010)].live_lengths == (40.0, 41.0, 42.0)

    def test_two_reefs_two_samples(self):
        obs = [
            ShellObservation("J", "331", 2010, "live", 40.0),
            ShellObservation("J", "332", 2010, "live", 41.0),
        ]
        assert len(build_samples(obs)) == 2

    def test_empty_input_gives_empty_map(self):
        assert build_samples([]) == {}

    def test_stage_split_and_condition(self):
        obs = [ShellObservation("J", "1", 2010, "spat", 20.0)] * 30 + [
            ShellObservation("J", "1", 2010, "live", 60.0)
        ] * 100
        sample = build_samples(obs)[("J", "1", 2010)]
        assert (sample.n_spat, sample.n_live, sample.n_total) == (30, 100, 130)
        assert sample.condition == classify_sample(30, 100)

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["A", "B"]),
                st.sampled_from(["1", "2", "3"]),
                st.integers(2003, 2006),
                st.sampled_from(["spat", "live"]),
                st.floats(1.0, 200.0),
            ),
            max_size=60,
        )
    )
    def test_partition_property(self, raw):
        obs = [ShellObservation(*row) for row in raw]
        samples = build_samples(obs)
        assert sum(s.n_total for s in samples.values()) == len(obs)
        for key, sample in samples.items():
            assert sample.key == key


class TestClassifySample:
    def test_large_sample_fits_without_flags(self):
        assert classify_sample(60, 300) == SampleCondition(True, False, True, False)

    def test_mid_sample_fits_with_flags(self):
        assert classify_sample(30, 100) == SampleCondition(True, True, True, True)

    def test_small_sample_fits_nothing(self):
        assert classify_sample(10, 40) == SampleCondition(False, False, False, False)

    @pytest.mark.parametrize(
        "n_spat,fit,flag",
        [(24, False, False), (25, True, True), (50, True, True), (51, True, False)],
    )
    def test_spat_boundaries(self, n_spat, fit, flag):
        cond = classify_sample(n_spat, 0)
        assert (cond.fit_lognormal, cond.flag_spat_small) == (fit, flag)

    @pytest.mark.parametrize(
        "n_live,fit,flag",
        [(49, False, False), (50, True, True), (250, True, True), (251, True, False)],
    )
    def test_live_boundaries(self, n_live, fit, flag):
        cond = classify_sample(0, n_live)
        assert (cond.fit_gmm, cond.flag_live_small) == (fit, flag)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            classify_sample(-1, 10)

    @given(st.integers(0, 400), st.integers(0, 400))
    def test_flags_imply_fits(self, n_spat, n_live):
        cond = classify_sample(n_spat, n_live)
        assert not cond.flag_spat_small or cond.fit_lognormal
        assert not cond.flag_live_small or cond.fit_gmm


def make_samples(counts):
    """Samples with the requested total counts (lengths are placeholders)."""
    samples = {}
    for (stratum, reef, year), n in counts.items():
        samples[(stratum, reef, year)] = Sample(
            stratum_id=stratum,
            reef_id=reef,
            year=year,
            spat_lengths=(),
            live_lengths=(50.0,) * n,
            condition=classify_sample(0, n),
        )
    return samples


class TestEligibleReefs:
    def test_eight_consecutive_well_sampled_years_qualify(self):
        samples = make_samples({("J", "331", y): 300 for y in range(2003, 2011)})
        assert eligible_reefs(samples) == {("J", "331")}

    def test_seven_year_run_is_too_short(self):
        counts = {("J", "331", y): 300 for y in range(2003, 2010)}
        counts[("J", "331", 2011)] = 300  # eighth year, but after a gap
        assert eligible_reefs(make_samples(counts)) == set()

    def test_one_thin_year_breaks_the_run(self):
        counts = {("J", "331", y): 300 for y in range(2003, 2011)}
        counts[("J", "331", 2007)] = 299
        assert eligible_reefs(make_samples(counts)) == set()

    def test_run_anywhere_in_series_counts(self):
        counts = {("J", "331", y): 10 for y in range(2003, 2006)}
        counts.update({("J", "331", y): 300 for y in range(2006, 2014)})
        assert eligible_reefs(make_samples(counts)) == {("J", "331")}

    def test_custom_thresholds(self):
        samples = make_samples({("J", "331", y): 100 for y in (2010, 2011, 2012)})
        assert eligible_reefs(samples, min_per_year=100, min_run=3) == {("J", "331")}
        assert eligible_reefs(samples, min_per_year=101, min_run=3) == set()
        assert eligible_reefs(samples, min_per_year=100, min_run=4) == set()

    def test_reefs_judged_independently(self):
        counts = {("J", "331", y): 300 for y in range(2003, 2011)}
        counts.update({("J", "400", y): 300 for y in range(2003, 2007)})
        assert eligible_reefs(make_samples(counts)) == {("J", "331")}

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            eligible_reefs({}, min_per_year=0)
        with pytest.raises(ValueError):
            eligible_reefs({}, min_run=0)

    @given(st.permutations(list(range(2003, 2012))))
    def test_year_order_does_not_matter(self, years):
        counts = {("J", "1", y): 300 for y in years if y != 2007}
        result = eligible_reefs(make_samples(counts))
        assert result == set()  # 2007 missing: longest run is 4
