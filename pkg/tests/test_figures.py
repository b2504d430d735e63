"""SVG figure generation: structure and counts, not aesthetics."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import pytest

from shellcohort.figures import (
    OLD_COLOR,
    YOUNG_COLOR,
    agedots_svg,
    decades_svg,
    trajectory_svg,
    write_reef_figures,
)
from shellcohort.linking import ChainMember, CohortChain
from shellcohort.pipeline import ComponentRecord


def rec(
    year,
    kind="live",
    age=2,
    mean=45.0,
    sd=5.0,
    cohort="",
    reef="331",
    flag_live=False,
    flag_spat=False,
):
    is_live = kind == "live"
    return ComponentRecord(
        stratum_id="J",
        reef_id=reef,
        year=year,
        kind=kind,
        age=age,
        mean_mm=mean,
        sd_mm=sd,
        weight=0.4,
        raw_weight=0.4 if is_live else None,
        cohort=cohort,
        pooled_from=1,
        flag_live_small=flag_live,
        flag_spat_small=flag_spat,
        variance_family="V" if is_live else None,
        g_selected=2 if is_live else None,
        converged=True if is_live else None,
    )


def by_class(svg_text, klass):
    root = ET.fromstring(svg_text)
    return [el for el in root.iter() if klass in el.get("class", "").split()]


CHAIN = CohortChain(
    cohort="J.331.2010.2",
    stratum_id="J",
    reef_id="331",
    members=(
        ChainMember(2010, 2, 45.0, 5.0, 0.4),
        ChainMember(2011, 3, 60.0, 5.0, 0.4),
        ChainMember(2012, 4, 78.0, 5.0, 0.4),
    ),
)

ROWS = [
    rec(2010, age=2, mean=45.0, cohort="J.331.2010.2"),
    rec(2011, age=3, mean=60.0, cohort="J.331.2010.2"),
    rec(2012, age=4, mean=78.0, cohort="J.331.2010.2"),
    rec(2010, kind="spat", age=1, mean=22.0, sd=6.0, cohort="J.331.2010.1"),
    rec(2011, age=2, mean=44.0, cohort="J.331.2011.2", flag_live=True),
]


class TestTrajectory:
    def test_well_formed_and_marker_per_row(self):
        svg = trajectory_svg(ROWS, [CHAIN])
        assert len(by_class(svg, "component-marker")) == len(ROWS)
        assert len(by_class(svg, "sd-bar")) == len(ROWS)

    def test_market_rule_at_market_size(self):
        (rule,) = by_class(trajectory_svg(ROWS, [CHAIN]), "market-rule")
        assert rule.get("data-mm") == "76.0"
        (rule,) = by_class(trajectory_svg(ROWS, [CHAIN], market_size_mm=63.0), "market-rule")
        assert rule.get("data-mm") == "63.0"

    def test_one_panel_per_year_with_flag_encoding(self):
        panels = by_class(trajectory_svg(ROWS, [CHAIN]), "panel")
        assert len(panels) == 3
        tint = {p.get("data-year"): p.get("class") for p in panels}
        assert "panel-ample" in tint["2010"]
        assert "panel-sparse" in tint["2011"]  # live fit flagged small
        assert "panel-ample" in tint["2012"]

    def test_chain_line_follows_members(self):
        svg = trajectory_svg(ROWS, [CHAIN])
        (line,) = by_class(svg, "chain-line")
        assert line.get("data-cohort") == "J.331.2010.2"
        assert len(line.get("points").split()) == 3

    def test_singleton_chains_draw_no_line(self):
        single = CohortChain("J.331.2011.2", "J", "331", (ChainMember(2011, 2, 44.0, 5.0, 0.4),))
        assert by_class(trajectory_svg(ROWS, [single]), "chain-line") == []

    def test_spat_flag_marks_missing_or_small_spat_years(self):
        svg = trajectory_svg(ROWS, [CHAIN])
        flagged_years = {el.get("data-year") for el in by_class(svg, "spat-flag")}
        assert flagged_years == {"2011", "2012"}  # 2010 has an unflagged spat fit

    def test_spat_flag_when_spat_sample_small(self):
        rows = [
            rec(2010, age=2, mean=45.0),
            rec(2010, kind="spat", age=1, mean=22.0, flag_spat=True),
        ]
        flagged = by_class(trajectory_svg(rows, []), "spat-flag")
        assert [el.get("data-year") for el in flagged] == ["2010"]

    def test_empty_rows_rejected(self):
        with pytest.raises(ValueError):
            trajectory_svg([], [])


class TestAgeDots:
    def test_one_dot_per_aged_row(self):
        rows = ROWS + [rec(2012, age=None, mean=95.0, cohort="J.331.2012.NA.1")]
        dots = by_class(agedots_svg(rows), "age-dot")
        assert len(dots) == len([r for r in rows if r.age is not None])

    def test_colour_split_at_age_four(self):
        dots = by_class(agedots_svg(ROWS), "age-dot")
        for dot in dots:
            expected = YOUNG_COLOR if int(dot.get("data-age")) <= 3 else OLD_COLOR
            assert dot.get("fill") == expected
        assert {d.get("data-age") for d in dots} == {"1", "2", "3", "4"}

    def test_midpoint_rule_year(self):
        (rule,) = by_class(agedots_svg(ROWS), "midpoint-rule")
        assert rule.get("data-year") == "2011"
        rows_even = [rec(2010, age=2), rec(2013, age=2)]
        (rule,) = by_class(agedots_svg(rows_even), "midpoint-rule")
        assert rule.get("data-year") == "2011"  # floor of (2010+2013)/2

    def test_empty_rows_rejected(self):
        with pytest.raises(ValueError):
            agedots_svg([])


class TestDecades:
    def test_one_density_per_aged_row_and_facet_per_age(self):
        svg = decades_svg(ROWS)
        assert len(by_class(svg, "density")) == len(ROWS)
        facets = by_class(svg, "facet")
        assert [f.get("data-age") for f in facets] == ["1", "2", "3", "4"]

    def test_decade_colouring_distinguishes_decades(self):
        rows = [rec(2009, age=2, mean=45.0), rec(2011, age=2, mean=46.0)]
        strokes = {el.get("stroke") for el in by_class(decades_svg(rows), "density")}
        assert len(strokes) == 2

    def test_spat_density_uses_lognormal_shape(self):
        svg = decades_svg([rec(2010, kind="spat", age=1, mean=22.0, sd=6.0)])
        (density,) = by_class(svg, "density")
        assert density.get("d").startswith("M")

    def test_unaged_only_rows_rejected(self):
        with pytest.raises(ValueError):
            decades_svg([rec(2010, age=None)])


class TestWriteReefFigures:
    def test_three_files_per_reef_when_ages_present(self, tmp_path):
        names = write_reef_figures(ROWS, [CHAIN], tmp_path)
        assert names == ["J_331_trajectory.svg", "J_331_agedots.svg", "J_331_decades.svg"]
        for name in names:
            ET.fromstring((tmp_path / name).read_text())

    def test_decades_skipped_without_aged_rows(self, tmp_path):
        rows = [rec(2010, age=None, cohort="J.331.2010.NA.1")]
        names = write_reef_figures(rows, [], tmp_path)
        assert names == ["J_331_trajectory.svg", "J_331_agedots.svg"]

    def test_multiple_reefs_sorted(self, tmp_path):
        rows = [rec(2010, reef="400"), rec(2010, reef="331")]
        names = write_reef_figures(rows, [], tmp_path)
        assert [n.split("_")[1] for n in names] == ["331"] * 3 + ["400"] * 3

    def test_pipeline_figures_parse(self, small_run):
        for name in small_run.manifest.outputs["figures"]:
            ET.fromstring((small_run.out / name).read_text())
