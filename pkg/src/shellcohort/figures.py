"""Hand-rolled SVG figures summarising one reef's fitted components.

Three views per reef, all built from emitted component rows (no refitting):

* ``trajectory_svg`` -- component mean lengths (±1 sd) over years, cohort
  chains drawn as connecting lines, a dashed rule at market size, and a
  per-year panel tint showing whether the live mixture rests on a large
  (green) or small/absent (pink) sample; years with small or missing spat
  samples get an asterisk.
* ``agedots_svg`` -- assigned ages over years, young ages (<= 3) green and
  older ones orange, with a red vertical rule at the series midpoint year.
* ``decades_svg`` -- per-age facets overlaying each component's implied
  length density (log-normal for spat rows, Gaussian otherwise), coloured by
  the calendar decade of the estimate.

Returned strings are complete standalone SVG documents.  Tests rely on the
class names used here: ``component-marker``, ``chain-line``, ``market-rule``,
``spat-flag``, ``panel``, ``age-dot``, ``midpoint-rule``, ``density``.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

GREEN_PANEL = "#e7f3e4"
PINK_PANEL = "#fbe4ea"
YOUNG_COLOR = "#2ca25f"
OLD_COLOR = "#d95f02"
MARKET_COLOR = "#e08214"
MIDPOINT_COLOR = "#d7191c"
DECADE_PALETTE = ("#1b9e77", "#8c5e2a", "#7570b3", "#e7298a", "#66a61e")

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 56.0, 16.0, 34.0, 40.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Svg:
    """Tiny element accumulator; renders a standalone SVG document."""

    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def add(self, tag: str, text: str | None = None, **attrs) -> None:
        rendered = " ".join(
            f"{k.rstrip('_').replace('_', '-')}={quoteattr(str(v))}" for k, v in attrs.items()
        )
        if text is None:
            self.parts.append(f"<{tag} {rendered}/>")
        else:
            self.parts.append(f"<{tag} {rendered}>{escape(text)}</{tag}>")

    def render(self) -> str:
        body = "\n".join(f"  {p}" for p in self.parts)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self._fmt(self.width)}" '
            f'height="{self._fmt(self.height)}" '
            f'viewBox="0 0 {self._fmt(self.width)} {self._fmt(self.height)}">\n'
            f"{body}\n</svg>\n"
        )

    @staticmethod
    def _fmt(v: float) -> str:
        return _fmt(v)


def _linear_scale(lo: float, hi: float, out_lo: float, out_hi: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: out_lo + (v - lo) / span * (out_hi - out_lo)


def _title_and_axes(svg: _Svg, title: str, plot_w: float, plot_h: float) -> None:
    svg.add(
        "text",
        title,
        x=_fmt(_MARGIN_L),
        y=_fmt(_MARGIN_T - 14),
        class_="title",
        font_size="13",
        font_family="sans-serif",
    )
    svg.add(
        "rect",
        x=_fmt(_MARGIN_L),
        y=_fmt(_MARGIN_T),
        width=_fmt(plot_w),
        height=_fmt(plot_h),
        fill="none",
        stroke="#444444",
        stroke_width="1",
        class_="frame",
    )


def _year_ticks(svg: _Svg, years: list[int], xs, y: float) -> None:
    for yr in years:
        svg.add(
            "text",
            str(yr),
            x=_fmt(xs(yr)),
            y=_fmt(y),
            class_="x-tick",
            font_size="9",
            font_family="sans-serif",
            text_anchor="middle",
        )


def trajectory_svg(records, chains, market_size_mm: float = 76.0, title: str = "") -> str:
    """Mean-length trajectories for one reef's component rows.

    ``records`` are ComponentRecord-like rows of a single reef; ``chains``
    are that reef's CohortChain objects (others are ignored via label
    matching against the rows present).
    """
    records = list(records)
    if not records:
        raise ValueError("trajectory figure needs at least one component row")
    years = sorted({r.year for r in records})
    y_top = max(max(r.mean_mm + r.sd_mm for r in records), market_size_mm) * 1.08
    width, height = max(560.0, 46.0 * len(years) + _MARGIN_L + _MARGIN_R), 380.0
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B
    xs = _linear_scale(years[0] - 0.5, years[-1] + 0.5, _MARGIN_L, _MARGIN_L + plot_w)
    ys = _linear_scale(0.0, y_top, _MARGIN_T + plot_h, _MARGIN_T)

    svg = _Svg(width, height)
    by_year: dict[int, list] = {}
    for r in records:
        by_year.setdefault(r.year, []).append(r)

    # Panel tint per sampled year: green needs a live fit on an ample sample.
    for yr in years:
        rows = by_year[yr]
        has_live = any(r.kind == "live" for r in rows)
        ample = has_live and not any(r.flag_live_small for r in rows)
        svg.add(
            "rect",
            x=_fmt(xs(yr - 0.5)),
            y=_fmt(_MARGIN_T),
            width=_fmt(xs(yr + 0.5) - xs(yr - 0.5)),
            height=_fmt(plot_h),
            fill=GREEN_PANEL if ample else PINK_PANEL,
            class_="panel panel-ample" if ample else "panel panel-sparse",
            data_year=str(yr),
        )

    _title_and_axes(svg, title, plot_w, plot_h)
    _year_ticks(svg, years, xs, _MARGIN_T + plot_h + 14)
    for mm in range(0, int(y_top) + 1, 20):
        svg.add(
            "text",
            str(mm),
            x=_fmt(_MARGIN_L - 6),
            y=_fmt(ys(mm) + 3),
            class_="y-tick",
            font_size="9",
            font_family="sans-serif",
            text_anchor="end",
        )

    svg.add(
        "line",
        x1=_fmt(_MARGIN_L),
        x2=_fmt(_MARGIN_L + plot_w),
        y1=_fmt(ys(market_size_mm)),
        y2=_fmt(ys(market_size_mm)),
        stroke=MARKET_COLOR,
        stroke_width="1.5",
        stroke_dasharray="6 4",
        class_="market-rule",
        data_mm=str(market_size_mm),
    )

    label_set = {r.cohort for r in records if r.cohort}
    for chain in chains:
        if chain.chain_length < 2 or chain.cohort not in label_set:
            continue
        points = " ".join(
            f"{_fmt(xs(m.year))},{_fmt(ys(m.mean_mm))}" for m in chain.members
        )
        svg.add(
            "polyline",
            points=points,
            fill="none",
            stroke="#555555",
            stroke_width="1.2",
            class_="chain-line",
            data_cohort=chain.cohort,
        )

    for r in sorted(records, key=lambda r: (r.year, r.mean_mm)):
        x = xs(r.year)
        svg.add(
            "line",
            x1=_fmt(x),
            x2=_fmt(x),
            y1=_fmt(ys(max(r.mean_mm - r.sd_mm, 0.0))),
            y2=_fmt(ys(r.mean_mm + r.sd_mm)),
            stroke="#333333",
            stroke_width="1",
            class_="sd-bar",
        )
        svg.add(
            "circle",
            cx=_fmt(x),
            cy=_fmt(ys(r.mean_mm)),
            r="3.2",
            fill="#1f5fa8" if r.kind == "live" else "#7b3294",
            class_="component-marker",
            data_kind=r.kind,
            data_age="NA" if r.age is None else str(r.age),
        )
        svg.add(
            "text",
            "NA" if r.age is None else str(r.age),
            x=_fmt(x + 5),
            y=_fmt(ys(r.mean_mm) - 4),
            class_="age-label",
            font_size="8",
            font_family="sans-serif",
        )

    # Asterisk for years whose spat sample was small or unusable.
    for yr in years:
        rows = by_year[yr]
        has_spat = any(r.kind == "spat" for r in rows)
        flagged = any(r.flag_spat_small for r in rows)
        if flagged or not has_spat:
            svg.add(
                "text",
                "*",
                x=_fmt(xs(yr)),
                y=_fmt(_MARGIN_T + 12),
                class_="spat-flag",
                font_size="13",
                font_family="sans-serif",
                text_anchor="middle",
                data_year=str(yr),
            )
    return svg.render()


def agedots_svg(records, title: str = "") -> str:
    """Assigned ages over years for one reef; unaged rows are omitted."""
    records = list(records)
    if not records:
        raise ValueError("age-dot figure needs at least one component row")
    aged = [r for r in records if r.age is not None]
    years = sorted({r.year for r in records})
    midpoint = (years[0] + years[-1]) // 2
    age_top = max([r.age for r in aged], default=1) + 1
    width, height = max(520.0, 40.0 * len(years) + _MARGIN_L + _MARGIN_R), 300.0
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B
    xs = _linear_scale(years[0] - 0.5, years[-1] + 0.5, _MARGIN_L, _MARGIN_L + plot_w)
    ys = _linear_scale(0.0, float(age_top), _MARGIN_T + plot_h, _MARGIN_T)

    svg = _Svg(width, height)
    _title_and_axes(svg, title, plot_w, plot_h)
    _year_ticks(svg, years, xs, _MARGIN_T + plot_h + 14)
    for a in range(1, age_top + 1):
        svg.add(
            "text",
            str(a),
            x=_fmt(_MARGIN_L - 6),
            y=_fmt(ys(a) + 3),
            class_="y-tick",
            font_size="9",
            font_family="sans-serif",
            text_anchor="end",
        )
    svg.add(
        "line",
        x1=_fmt(xs(midpoint)),
        x2=_fmt(xs(midpoint)),
        y1=_fmt(_MARGIN_T),
        y2=_fmt(_MARGIN_T + plot_h),
        stroke=MIDPOINT_COLOR,
        stroke_width="1.5",
        class_="midpoint-rule",
        data_year=str(midpoint),
    )
    for r in sorted(aged, key=lambda r: (r.year, r.age)):
        svg.add(
            "circle",
            cx=_fmt(xs(r.year)),
            cy=_fmt(ys(r.age)),
            r="4.0",
            fill=YOUNG_COLOR if r.age <= 3 else OLD_COLOR,
            class_="age-dot",
            data_year=str(r.year),
            data_age=str(r.age),
        )
    return svg.render()


def _lognormal_params(mean: float, sd: float) -> tuple[float, float]:
    """Invert moments to log-normal (meanlog, sdlog)."""
    ratio2 = (sd / mean) ** 2
    sdlog = math.sqrt(math.log1p(ratio2))
    meanlog = math.log(mean) - 0.5 * sdlog * sdlog
    return meanlog, sdlog


def _density_points(r, x_lo: float, x_hi: float, n: int = 100) -> list[tuple[float, float]]:
    """Unit-peak density samples for one component row."""
    xs = [x_lo + (x_hi - x_lo) * i / (n - 1) for i in range(n)]
    if r.kind == "spat":
        meanlog, sdlog = _lognormal_params(r.mean_mm, r.sd_mm)
        dens = [
            math.exp(-0.5 * ((math.log(x) - meanlog) / sdlog) ** 2) / x if x > 0 else 0.0
            for x in xs
        ]
    else:
        dens = [math.exp(-0.5 * ((x - r.mean_mm) / r.sd_mm) ** 2) for x in xs]
    peak = max(dens) or 1.0
    return [(x, d / peak) for x, d in zip(xs, dens)]


def decades_svg(records, title: str = "") -> str:
    """Per-age density overlays coloured by the estimate's calendar decade."""
    records = list(records)
    aged = [r for r in records if r.age is not None]
    if not aged:
        raise ValueError("decade figure needs at least one aged component row")
    ages = sorted({r.age for r in aged})
    decades = sorted({(r.year // 10) * 10 for r in aged})
    palette = {d: DECADE_PALETTE[i % len(DECADE_PALETTE)] for i, d in enumerate(decades)}
    facet_h, facet_gap = 92.0, 14.0
    width = 580.0
    height = _MARGIN_T + len(ages) * (facet_h + facet_gap) + _MARGIN_B
    plot_w = width - _MARGIN_L - _MARGIN_R
    x_lo = max(min(r.mean_mm - 4 * r.sd_mm for r in aged), 0.0)
    x_hi = max(r.mean_mm + 4 * r.sd_mm for r in aged)
    xs = _linear_scale(x_lo, x_hi, _MARGIN_L, _MARGIN_L + plot_w)

    svg = _Svg(width, height)
    svg.add(
        "text",
        title,
        x=_fmt(_MARGIN_L),
        y=_fmt(_MARGIN_T - 14),
        class_="title",
        font_size="13",
        font_family="sans-serif",
    )
    for i, d in enumerate(decades):
        svg.add(
            "text",
            f"{d}s",
            x=_fmt(_MARGIN_L + plot_w - 64 * (len(decades) - i)),
            y=_fmt(_MARGIN_T - 14),
            fill=palette[d],
            class_="legend",
            font_size="11",
            font_family="sans-serif",
        )
    for fi, age in enumerate(ages):
        top = _MARGIN_T + fi * (facet_h + facet_gap)
        ys = _linear_scale(0.0, 1.05, top + facet_h, top)
        svg.add(
            "rect",
            x=_fmt(_MARGIN_L),
            y=_fmt(top),
            width=_fmt(plot_w),
            height=_fmt(facet_h),
            fill="none",
            stroke="#777777",
            stroke_width="0.8",
            class_="facet",
            data_age=str(age),
        )
        svg.add(
            "text",
            f"age {age}",
            x=_fmt(_MARGIN_L + 6),
            y=_fmt(top + 13),
            class_="facet-label",
            font_size="10",
            font_family="sans-serif",
        )
        for r in sorted((r for r in aged if r.age == age), key=lambda r: (r.year, r.mean_mm)):
            pts = _density_points(r, max(x_lo, 0.01), x_hi)
            path = "M" + " L".join(f"{_fmt(xs(x))} {_fmt(ys(d))}" for x, d in pts)
            svg.add(
                "path",
                d=path,
                fill="none",
                stroke=palette[(r.year // 10) * 10],
                stroke_width="1.1",
                class_="density",
                data_year=str(r.year),
                data_age=str(age),
            )
    y_axis = _MARGIN_T + len(ages) * (facet_h + facet_gap) + 4
    for mm in range(int(x_lo), int(x_hi) + 1, 20):
        svg.add(
            "text",
            str(mm),
            x=_fmt(xs(mm)),
            y=_fmt(y_axis),
            class_="x-tick",
            font_size="9",
            font_family="sans-serif",
            text_anchor="middle",
        )
    return svg.render()


def _safe_name(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in text)


def write_reef_figures(records, chains, out_dir, market_size_mm: float = 76.0) -> list[str]:
    """Write the three per-reef figures for every reef present in ``records``.

    Returns the written file names (relative to ``out_dir``) in order.
    """
    out_dir = Path(out_dir)
    by_reef: dict[tuple[str, str], list] = {}
    for r in records:
        by_reef.setdefault((r.stratum_id, r.reef_id), []).append(r)
    written: list[str] = []
    for (stratum_id, reef_id) in sorted(by_reef):
        rows = by_reef[(stratum_id, reef_id)]
        reef_chains = [
            c for c in chains if (c.stratum_id, c.reef_id) == (stratum_id, reef_id)
        ]
        tag = f"{_safe_name(stratum_id)}_{_safe_name(reef_id)}"
        label = f"{stratum_id} reef {reef_id}"
        outputs = [
            (f"{tag}_trajectory.svg", trajectory_svg(rows, reef_chains, market_size_mm, label)),
            (f"{tag}_agedots.svg", agedots_svg(rows, label)),
        ]
        if any(r.age is not None for r in rows):
            outputs.append((f"{tag}_decades.svg", decades_svg(rows, label)))
        for name, content in outputs:
            (out_dir / name).write_text(content)
            written.append(name)
    return written
