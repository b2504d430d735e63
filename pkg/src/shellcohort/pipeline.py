"""End-to-end survey analysis: ingest, fit, age, link, emit.

``run_pipeline`` drives the whole sequence for one survey file:

1. parse and group observations into per-(stratum, reef, year) samples;
2. find eligible reefs (a long-enough consecutive run of well-sampled years);
3. fit one river model per stratum-year from *all* lengths measured there
   (ineligible reefs included) and derive age cutoffs;
4. fit per-sample distributions on eligible reefs where sample sizes permit:
   a log-normal for spat, a BIC-selected Gaussian mixture for live animals,
   with live weights scaled down by the sample's spat fraction;
5. assign ages from the river cutoffs, pool same-age duplicates, link
   components into cohort chains across years;
6. write components.csv, cohorts.csv, rivermodels.csv, manifest.json and
   (optionally) per-reef SVG figures into the output directory.

Everything is deterministic for a fixed input file and configuration: EM
starts derive their seeds from the master seed and the sample's identity, and
all CSV output is canonically ordered with repr-formatted floats, so repeat
runs are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import emcore
from .aging import AgedComponent, RiverModel, assign_ages, fit_river_model, pool_duplicates
from .linking import (
    CohortChain,
    ComponentTable,
    cohort_summary,
    initial_labels,
    link_cohorts,
    relabel_unassigned,
)
from .mixtures import (
    FitConfig,
    MixtureFit,
    adjust_weights,
    candidate_fits,
    fit_lognormal,
    select_model,
    spat_fraction,
)
from .survey import Sample, build_samples, eligible_reefs, parse_survey_csv

COMPONENTS_HEADER = (
    "stratum_id",
    "reef_id",
    "year",
    "kind",
    "age",
    "mean_mm",
    "sd_mm",
    "weight",
    "raw_weight",
    "cohort",
    "pooled_from",
    "flag_live_small",
    "flag_spat_small",
    "variance_family",
    "g_selected",
    "converged",
)

COHORTS_HEADER = (
    "cohort",
    "stratum_id",
    "reef_id",
    "birth_year",
    "terminal_age",
    "chain_length",
    "first_year",
    "last_year",
)

RIVERMODELS_HEADER = ("stratum_id", "year", "g", "means", "sds", "weights", "cutoffs")


@dataclass(frozen=True)
class PipelineConfig:
    """All knobs for one pipeline run."""

    input_path: Path
    output_dir: Path
    years: tuple[int, int] = (2003, 2023)
    min_per_year: int = 300
    min_run: int = 8
    g_max: int = 4
    tol: float = 1e-8
    max_iter: int = 500
    n_starts: int = 10
    var_floor: float = 1e-4
    delta_bic: float = 2.0
    age_quantile: float = 0.8
    market_size_mm: float = 76.0
    seed: int = 0
    pool_renormalize: bool = True
    make_figures: bool = True

    def fit_config(self, *scope) -> FitConfig:
        """FitConfig whose seed is derived from the master seed and a scope key."""
        return FitConfig(
            g_max=self.g_max,
            tol=self.tol,
            max_iter=self.max_iter,
            n_starts=self.n_starts,
            var_floor=self.var_floor,
            delta_bic=self.delta_bic,
            seed=derive_seed(self.seed, *scope),
        )


def derive_seed(master: int, *parts) -> int:
    """Stable per-scope RNG seed from the master seed and identifying parts."""
    text = "|".join([str(master), *map(str, parts)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass(frozen=True)
class ComponentRecord:
    """One emitted row of components.csv (also the figures' input)."""

    stratum_id: str
    reef_id: str
    year: int
    kind: str
    age: int | None
    mean_mm: float
    sd_mm: float
    weight: float
    raw_weight: float | None
    cohort: str
    pooled_from: int
    flag_live_small: bool
    flag_spat_small: bool
    variance_family: str | None
    g_selected: int | None
    converged: bool | None


@dataclass
class RunManifest:
    """Everything a run decided and produced, JSON-serialisable."""

    config: dict
    backend: str
    counts: dict
    eligible_reefs: list
    samples: list
    river_models: list
    chains: dict
    warnings: list
    outputs: dict
    timing: dict

    def as_dict(self) -> dict:
        return asdict(self)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


def _warning(kind: str, stratum_id=None, reef_id=None, year=None, detail: str = "") -> dict:
    return {
        "kind": kind,
        "stratum_id": stratum_id,
        "reef_id": reef_id,
        "year": year,
        "detail": detail,
    }


def _candidate_rows(fits: list[MixtureFit]) -> list[dict]:
    return [
        {
            "variance_family": f.variance_family,
            "g": f.g,
            "loglik": f.loglik,
            "bic": f.bic,
            "converged": f.converged,
            "degenerate": f.degenerate,
            "iterations": f.iterations,
        }
        for f in fits
    ]


def _fit_sample(
    sample: Sample, cfg: PipelineConfig, warnings: list
) -> tuple[list[AgedComponent], dict]:
    """Fit whatever the sample's counts permit; returns components + metadata."""
    cond = sample.condition
    pi0 = spat_fraction(sample.n_spat, sample.n_live)
    comps: list[AgedComponent] = []
    meta: dict = {
        "stratum_id": sample.stratum_id,
        "reef_id": sample.reef_id,
        "year": sample.year,
        "n_spat": sample.n_spat,
        "n_live": sample.n_live,
        "spat_fraction": pi0,
        "fit_lognormal": cond.fit_lognormal,
        "flag_spat_small": cond.flag_spat_small,
        "fit_gmm": cond.fit_gmm,
        "flag_live_small": cond.flag_live_small,
        "spat": None,
        "live": None,
    }
    spat_ok = False
    if cond.fit_lognormal:
        try:
            ln = fit_lognormal(sample.spat_lengths)
        except ValueError as exc:
            warnings.append(
                _warning(
                    "spat_fit_failed",
                    sample.stratum_id,
                    sample.reef_id,
                    sample.year,
                    str(exc),
                )
            )
        else:
            spat_ok = True
            meta["spat"] = {
                "meanlog": ln.meanlog,
                "sdlog": ln.sdlog,
                "mean_mm": ln.mean_mm,
                "sd_mm": ln.sd_mm,
                "n": ln.n,
            }
            comps.append(
                AgedComponent(
                    stratum_id=sample.stratum_id,
                    reef_id=sample.reef_id,
                    year=sample.year,
                    kind="spat",
                    mean_mm=ln.mean_mm,
                    sd_mm=ln.sd_mm,
                    weight=pi0,
                    raw_weight=None,
                )
            )

    live_fit = None
    if cond.fit_gmm:
        fit_cfg = cfg.fit_config("reef", sample.stratum_id, sample.reef_id, sample.year)
        candidates = candidate_fits(sample.live_lengths, fit_cfg)
        live_fit = select_model(candidates, cfg.delta_bic)
        if not live_fit.converged:
            warnings.append(
                _warning(
                    "em_not_converged",
                    sample.stratum_id,
                    sample.reef_id,
                    sample.year,
                    f"live mixture (family {live_fit.variance_family}, g={live_fit.g}) "
                    f"hit max_iter={cfg.max_iter}",
                )
            )
        adjusted = adjust_weights(live_fit.raw_weights, pi0)
        for mean, sd, raw, w in zip(
            live_fit.means, live_fit.sds, live_fit.raw_weights, adjusted
        ):
            comps.append(
                AgedComponent(
                    stratum_id=sample.stratum_id,
                    reef_id=sample.reef_id,
                    year=sample.year,
                    kind="live",
                    mean_mm=mean,
                    sd_mm=sd,
                    weight=w,
                    raw_weight=raw,
                )
            )
        meta["live"] = {
            "variance_family": live_fit.variance_family,
            "g": live_fit.g,
            "loglik": live_fit.loglik,
            "bic": live_fit.bic,
            "iterations": live_fit.iterations,
            "converged": live_fit.converged,
            "degenerate": live_fit.degenerate,
            "candidates": _candidate_rows(candidates),
        }

    if spat_ok and live_fit is not None:
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-9:
            raise RuntimeError(
                f"sample {sample.key}: component weights sum to {total!r}, expected 1"
            )
    return comps, meta


def run_pipeline(cfg: PipelineConfig) -> RunManifest:
    """Run the full analysis; writes outputs and returns the manifest."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    warnings: list[dict] = []

    observations = parse_survey_csv(cfg.input_path, cfg.years)
    samples = build_samples(observations)
    eligible = eligible_reefs(samples, cfg.min_per_year, cfg.min_run)
    if not eligible:
        warnings.append(
            _warning(
                "no_eligible_reefs",
                detail=(
                    f"no reef has {cfg.min_run} consecutive years with at least "
                    f"{cfg.min_per_year} shells"
                ),
            )
        )

    # River models: one per stratum-year that any eligible reef sampled,
    # pooling every length measured in that stratum-year (all reefs).
    eligible_sample_keys = sorted(
        key for key, s in samples.items() if (s.stratum_id, s.reef_id) in eligible
    )
    river_targets = sorted({(s, y) for s, _, y in eligible_sample_keys})
    river_models: dict[tuple[str, int], RiverModel | None] = {}
    river_meta: list[dict] = []
    for stratum_id, year in river_targets:
        pooled: list[float] = []
        for key in sorted(k for k in samples if k[0] == stratum_id and k[2] == year):
            pooled.extend(samples[key].spat_lengths)
            pooled.extend(samples[key].live_lengths)
        model = fit_river_model(
            stratum_id,
            year,
            pooled,
            cfg.fit_config("river", stratum_id, year),
            quantile=cfg.age_quantile,
        )
        river_models[(stratum_id, year)] = model
        if model is None:
            warnings.append(
                _warning(
                    "river_underpowered",
                    stratum_id,
                    None,
                    year,
                    f"only {len(pooled)} pooled lengths; need 50",
                )
            )
            river_meta.append(
                {"stratum_id": stratum_id, "year": year, "n_pooled": len(pooled), "fit": None}
            )
            continue
        if not model.fit.converged:
            warnings.append(
                _warning(
                    "em_not_converged",
                    stratum_id,
                    None,
                    year,
                    f"river mixture (family {model.fit.variance_family}, g={model.g}) "
                    f"hit max_iter={cfg.max_iter}",
                )
            )
        river_meta.append(
            {
                "stratum_id": stratum_id,
                "year": year,
                "n_pooled": len(pooled),
                "fit": {
                    "variance_family": model.fit.variance_family,
                    "g": model.g,
                    "loglik": model.fit.loglik,
                    "bic": model.fit.bic,
                    "converged": model.fit.converged,
                    "degenerate": model.fit.degenerate,
                },
                "cutoffs": list(model.cutoffs),
                "monotone_cutoffs": model.monotone,
            }
        )

    # Per-sample fits on eligible reefs, aged against their river model.
    rows: list[AgedComponent] = []
    sample_meta: dict[tuple[str, str, int], dict] = {}
    for key in eligible_sample_keys:
        sample = samples[key]
        comps, meta = _fit_sample(sample, cfg, warnings)
        model = river_models.get((sample.stratum_id, sample.year))
        has_live = any(c.kind == "live" for c in comps)
        if has_live and model is not None and not model.monotone:
            warnings.append(
                _warning(
                    "cutoffs_non_monotone",
                    sample.stratum_id,
                    sample.reef_id,
                    sample.year,
                    "river cutoffs are not strictly increasing; ages use the "
                    "first matching interval",
                )
            )
        assign_ages(comps, model)
        comps = pool_duplicates(comps, cfg.pool_renormalize)
        sample_meta[key] = meta
        rows.extend(comps)

    table = ComponentTable(rows)
    initial_labels(table)
    link_cohorts(table)
    relabel_unassigned(table)
    chains = cohort_summary(table)
    late_origin = [c.cohort for c in chains if c.members[0].age >= 2]

    records = _build_records(table.rows, sample_meta)
    records.sort(key=_record_sort_key)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    components_path = out / "components.csv"
    cohorts_path = out / "cohorts.csv"
    rivermodels_path = out / "rivermodels.csv"
    write_components_csv(records, components_path)
    write_cohorts_csv(chains, cohorts_path)
    write_rivermodels_csv(river_models, rivermodels_path)

    figure_paths: list[str] = []
    if cfg.make_figures:
        from . import figures

        figure_paths = figures.write_reef_figures(
            records, chains, out, market_size_mm=cfg.market_size_mm
        )

    config_dict = {k: (str(v) if isinstance(v, Path) else v) for k, v in asdict(cfg).items()}
    config_dict["years"] = list(cfg.years)
    manifest = RunManifest(
        config=config_dict,
        backend=emcore.backend_name(),
        counts={
            "observations": len(observations),
            "samples": len(samples),
            "eligible_reefs": len(eligible),
            "fitted_samples": len(eligible_sample_keys),
            "components": len(records),
            "chains": len(chains),
            "chains_origin_after_age1": len(late_origin),
            "warnings": len(warnings),
        },
        eligible_reefs=sorted([list(r) for r in eligible]),
        samples=[sample_meta[k] for k in eligible_sample_keys],
        river_models=river_meta,
        chains={
            "n": len(chains),
            "origin_after_age1": late_origin,
        },
        warnings=warnings,
        outputs={
            "components": components_path.name,
            "cohorts": cohorts_path.name,
            "rivermodels": rivermodels_path.name,
            "figures": figure_paths,
        },
        timing={
            "started_utc": started.isoformat(),
            "elapsed_seconds": round(time.perf_counter() - t0, 3),
        },
    )
    manifest.write(out / "manifest.json")
    return manifest


def _build_records(
    rows: list[AgedComponent], sample_meta: dict[tuple[str, str, int], dict]
) -> list[ComponentRecord]:
    records = []
    for row in rows:
        meta = sample_meta[row.key]
        live = meta["live"]
        if row.kind == "live" and live is not None:
            family, g_sel, conv = live["variance_family"], live["g"], live["converged"]
        else:
            family = g_sel = conv = None
        records.append(
            ComponentRecord(
                stratum_id=row.stratum_id,
                reef_id=row.reef_id,
                year=row.year,
                kind=row.kind,
                age=row.age,
                mean_mm=row.mean_mm,
                sd_mm=row.sd_mm,
                weight=row.weight,
                raw_weight=row.raw_weight,
                cohort=row.cohort or "",
                pooled_from=row.pooled_from,
                flag_live_small=meta["flag_live_small"],
                flag_spat_small=meta["flag_spat_small"],
                variance_family=family,
                g_selected=g_sel,
                converged=conv,
            )
        )
    return records


def _record_sort_key(rec: ComponentRecord):
    return (
        rec.stratum_id,
        rec.reef_id,
        rec.year,
        rec.age if rec.age is not None else 10**9,
        rec.mean_mm,
    )


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_opt_float(v) -> str:
    return "" if v is None else _fmt_float(v)


def _fmt_bool(v) -> str:
    return "true" if v else "false"


def write_components_csv(records: list[ComponentRecord], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPONENTS_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.stratum_id,
                    r.reef_id,
                    r.year,
                    r.kind,
                    "" if r.age is None else r.age,
                    _fmt_float(r.mean_mm),
                    _fmt_float(r.sd_mm),
                    _fmt_float(r.weight),
                    _fmt_opt_float(r.raw_weight),
                    r.cohort,
                    r.pooled_from,
                    _fmt_bool(r.flag_live_small),
                    _fmt_bool(r.flag_spat_small),
                    r.variance_family or "",
                    "" if r.g_selected is None else r.g_selected,
                    "" if r.converged is None else _fmt_bool(r.converged),
                ]
            )


def read_components_csv(path) -> list[ComponentRecord]:
    """Parse components.csv back into records (exact round-trip of floats)."""
    records = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != COMPONENTS_HEADER:
            raise ValueError(f"unexpected components.csv header: {header!r}")
        for row in reader:
            (
                stratum_id,
                reef_id,
                year,
                kind,
                age,
                mean_mm,
                sd_mm,
                weight,
                raw_weight,
                cohort,
                pooled_from,
                flag_live,
                flag_spat,
                family,
                g_sel,
                conv,
            ) = row
            records.append(
                ComponentRecord(
                    stratum_id=stratum_id,
                    reef_id=reef_id,
                    year=int(year),
                    kind=kind,
                    age=int(age) if age else None,
                    mean_mm=float(mean_mm),
                    sd_mm=float(sd_mm),
                    weight=float(weight),
                    raw_weight=float(raw_weight) if raw_weight else None,
                    cohort=cohort,
                    pooled_from=int(pooled_from),
                    flag_live_small=flag_live == "true",
                    flag_spat_small=flag_spat == "true",
                    variance_family=family or None,
                    g_selected=int(g_sel) if g_sel else None,
                    converged=(conv == "true") if conv else None,
                )
            )
    return records


def write_cohorts_csv(chains: list[CohortChain], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COHORTS_HEADER)
        for c in chains:
            writer.writerow(
                [
                    c.cohort,
                    c.stratum_id,
                    c.reef_id,
                    c.birth_year,
                    c.terminal_age,
                    c.chain_length,
                    c.first_year,
                    c.last_year,
                ]
            )


def write_rivermodels_csv(models: dict[tuple[str, int], RiverModel | None], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RIVERMODELS_HEADER)
        for stratum_id, year in sorted(models):
            model = models[(stratum_id, year)]
            if model is None:
                continue
            writer.writerow(
                [
                    stratum_id,
                    year,
                    model.g,
                    ";".join(_fmt_float(v) for v in model.fit.means),
                    ";".join(_fmt_float(v) for v in model.fit.sds),
                    ";".join(_fmt_float(v) for v in model.fit.raw_weights),
                    ";".join(_fmt_float(v) for v in model.cutoffs),
                ]
            )


def records_to_chains(records: list[ComponentRecord]) -> list[CohortChain]:
    """Rebuild cohort chains from emitted component rows (for reporting)."""
    rows = [
        AgedComponent(
            stratum_id=r.stratum_id,
            reef_id=r.reef_id,
            year=r.year,
            kind=r.kind,
            mean_mm=r.mean_mm,
            sd_mm=r.sd_mm,
            weight=r.weight,
            raw_weight=r.raw_weight,
            age=r.age,
            cohort=r.cohort or None,
            pooled_from=r.pooled_from,
        )
        for r in records
    ]
    return cohort_summary(ComponentTable(rows))
