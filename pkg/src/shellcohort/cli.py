"""Command-line interface.

Three subcommands cover the full workflow::

    shellcohort simulate --output survey.csv [--seed 7 --reefs 5 ...]
    shellcohort run --input survey.csv --output-dir results/
    shellcohort report --output-dir results/

Every option can also come from a ``--config`` file of ``key = value`` lines
(keys are the option names with underscores, ``#`` starts a comment).
Command-line flags win over config-file values, which win over defaults.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .pipeline import PipelineConfig, read_components_csv, records_to_chains, run_pipeline
from .survey import SurveyFormatError
from .synth import ScenarioConfig, simulate, write_scenario


def _parse_years(text: str) -> tuple[int, int]:
    """'2003..2017' -> (2003, 2017)."""
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected A..B year range, got {text!r}")
    try:
        return (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integer years in {text!r}") from None


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def read_config_file(path) -> dict[str, str]:
    """Parse a key = value config file into raw strings."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}, line {lineno}: expected 'key = value', got {raw!r}")
        values[key.strip()] = value.strip()
    return values


#: option name -> (converter, default); used for both flags and config files.
_RUN_OPTIONS = {
    "years": (_parse_years, (2003, 2023)),
    "min_per_year": (int, 300),
    "min_run": (int, 8),
    "g_max": (int, 4),
    "tol": (float, 1e-8),
    "max_iter": (int, 500),
    "n_starts": (int, 10),
    "var_floor": (float, 1e-4),
    "delta_bic": (float, 2.0),
    "age_quantile": (float, 0.8),
    "market_size_mm": (float, 76.0),
    "seed": (int, 0),
    "pool_renormalize": (_parse_bool, True),
    "make_figures": (_parse_bool, True),
}

_SIMULATE_OPTIONS = {
    "years": (_parse_years, (2003, 2017)),
    "n_strata": (int, 1),
    "n_reefs": (int, 5),
    "recruitment_per_year": (int, 400),
    "growth_increments_mm": (_parse_floats, (15.0, 30.0, 26.0, 24.0)),
    "length_sd_mm": (_parse_floats, (5.0, 4.5, 4.5, 4.5)),
    "annual_survival": (_parse_floats, (0.93, 0.93, 0.93, 0.93)),
    "spat_meanlog": (float, 3.28),
    "spat_sdlog": (float, 0.5),
    "seed": (int, 42),
}


def _resolve(options: dict, args: argparse.Namespace, config_path) -> dict:
    """Merge defaults, config-file values and flags (flags win)."""
    file_values = read_config_file(config_path) if config_path else {}
    unknown = set(file_values) - set(options)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for name, (convert, default) in options.items():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            resolved[name] = flag_value
        elif name in file_values:
            try:
                resolved[name] = convert(file_values[name])
            except argparse.ArgumentTypeError as exc:
                raise ValueError(f"config key {name}: {exc}") from None
        else:
            resolved[name] = default
    return resolved


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shellcohort",
        description="Estimate age structure and cohort growth from shell-length surveys.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic survey with ground truth")
    sim.add_argument("--output", required=True, type=Path, help="survey CSV to write")
    sim.add_argument("--config", type=Path, help="key = value option file")
    sim.add_argument("--years", type=_parse_years, help="sampling window, e.g. 2003..2017")
    sim.add_argument("--strata", dest="n_strata", type=int)
    sim.add_argument("--reefs", dest="n_reefs", type=int)
    sim.add_argument("--recruitment", dest="recruitment_per_year", type=int)
    sim.add_argument(
        "--growth-increments", dest="growth_increments_mm", type=_parse_floats,
        help="comma-separated mean growth per age step, mm",
    )
    sim.add_argument(
        "--length-sds", dest="length_sd_mm", type=_parse_floats,
        help="comma-separated per-age length sds, mm",
    )
    sim.add_argument("--survival", dest="annual_survival", type=_parse_floats)
    sim.add_argument("--spat-meanlog", dest="spat_meanlog", type=float)
    sim.add_argument("--spat-sdlog", dest="spat_sdlog", type=float)
    sim.add_argument("--seed", type=int)

    run = sub.add_parser("run", help="run the full analysis on a survey CSV")
    run.add_argument("--input", required=True, type=Path, help="survey CSV to analyse")
    run.add_argument("--output-dir", required=True, type=Path)
    run.add_argument("--config", type=Path, help="key = value option file")
    run.add_argument("--years", type=_parse_years, help="accepted year window, e.g. 2003..2023")
    run.add_argument("--min-per-year", dest="min_per_year", type=int,
                     help="shells per year for a year to count toward eligibility")
    run.add_argument("--min-run", dest="min_run", type=int,
                     help="consecutive qualifying years a reef needs")
    run.add_argument("--g-max", dest="g_max", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--max-iter", dest="max_iter", type=int)
    run.add_argument("--n-starts", dest="n_starts", type=int)
    run.add_argument("--var-floor", dest="var_floor", type=float)
    run.add_argument("--delta-bic", dest="delta_bic", type=float)
    run.add_argument("--age-quantile", dest="age_quantile", type=float,
                     help="upper quantile defining each age cutoff (default 0.8)")
    run.add_argument("--market-size-mm", dest="market_size_mm", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--pool-literal", dest="pool_renormalize", action="store_const",
                     const=False, help="pool duplicate ages with raw (unrenormalised) weights")
    run.add_argument("--no-figures", dest="make_figures", action="store_const", const=False)

    rep = sub.add_parser("report", help="rebuild figures from an existing output directory")
    rep.add_argument("--output-dir", required=True, type=Path)
    rep.add_argument("--market-size-mm", dest="market_size_mm", type=float, default=76.0)
    return parser


def _cmd_simulate(args) -> int:
    values = _resolve(_SIMULATE_OPTIONS, args, args.config)
    config = ScenarioConfig(**values)
    observations, truth = simulate(config)
    survey_path, truth_path = write_scenario(observations, truth, args.output)
    print(f"wrote {survey_path} ({len(observations)} observations)")
    print(f"wrote {truth_path}")
    return 0


def _cmd_run(args) -> int:
    values = _resolve(_RUN_OPTIONS, args, args.config)
    config = PipelineConfig(input_path=args.input, output_dir=args.output_dir, **values)
    manifest = run_pipeline(config)
    counts = manifest.counts
    print(
        f"{counts['observations']} observations, {counts['samples']} samples, "
        f"{counts['eligible_reefs']} eligible reefs"
    )
    print(
        f"{counts['components']} components, {counts['chains']} cohort chains, "
        f"{counts['warnings']} warnings"
    )
    for name in ("components", "cohorts", "rivermodels"):
        print(f"wrote {Path(args.output_dir) / manifest.outputs[name]}")
    print(f"wrote {Path(args.output_dir) / 'manifest.json'}")
    if manifest.outputs["figures"]:
        print(f"wrote {len(manifest.outputs['figures'])} figures")
    return 0


def _cmd_report(args) -> int:
    from . import figures

    out_dir = Path(args.output_dir)
    records = read_components_csv(out_dir / "components.csv")
    if not records:
        print("no components to plot", file=sys.stderr)
        return 1
    chains = records_to_chains(records)
    written = figures.write_reef_figures(
        records, chains, out_dir, market_size_mm=args.market_size_mm
    )
    for name in written:
        print(f"wrote {out_dir / name}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_report(args)
    except (SurveyFormatError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
