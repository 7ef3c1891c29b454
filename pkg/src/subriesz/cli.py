"""Command-line entry point: ``subriesz <experiment> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ExperimentConfig, RuleConfig, SuiteConfig, default_config, load_config
from .group import parse_group
from .report import reports_to_csv, reports_to_json
from .suite import emit, exit_code, export_profiles, run_suite, suite_header, summary_lines, write_plots

SUBCOMMANDS = ("constants", "lemma31", "main-ineq", "pipeline", "baseline", "coarea", "isoperimetric", "weak11", "suite")

# region, mollification width and an adapted grid for the set-based experiments
_EUCLID_REGION = ("euclidean-ball 1.0", 0.1, {"half_widths": (2.0, 2.0), "resolution": 128})
_H1_REGION = ("koranyi-ball 1.5", 0.2, {"lower": (-3.0, -3.0, -2.0), "upper": (3.0, 3.0, 2.0), "resolution": (32, 32, 48)})


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _grid_arg(text: str, group: str) -> dict:
    """``32`` or ``32x32x48`` (resolution over the default box), optionally ``@4,4,8`` for half-widths."""
    res_text, _, box = text.partition("@")
    res = tuple(int(x) for x in res_text.lower().split("x"))
    g = parse_group(group)
    if box:
        hw = _floats(box)
    else:
        hw = (4.0, 4.0, 8.0) if not g.is_euclidean else (4.0,) * g.topological_dimension
    if len(hw) != g.topological_dimension:
        raise argparse.ArgumentTypeError(f"--grid box needs {g.topological_dimension} half-widths")
    return {"half_widths": hw, "resolution": res[0] if len(res) == 1 else res}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subriesz", description="Riesz potentials, Lorentz norms and heat maximal functions on R^d and the Heisenberg group.")
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", type=Path, help="YAML suite file (schema_version 1); 'suite' uses the built-in default when omitted")
    ap.add_argument("--group", default=None, help="euclidean:d or heisenberg1")
    ap.add_argument("--alpha", action="append", type=float, help="repeatable; default 0.25 0.5 0.75")
    ap.add_argument("--grid", help="resolution N or NxNxN, optionally @half,widths")
    ap.add_argument("--t-min", type=float, default=1e-4, help="subordination lower time limit")
    ap.add_argument("--t-max", type=float, default=1e4, help="subordination upper time limit")
    ap.add_argument("--nodes-per-decade", type=int, default=16)
    ap.add_argument("--region", help="e.g. 'koranyi-ball 1.5' (pipeline, isoperimetric)")
    ap.add_argument("--epsilon", type=float, help="mollification width for regions")
    ap.add_argument("--p", type=float, default=2.0, help="Lebesgue exponent for the baseline")
    ap.add_argument("--members", type=int, help="number of standard test functions to use")
    ap.add_argument("--resolutions", help="comma list of resolutions for weak11")
    ap.add_argument("--samples", type=int, default=256, help="pointwise sample nodes for lemma31")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, help="directory for reports, profiles and plots")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--plots", action="store_true", help="write SVG figures to --out")
    ap.add_argument("--profiles", action="store_true", help="write f* profiles of the main-inequality family as CSV")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> SuiteConfig:
    if args.config is not None:
        return load_config(args.config)
    if args.command == "suite":
        return default_config()
    group = args.group or "euclidean:2"
    kw = {"kind": args.command, "group": group, "j": 1, "p": args.p}
    if args.grid:
        kw["grid"] = _grid_arg(args.grid, group)
    if args.members:
        kw["members"] = args.members
    if args.command in ("pipeline", "isoperimetric"):
        region, eps, grid = _EUCLID_REGION if parse_group(group).is_euclidean else _H1_REGION
        kw["region"] = args.region or region
        kw["epsilon"] = args.epsilon or eps
        kw.setdefault("grid", grid)
    if args.command == "weak11":
        kw["resolutions"] = tuple(int(x) for x in (args.resolutions or "24,32,40").split(","))
    exp = ExperimentConfig(**kw)
    base = SuiteConfig(seed=args.seed, sample_points=args.samples, rule=RuleConfig(args.t_min, args.t_max, args.nodes_per_decade), experiments=(exp,))
    if args.alpha:
        base = replace(base, alphas=tuple(args.alpha))
    elif args.command == "baseline":
        base = replace(base, alphas=(0.5,))
    return base


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        reports = run_suite(cfg, workers=args.workers)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    header = suite_header(cfg)
    for line in summary_lines(reports):
        print(line)
    if args.out is not None:
        path = emit(reports, args.out, args.format, header)
        print(f"wrote {path}")
        if args.profiles:
            export_profiles(cfg, args.out / "profiles")
        if args.plots:
            for p in write_plots(cfg, reports, args.out / "plots"):
                print(f"wrote {p}")
    elif args.verbose:
        sys.stdout.write(reports_to_json(reports, header) if args.format == "json" else reports_to_csv(reports))
    return exit_code(reports)


if __name__ == "__main__":
    sys.exit(main())
