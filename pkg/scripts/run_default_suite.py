"""Run the built-in suite and write JSON, CSV, profiles and plots to one directory.

    python scripts/run_default_suite.py out/ [--workers 4]
"""
import argparse
from pathlib import Path

from subriesz.config import default_config
from subriesz.suite import emit, exit_code, export_profiles, run_suite, suite_header, summary_lines, write_plots


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=Path)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--no-plots", action="store_true")
    args = ap.parse_args()
    cfg = default_config()
    reports = run_suite(cfg, workers=args.workers)
    header = suite_header(cfg)
    for line in summary_lines(reports):
        print(line)
    emit(reports, args.out, "json", header)
    emit(reports, args.out, "csv", header)
    export_profiles(cfg, args.out / "profiles")
    if not args.no_plots:
        write_plots(cfg, reports, args.out / "plots")
    return exit_code(reports)


if __name__ == "__main__":
    raise SystemExit(main())
