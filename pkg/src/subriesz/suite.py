"""Run a configured list of experiments and emit the reports."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, SuiteConfig
from .experiments import (
    coarea_experiment,
    constants_experiment,
    euclidean_baseline_experiment,
    isoperimetric_experiment,
    lemma31_dilation_stress,
    lemma31_sweep,
    main_inequality_experiment,
    proof_pipeline_experiment,
    weak11_experiment,
)
from .geometry import RegionSpec
from .group import parse_group
from .lorentz import rearrange
from .report import CODE_VERSION, ExperimentReport, Verdict, config_hash, write_reports
from .riesz import riesz_of_hgrad
from .testfunctions import standard_family

log = logging.getLogger(__name__)


def _family(exp: ExperimentConfig, spec, default_members: int):
    g = parse_group(exp.group)
    fam = standard_family(g, half_width=float(spec.upper[0]))
    return fam[: exp.members or default_members]


def run_experiment(exp: ExperimentConfig, cfg: SuiteConfig) -> list[ExperimentReport]:
    """All reports for one configured experiment, in a fixed order."""
    alphas = exp.alphas or cfg.alphas
    if exp.kind == "constants":
        return constants_experiment(alphas)
    g = parse_group(exp.group)
    spec = exp.grid_spec()
    tg = cfg.tgrid.tgrid()
    rule = cfg.rule.rule(alphas[0])
    out: list[ExperimentReport] = []
    if exp.kind == "lemma31":
        for u in _family(exp, spec, 6):
            out += lemma31_sweep(u, alphas, exp.j, spec, tg, cfg.sample_points, rule, seed=cfg.seed)
            if exp.dilation_stress:
                out.append(lemma31_dilation_stress(u, alphas[len(alphas) // 2], exp.j, spec, tg, cfg.sample_points, seed=cfg.seed))
    elif exp.kind == "main-ineq":
        fam = _family(exp, spec, 10)
        for a in alphas:
            out.append(main_inequality_experiment(fam, a, spec, rule, exp.scales))
    elif exp.kind == "pipeline":
        E = RegionSpec.parse(exp.region, exp.epsilon or 3.0 * max(spec.spacing), g)
        for a in alphas:
            out.append(proof_pipeline_experiment(E, a, exp.j, spec, tg, rule))
    elif exp.kind == "baseline":
        for u in _family(exp, spec, 1):
            for a in alphas:
                out.append(euclidean_baseline_experiment(u, exp.p, a, spec, rule, exp.scales))
    elif exp.kind == "coarea":
        for u in _family(exp, spec, 3):
            out.append(coarea_experiment(u, spec, exp.levels))
    elif exp.kind == "isoperimetric":
        E = RegionSpec.parse(exp.region, exp.epsilon or 3.0 * max(spec.spacing), g)
        out.append(isoperimetric_experiment(E, spec, exp.scales))
    elif exp.kind == "weak11":
        out.append(weak11_experiment(g, spec, exp.resolutions, exp.width_spacings, tg))
    else:
        raise ValueError(f"unknown experiment kind {exp.kind!r}")
    for r in out:
        r.provenance = {"kind": exp.kind, "grid": spec.to_dict()}
    return out


def _run_one(args) -> list[ExperimentReport]:
    exp, cfg = args
    return run_experiment(exp, cfg)


def suite_header(cfg: SuiteConfig) -> dict:
    body = cfg.to_dict()
    return {"code_version": CODE_VERSION, "config_hash": config_hash(body), "schema_version": cfg.schema_version}


def run_suite(cfg: SuiteConfig, workers: int = 1) -> list[ExperimentReport]:
    """Experiments run independently; results are collected in config order."""
    jobs = [(exp, cfg) for exp in cfg.experiments]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_one, jobs))
    else:
        chunks = [_run_one(j) for j in jobs]
    header = suite_header(cfg)
    reports = []
    for chunk in chunks:
        for r in chunk:
            r.provenance = {**r.provenance, "config_hash": header["config_hash"], "code_version": CODE_VERSION}
            reports.append(r)
    return reports


def exit_code(reports: list[ExperimentReport]) -> int:
    return 1 if any(r.verdict == Verdict.FAIL for r in reports) else 0


def emit(reports: list[ExperimentReport], out: Path, fmt: str = "json", header: dict | None = None) -> Path:
    return write_reports(reports, Path(out), fmt, header)


def export_profiles(cfg: SuiteConfig, out: Path) -> list[Path]:
    """Write f* of I_alpha X_1 u as CSV for each main-inequality family member."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, exp in enumerate(cfg.experiments):
        if exp.kind != "main-ineq":
            continue
        spec = exp.grid_spec()
        alpha = (exp.alphas or cfg.alphas)[0]
        rule = cfg.rule.rule(alpha)
        for m, u in enumerate(_family(exp, spec, 10)):
            F = riesz_of_hgrad(u.validated(spec), rule, 1)
            paths.append(rearrange(F).to_csv(out / f"profile_{k:02d}_{m:02d}.csv"))
    return paths


def write_plots(cfg: SuiteConfig, reports: list[ExperimentReport], out: Path) -> list[Path]:
    from .plots import plot_kernel_cross_section, plot_profiles, plot_ratio_vs_scale

    out = Path(out)
    paths = []
    p = plot_ratio_vs_scale(reports, out / "ratio_vs_scale.svg")
    if p is not None:
        paths.append(p)
    seen = []
    for exp in cfg.experiments:
        if exp.kind == "constants" or exp.group in seen:
            continue
        seen.append(exp.group)
        g = parse_group(exp.group)
        spec = exp.grid_spec()
        alpha = (exp.alphas or cfg.alphas)[0]
        rule = cfg.rule.rule(alpha)
        fam = _family(replace(exp, members=None), spec, 10)
        funcs = {}
        for u in fam[:4]:
            try:
                funcs[u.label] = riesz_of_hgrad(u.validated(spec), rule, 1)
            except ValueError as exc:
                log.info("skipping %s in profile plot: %s", u.label, exc)
        tag = g.tag.replace(":", "")
        if funcs:
            paths.append(plot_profiles(funcs, out / f"profiles_{tag}.svg"))
        alphas = [a for a in (exp.alphas or cfg.alphas) if a < min(2.0, g.homogeneous_dimension)]
        paths.append(plot_kernel_cross_section(g, alphas, out / f"kernel_{tag}.svg"))
    return paths


def summary_lines(reports: list[ExperimentReport]) -> list[str]:
    lines = []
    for r in reports:
        a = "-" if r.alpha is None else f"{r.alpha:g}"
        ratio = r.ratio
        lines.append(f"{r.verdict.value:8s} {r.experiment_id:18s} {r.group_tag:12s} alpha={a:5s} lhs={r.lhs:.6g} rhs={r.rhs:.6g} ratio={ratio:.4g}")
    return lines


__all__ = ["run_suite", "run_experiment", "emit", "exit_code", "export_profiles", "write_plots", "suite_header", "summary_lines"]
