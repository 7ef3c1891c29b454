"""Acceptance criteria 1-10 at their stated tolerances.

Each test prints one PASS/FAIL line (visible with ``pytest -v -s`` and in the
captured output of failures) and then asserts the same condition.
"""
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from subriesz.config import default_config, parse_config
from subriesz.experiments import lemma_constants
from subriesz.geometry import RegionSpec, horizontal_perimeter
from subriesz.grid import GridFunction, GridSpec, integrate
from subriesz.group import HEISENBERG1, dilate, euclidean, inverse, multiply, parse_group
from subriesz.heat import heat_kernel, semigroup_apply
from subriesz.lorentz import (
    holder_constant,
    holder_lorentz_check,
    lorentz_norm,
    lorentz_quasinorm,
    young_lorentz_check,
)
from subriesz.maximal import TGrid, heat_maximal
from subriesz.report import Verdict, reports_to_json
from subriesz.riesz import SubordinationRule, riesz_kernel, riesz_potential
from subriesz.suite import run_experiment, run_suite, suite_header

pytestmark = pytest.mark.slow

E2, E3, H1 = euclidean(2), euclidean(3), HEISENBERG1
DEFAULT = default_config()


def announce(capsys, n: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def default_experiments(kind: str, group: str | None = None):
    return [e for e in DEFAULT.experiments if e.kind == kind and (group is None or e.group == group)]


def gauss(spec, g, w):
    w = np.asarray(w, dtype=float)
    return GridFunction.from_callable(spec, g, lambda *x: np.exp(-0.5 * sum((xi / wi) ** 2 for xi, wi in zip(x, w))))


def inner_half(spec):
    return tuple(slice(n // 4, 3 * n // 4) for n in spec.shape)


def test_criterion_01_group_and_heat(capsys):
    rng = np.random.default_rng(1)
    worst_axiom = 0.0
    for g in (E2, E3, H1):
        p, q, s = (rng.uniform(-3, 3, (200, g.topological_dimension)) for _ in range(3))
        r1, r2 = 0.7, 1.9
        checks = [
            multiply(g, multiply(g, p, q), s) - multiply(g, p, multiply(g, q, s)),
            multiply(g, p, inverse(g, p)),
            multiply(g, p, np.zeros_like(p)) - p,
            dilate(g, r1, multiply(g, p, q)) - multiply(g, dilate(g, r1, p), dilate(g, r1, q)),
            dilate(g, r1, dilate(g, r2, p)) - dilate(g, r1 * r2, p),
        ]
        worst_axiom = max(worst_axiom, max(float(np.abs(c).max()) for c in checks))

    norm_err = 0.0
    for g, spec in ((E2, GridSpec.cube((16, 16), 128)), (H1, GridSpec.cube((16, 16, 32), 32))):
        delta = np.zeros(spec.shape)
        delta[tuple(n // 2 for n in spec.shape)] = 1.0 / spec.cell_weight
        for t in (0.05, 0.5, 5.0):
            norm_err = max(norm_err, abs(integrate(semigroup_apply(GridFunction(spec, delta, g), t)) - 1.0))

    semi_err = 0.0
    for g, spec, w in ((E2, GridSpec.cube((4, 4), 128), (0.5, 0.5)), (E3, GridSpec.cube((4, 4, 4), 48), (0.6,) * 3), (H1, GridSpec.cube((4, 4, 8), 32), (0.5, 0.5, 1.0))):
        f = gauss(spec, g, w)
        two = semigroup_apply(semigroup_apply(f, 0.2), 0.3).samples
        one = semigroup_apply(f, 0.5).samples
        semi_err = max(semi_err, float(np.sum(np.abs(two - one)) / np.sum(np.abs(one))))

    scale_err = 0.0
    # direct quadrature at time t against the tabulated p_1
    for _ in range(20):
        t = float(rng.uniform(0.05, 5.0))
        p = rng.uniform(-1.5, 1.5, 3)
        lhs = heat_kernel(H1, t, p, exact=True)
        rhs = t**-2 * heat_kernel(H1, 1.0, dilate(H1, t**-0.5, p))
        scale_err = max(scale_err, abs(lhs - rhs) / max(abs(rhs), 1e-300))

    ok = worst_axiom <= 1e-12 and norm_err <= 1e-3 and semi_err <= 2e-2 and scale_err <= 1e-3
    announce(capsys, 1, ok, f"axioms {worst_axiom:.1e}, normalization {norm_err:.1e}, semigroup L1 {semi_err:.1e}, H1 scaling {scale_err:.1e}")
    assert ok


def test_criterion_02_riesz(capsys):
    rng = np.random.default_rng(2)
    r = np.geomspace(0.2, 2.0, 40)
    p = np.column_stack([r, np.zeros_like(r), np.zeros_like(r)])
    newton = float(np.max(np.abs(riesz_kernel(E3, SubordinationRule(2.0), p) * 4 * np.pi * r - 1.0)))

    homog = 0.0
    for g in (E3, H1):
        for alpha in (0.25, 0.5, 0.75, 1.5):
            rule = SubordinationRule(alpha)
            pts = rng.uniform(-1, 1, (40, 3))
            pts = pts[np.linalg.norm(pts, axis=1) > 0.2]
            for s in (0.5, 2.0):
                lhs = riesz_kernel(g, rule, dilate(g, s, pts))
                rhs = s ** (alpha - g.homogeneous_dimension) * riesz_kernel(g, rule, pts)
                homog = max(homog, float(np.max(np.abs(lhs / rhs - 1.0))))

    # I_a I_b against I_(a+b) in relative L2 over the inner half-box
    semi = {}
    for g, spec, w in ((E3, GridSpec.cube((4, 4, 4), 48), (0.5,) * 3), (H1, GridSpec.cube((4, 4, 8), 32), (0.5, 0.5, 1.0))):
        f = gauss(spec, g, w)
        inner = inner_half(spec)
        for a, b in ((0.5, 0.5), (0.25, 0.5)):
            two = riesz_potential(riesz_potential(f, SubordinationRule(b)), SubordinationRule(a)).samples[inner]
            one = riesz_potential(f, SubordinationRule(a + b)).samples[inner]
            semi[f"{g.tag} {a}+{b}"] = float(np.linalg.norm(two - one) / np.linalg.norm(one))
    worst_semi = max(semi.values())

    ok = newton <= 1e-2 and homog <= 1e-2 and worst_semi <= 3e-2
    announce(capsys, 2, ok, f"Newtonian {newton:.1e}, homogeneity {homog:.1e}, composition L2 {worst_semi:.1e}")
    assert ok


def random_function(rng, spec, g):
    kind = rng.integers(3)
    if kind == 0:
        a = np.abs(rng.standard_cauchy(spec.shape))
    elif kind == 1:
        a = rng.exponential(size=spec.shape) * (rng.uniform(size=spec.shape) < rng.uniform(0.05, 1))
    else:
        c = rng.uniform(-2, 2, 2)
        w = rng.uniform(0.2, 1.5)
        x, y = spec.mesh()
        a = np.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / (2 * w * w)) * rng.uniform(0.1, 10)
    if not np.any(a):
        a.flat[0] = 1.0
    return GridFunction(spec, a, g)


def test_criterion_03_lorentz(capsys):
    rng = np.random.default_rng(3)
    spec = GridSpec.cube((2, 2), 32)
    closed = 0.0
    for cells in (1, 37, 300, 1024):
        a = np.zeros(spec.size)
        a[rng.choice(spec.size, cells, replace=False)] = 1.0
        chi = GridFunction(spec, a.reshape(spec.shape), E2)
        meas = cells * spec.cell_weight
        for q, r in ((4 / 3, 0.5), (2.0, 1.0), (16 / 7, 3.0), (8 / 7, 1.0), (3.0, 2.0)):
            want = (q / r) ** (1 / r) * meas ** (1 / q)
            closed = max(closed, abs(lorentz_quasinorm(chi, q, r) / want - 1.0))

    scaling = 0.0
    sandwich_bad = 0
    weak = 0.0
    for k in range(100):
        f = random_function(rng, spec, E2)
        q = float(rng.choice([1.25, 4 / 3, 2.0, 3.0, 6.0]))
        r = float(rng.choice([0.5, 1.0, 2.0, 4.0]))
        gam = float(rng.uniform(1.0 / q + 0.05, 3.0))
        lhs = lorentz_quasinorm(f.abs().power(gam), q, r)
        rhs = lorentz_quasinorm(f, gam * q, gam * r) ** gam
        scaling = max(scaling, abs(lhs / rhs - 1.0))
        rs = r if r >= 1 else math.inf
        quasi, norm = lorentz_quasinorm(f, q, rs), lorentz_norm(f, q, rs)
        sandwich_bad += not (quasi <= norm * (1 + 1e-12) and norm <= holder_constant(q) * quasi * (1 + 1e-12))
        l1 = float(np.sum(np.abs(f.samples))) * spec.cell_weight
        weak = max(weak, abs(lorentz_norm(f, 1.0, math.inf) / l1 - 1.0))

    ok = closed <= 1e-10 and scaling <= 1e-12 and sandwich_bad == 0 and weak <= 1e-12
    announce(capsys, 3, ok, f"closed form {closed:.1e}, power scaling {scaling:.1e}, sandwich violations {sandwich_bad}/100, L(1,inf) vs L1 {weak:.1e}")
    assert ok


def _r_pair(rng, r):
    u = rng.uniform(0.5, 1.0)
    return 2 * r * u, 2 * r * u


def test_criterion_04_oneil(capsys):
    rng = np.random.default_rng(4)
    spec = GridSpec.cube((4, 4), 64)
    holder_bad = young_bad = 0
    holder_best = young_best = 0.0
    for _ in range(100):
        f, g = random_function(rng, spec, E2), random_function(rng, spec, E2)
        inv_q = rng.uniform(0.05, 0.95)
        s = rng.uniform(0.1, 0.9)
        r = float(rng.choice([1.0, 1.5, 2.0, 4.0, math.inf]))
        r1, r2 = _r_pair(rng, r)
        rep = holder_lorentz_check(f, g, (1 / (s * inv_q), r1, 1 / ((1 - s) * inv_q), r2, 1 / inv_q, r))
        holder_bad += rep.verdict == Verdict.FAIL
        holder_best = max(holder_best, rep.extras["best_constant"] / rep.extras["constant"])

        inv_q = rng.uniform(0.05, 0.9)
        s = rng.uniform(0.05, 0.95)
        r = float(rng.choice([1.0, 1.5, 2.0, 4.0, math.inf]))
        r1, r2 = _r_pair(rng, r)
        q1 = 1 / (inv_q + s * (1 - inv_q))
        q2 = 1 / (1 - s * (1 - inv_q))
        rep = young_lorentz_check(f, g, (q1, r1, q2, r2, 1 / inv_q, r))
        young_bad += rep.verdict == Verdict.FAIL
        young_best = max(young_best, rep.extras["best_constant"] / rep.extras["constant"])
    ok = holder_bad == 0 and young_bad == 0
    announce(capsys, 4, ok, f"Holder violations {holder_bad}/100 (worst lhs/rhs {holder_best:.3f}), Young violations {young_bad}/100 (worst {young_best:.3f})")
    assert ok


def test_criterion_05_pointwise_lemma(capsys):
    assert lemma_constants(0.5)[2] > 0
    reports = []
    for exp in default_experiments("lemma31"):
        assert exp.members >= 6
        reports += run_experiment(exp, DEFAULT)
    groups = {r.group_tag for r in reports}
    alphas = {r.alpha for r in reports}
    persistent = sum(r.extras["persistent_violations"] for r in reports)
    initial = sum(r.extras["initial_violations"] for r in reports)
    worst = max(r.lhs for r in reports)
    ok = persistent == 0 and all(r.verdict != Verdict.FAIL for r in reports) and len(groups) == 2 and len(alphas) == 3 and DEFAULT.sample_points == 256
    announce(capsys, 5, ok, f"{len(reports)} sweeps over {sorted(groups)}, persistent violations {persistent} (initial {initial}), worst lhs/(C3 rhs) {worst:.3f}")
    assert ok


def test_criterion_06_main_inequality(capsys):
    finite = True
    drift = 0.0
    sups = {}
    for exp in default_experiments("main-ineq"):
        for r in run_experiment(exp, DEFAULT):
            finite &= all(math.isfinite(m["ratio"]) for m in r.extras["members"])
            drift = max(drift, r.lhs)
            sups[(exp.group, r.alpha, exp.grid_spec().resolution)] = r.extras["family_sup"]
    h1 = default_experiments("main-ineq", "heisenberg1")[0]
    coarse = replace(h1, grid={"half_widths": (4.0, 4.0, 8.0), "resolution": 24})
    stab = 0.0
    for r in run_experiment(coarse, DEFAULT):
        fine = sups[("heisenberg1", r.alpha, (32, 32, 32))]
        stab = max(stab, abs(r.extras["family_sup"] / fine - 1.0))
    ok = finite and drift <= 0.02 and stab <= 0.05
    sup_text = ", ".join(f"{g} a={a:g}: {v:.4f}" for (g, a, _), v in sorted(sups.items()))
    announce(capsys, 6, ok, f"dilation drift {drift:.1e}, H1 sup change 24^3->32^3 {stab:.1%}; sups {sup_text}")
    assert ok


def test_criterion_07_pipeline(capsys):
    reports = []
    for exp in default_experiments("pipeline"):
        reports += run_experiment(exp, DEFAULT)
    Qs = {r.group_tag: parse_group(r.group_tag).homogeneous_dimension for r in reports}
    exact = all(r.extras["exponents"]["r"] == Qs[r.group_tag] / (r.alpha * (Qs[r.group_tag] - 1)) for r in reports)
    failed = [f"{r.group_tag} a={r.alpha:g} {name}" for r in reports for name, link in r.extras["links"].items() if not link["ok"]]
    ok = exact and not failed and all(r.verdict == Verdict.PASS for r in reports) and {r.group_tag for r in reports} == {"euclidean:2", "heisenberg1"}
    announce(capsys, 7, ok, f"{len(reports)} chains, exponent relation exact: {exact}, failing links: {failed or 'none'}")
    assert ok


def test_criterion_08_geometry(capsys):
    disk = RegionSpec.parse("euclidean-ball 1.0", 0.1, E2)
    per = horizontal_perimeter(disk, GridSpec.cube((2, 2), 128))
    disk_err = abs(per / (2 * math.pi) - 1.0)
    coarea = [run_experiment(e, DEFAULT) for e in default_experiments("coarea")]
    coarea_gap = max(r.lhs for rs in coarea for r in rs)
    iso = [r for e in default_experiments("isoperimetric") for r in run_experiment(e, DEFAULT)]
    iso_drift = max(r.lhs for r in iso)
    law = max(r.extras["perimeter_scaling_gap"] for r in iso)
    ok = disk_err <= 0.02 and coarea_gap <= 0.02 and iso_drift <= 0.01 and law <= 0.01
    announce(capsys, 8, ok, f"disk perimeter error {disk_err:.2%}, coarea gap {coarea_gap:.2%}, isoperimetric drift {iso_drift:.1e}, r^(Q-1) law {law:.1e}")
    assert ok


def test_criterion_09_maximal(capsys):
    reps = [r for e in default_experiments("weak11") for r in run_experiment(e, DEFAULT)]
    spread = max(r.lhs for r in reps)
    finite = all(math.isfinite(v) for r in reps for v in r.extras["ratio_by_resolution"].values())
    rng = np.random.default_rng(9)
    tg = DEFAULT.tgrid.tgrid()
    bad = 0
    for g, spec in ((E2, GridSpec.cube((4, 4), 64)), (H1, GridSpec.cube((4, 4, 8), 16))):
        for _ in range(5):
            f = GridFunction(spec, rng.normal(size=spec.shape), g)
            h = GridFunction(spec, rng.normal(size=spec.shape), g)
            Mf, Mh, Ms = heat_maximal(f, tg).samples, heat_maximal(h, tg).samples, heat_maximal(f + h, tg).samples
            bad += int(np.count_nonzero(Ms > Mf + Mh + 1e-12 * (Mf.max() + Mh.max())))
    ok = finite and spread <= 0.10 and bad == 0
    announce(capsys, 9, ok, f"weak-type spread across resolutions {spread:.1e}, sublinearity violations {bad}")
    assert ok


DETERMINISM_SUITE = """\
schema_version: 1
alphas: [0.25, 0.5]
sample_points: 64
experiments:
  - {kind: constants}
  - {kind: lemma31, group: heisenberg1, members: 2, grid: {half_widths: [4, 4, 8], resolution: 16}}
  - {kind: main-ineq, group: "euclidean:2", members: 3, grid: {half_widths: [4, 4], resolution: 64}}
  - {kind: coarea, group: "euclidean:2", members: 2, grid: {half_widths: [4, 4], resolution: 64}}
"""


def test_criterion_10_determinism(capsys):
    cfg = parse_config(DETERMINISM_SUITE)
    runs = [reports_to_json(run_suite(cfg), suite_header(cfg)).encode() for _ in range(2)]
    body = json.loads(runs[0])
    ok = runs[0] == runs[1] and len(body["reports"]) > 0
    announce(capsys, 10, ok, f"two runs, {len(runs[0])} bytes each, identical: {runs[0] == runs[1]}")
    assert ok
