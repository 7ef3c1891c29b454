import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subriesz.experiments import (
    chi_quasinorm_power,
    constants_experiment,
    euclidean_baseline_experiment,
    lemma31_dilation_stress,
    lemma31_sweep,
    lemma_constants,
    lemma_constants_series,
    main_inequality_experiment,
    main_ratio,
    pipeline_exponents,
    proof_pipeline_experiment,
    resolve_small_times,
    sample_indices,
    weak11_experiment,
)
from subriesz.geometry import RegionSpec
from subriesz.grid import GridSpec
from subriesz.group import euclidean, heisenberg
from subriesz.maximal import TGrid
from subriesz.report import Verdict
from subriesz.testfunctions import gaussian_bump, mollified_ball, sum_of_bumps_from

E2 = euclidean(2)
H1 = heisenberg()
SPEC2 = GridSpec.cube((4, 4), 64)
TG = TGrid.log_spaced(1e-3, 1e3, 32)


def test_constants_at_half():
    c1, c2, c3 = lemma_constants(0.5)
    assert c1 == pytest.approx(1.0104, abs=1e-4)
    assert c2 == pytest.approx(c1, rel=1e-12)  # symmetric at alpha = 1/2
    assert c3 == pytest.approx(2 * c1, rel=1e-12)


def test_constants_small_alpha_limit():
    # ln2 / Gamma(a/2) ~ (a/2) ln 2 and x/(1-x) ~ 2/(a ln 2) as a -> 0
    c1, c2, _ = lemma_constants(1e-6)
    assert c1 == pytest.approx(1.0, rel=1e-5)
    assert c2 == pytest.approx(0.0, abs=1e-5)
    assert 1 / (math.sqrt(2) - 1) == pytest.approx(2.414, abs=1e-3)


@given(st.floats(0.05, 0.95))
def test_closed_form_matches_partial_sums(a):
    for x, y in zip(lemma_constants(a), lemma_constants_series(a)):
        assert x == pytest.approx(y, rel=1e-12)


def test_constants_reject_out_of_range():
    for a in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError, match="diverges"):
            lemma_constants(a)
    reps = constants_experiment((0.1, 0.5, 0.9))
    assert all(r.verdict == Verdict.PASS for r in reps)


def test_sample_indices_are_central_and_distinct():
    idx = sample_indices(SPEC2, 100, seed=3)
    assert len({tuple(i) for i in idx}) == 100
    assert idx.min() >= 15 and idx.max() <= 48
    np.testing.assert_array_equal(idx, sample_indices(SPEC2, 100, seed=3))


def test_lemma_on_zero_is_vacuous():
    zero = gaussian_bump(E2, 0.5).scaled(0.0)
    reps = lemma31_sweep(zero, [0.5], 1, SPEC2, TG, 32)
    assert reps[0].verdict == Verdict.VACUOUS


def test_lemma_passes_and_is_dilation_stable():
    u = gaussian_bump(E2, 0.6)
    reps = lemma31_sweep(u, [0.25, 0.5, 0.75], 1, SPEC2, TG, 64)
    assert all(r.verdict == Verdict.PASS for r in reps)
    assert all(r.lhs <= 1.0 for r in reps)
    stress = lemma31_dilation_stress(u, 0.5, 1, SPEC2, TG, 64)
    assert stress.verdict == Verdict.PASS


def test_main_ratio_is_homogeneous_of_degree_zero():
    u = gaussian_bump(E2, 0.6)
    a = main_ratio(u, 0.5, SPEC2)
    b = main_ratio(u.scaled(5.0), 0.5, SPEC2)
    np.testing.assert_allclose(a["quasi"], b["quasi"], rtol=1e-12)
    assert all(x <= y * (1 + 1e-12) for x, y in zip(a["quasi"], a["norm"]))


def test_main_inequality_rejects_alpha():
    with pytest.raises(ValueError):
        main_inequality_experiment([gaussian_bump(E2, 0.6)], 1.0, SPEC2)


def test_main_inequality_small_family():
    fam = [gaussian_bump(E2, 0.4), mollified_ball(E2, 1.0, 0.5)]
    rep = main_inequality_experiment(fam, 0.5, SPEC2)
    assert rep.verdict == Verdict.PASS
    assert 0 < rep.extras["family_sup"] < math.inf


def test_pipeline_exponents():
    e = pipeline_exponents(4, 0.5)
    assert e["q"] == pytest.approx(8 / 7)
    assert e["q1"] == pytest.approx(2.0)
    assert e["r"] == pytest.approx(8 / 3)
    assert e["r_alpha"] == pytest.approx(4 / 3)
    assert 1 / e["q"] == pytest.approx(1 / e["q1"] + 1 / e["r"])
    e3 = pipeline_exponents(4, 0.75)
    assert e3["r"] == pytest.approx(16 / 9)
    assert chi_quasinorm_power(0.5, 4, 1.0) == pytest.approx(8 / 3)


def test_pipeline_on_a_disk():
    E = RegionSpec.parse("euclidean-ball 1.0", 0.1, E2)
    rep = proof_pipeline_experiment(E, 0.5, 1, GridSpec.cube((2, 2), 96), TG)
    assert rep.verdict == Verdict.PASS
    assert all(link["ok"] for link in rep.extras["links"].values())


def test_baseline():
    f = gaussian_bump(E2, 0.5)
    rep = euclidean_baseline_experiment(f, 2.0, 0.5, SPEC2)
    assert rep.extras["q"] == pytest.approx(4.0)
    assert rep.verdict == Verdict.PASS
    with pytest.raises(ValueError, match="1 < p < d/alpha"):
        euclidean_baseline_experiment(f, 4.0, 0.5, SPEC2)
    with pytest.raises(ValueError):
        euclidean_baseline_experiment(gaussian_bump(H1, 0.5), 2.0, 0.5, GridSpec.cube((4, 4, 8), 16))


def test_weak11_small():
    rep = weak11_experiment(E2, GridSpec.cube((4, 4), 32), (32, 48, 64, 96), tg=TG)
    assert rep.verdict == Verdict.PASS
    assert rep.lhs < 1e-3


def test_small_time_extension():
    spec = GridSpec.cube((4, 4), 96)
    ext = resolve_small_times(TG, spec)
    assert ext.nodes[0] == pytest.approx(1e-2 * min(spec.spacing) ** 2)
    assert set(TG.nodes) <= set(ext.nodes)
    assert resolve_small_times(TGrid.log_spaced(1e-6, 1.0, 8), spec).nodes[0] == 1e-6
