import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subriesz.grid import GridFunction, GridSpec, integrate
from subriesz.group import HEISENBERG1, dilate, euclidean, inverse
from subriesz.heat import (
    NumericFailure,
    heat_family,
    heat_kernel,
    heat_kernel_hgrad,
    heat_lattice_kernel,
    heisenberg_heat_direct,
    heisenberg_table,
    mehler_factors,
    semigroup_apply,
)

H1_BOX = GridSpec.cube((4, 4, 8), 32)
E2_BOX = GridSpec.cube((4, 4), 128)


def _bump(spec, group, w):
    w = np.asarray(w)
    return GridFunction.from_callable(spec, group, lambda *x: np.exp(-0.5 * sum((xi / wi) ** 2 for xi, wi in zip(x, w))))


def test_euclidean_closed_form():
    assert heat_kernel(euclidean(2), 1.0, [0.0, 0.0]) == pytest.approx(1 / (4 * math.pi))


def test_heisenberg_value_at_origin():
    assert heat_kernel(HEISENBERG1, 1.0, [0, 0, 0]) == pytest.approx(1 / 16, rel=1e-8)
    assert heisenberg_heat_direct(1.0, 0, 0, 0) == pytest.approx(1 / 16, rel=1e-9)


def test_bad_time():
    with pytest.raises(ValueError):
        heat_kernel(euclidean(2), 0.0, [0, 0])
    with pytest.raises(ValueError):
        semigroup_apply(_bump(E2_BOX, euclidean(2), (1, 1)), -1.0)


def test_mehler_small_lambda_limit():
    c, a = mehler_factors(1e-12, 2.0)
    assert c == pytest.approx(1 / (8 * math.pi))
    assert a == pytest.approx(1 / 8)


def test_table_matches_direct_quadrature(rng):
    pts = np.column_stack([rng.uniform(-2, 2, 12), rng.uniform(-2, 2, 12), rng.uniform(-2, 2, 12)])
    for t in (0.3, 1.0, 2.5):
        tab = heat_kernel(HEISENBERG1, t, pts)
        ref = heat_kernel(HEISENBERG1, t, pts, exact=True)
        # spline-table interpolation error, relative to the peak value
        assert np.max(np.abs(tab - ref)) <= 1e-7 * heat_kernel(HEISENBERG1, t, [0, 0, 0])


def test_numeric_failure_carries_diagnostics():
    err = NumericFailure("x", {"t": 1.0})
    assert err.diagnostics["t"] == 1.0


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.2, 4.0))
def test_heisenberg_even_under_inversion(x, y, u, t):
    p = np.array([x, y, u])
    assert heat_kernel(HEISENBERG1, t, p) == pytest.approx(heat_kernel(HEISENBERG1, t, inverse(HEISENBERG1, p)), rel=1e-8, abs=1e-14)


def test_scaling_law(rng):
    for g in (HEISENBERG1, euclidean(3)):
        Q = g.homogeneous_dimension
        for _ in range(20):
            t = float(rng.uniform(0.05, 5))
            p = rng.uniform(-1.5, 1.5, g.topological_dimension)
            lhs = heat_kernel(g, t, p)
            rhs = t ** (-Q / 2) * heat_kernel(g, 1.0, dilate(g, t**-0.5, p))
            assert lhs == pytest.approx(rhs, rel=1e-3, abs=1e-12)


def test_euclidean_product_structure(rng):
    # independent route: the d-dim kernel is the product of 1-d kernels
    for _ in range(10):
        t = float(rng.uniform(0.1, 3))
        p = rng.uniform(-2, 2, 3)
        prod = np.prod([heat_kernel(euclidean(1), t, [c]) for c in p])
        assert heat_kernel(euclidean(3), t, p) == pytest.approx(prod, rel=1e-10)


def test_hgrad_examples():
    t = 1.0
    want = -0.5 * (4 * math.pi) ** -0.5 * math.exp(-0.25)
    assert heat_kernel_hgrad(euclidean(1), t, [1.0], 1) == pytest.approx(want, rel=1e-5)
    for j in (1, 2):
        assert abs(heat_kernel_hgrad(HEISENBERG1, 0.7, [0, 0, 0], j)) < 1e-10
    with pytest.raises(ValueError):
        heat_kernel_hgrad(HEISENBERG1, 1.0, [0, 0, 0], 3)


def test_hgrad_scaling(rng):
    g = HEISENBERG1
    for _ in range(10):
        t = float(rng.uniform(0.2, 4))
        p = rng.uniform(-1.5, 1.5, 3)
        lhs = heat_kernel_hgrad(g, t, p, 1)
        rhs = t ** (-(g.homogeneous_dimension + 1) / 2) * heat_kernel_hgrad(g, 1.0, dilate(g, t**-0.5, p), 1)
        assert lhs == pytest.approx(rhs, rel=1e-3, abs=1e-9)


# boxes wide enough to hold p_5; the desk boxes clip its tails
@pytest.mark.parametrize("g,spec", [(euclidean(2), GridSpec.cube((16, 16), 128)), (HEISENBERG1, GridSpec.cube((16, 16, 32), 32))], ids=["R2", "H1"])
def test_lattice_kernel_normalised(g, spec):
    one = GridFunction(spec, np.zeros(spec.shape), g)
    centre = tuple(n // 2 for n in spec.shape)
    delta = np.zeros(spec.shape)
    delta[centre] = 1.0 / spec.cell_weight
    for t in (0.05, 0.5, 5.0):
        out = semigroup_apply(one.with_samples(delta), t)
        assert abs(integrate(out) - 1.0) <= 1e-3


@pytest.mark.parametrize("g,spec,w", [(euclidean(2), E2_BOX, (0.5, 0.5)), (HEISENBERG1, H1_BOX, (0.5, 0.5, 1.0))], ids=["R2", "H1"])
def test_mass_positivity_semigroup(g, spec, w):
    f = _bump(spec, g, w)
    a = semigroup_apply(f, 0.1)
    assert integrate(a) == pytest.approx(integrate(f), rel=1e-3)
    # positive up to the band-limiting ripple of the central Fourier engine
    assert a.samples.min() >= -1e-3 * a.samples.max()
    two = semigroup_apply(semigroup_apply(f, 0.2), 0.3)
    one = semigroup_apply(f, 0.5)
    rel = np.sum(np.abs(two.samples - one.samples)) / np.sum(np.abs(one.samples))
    assert rel <= 2e-2


def test_family_matches_single_applications():
    f = _bump(H1_BOX, HEISENBERG1, (0.5, 0.5, 1.0))
    ts = [0.1, 1.0]
    fam = heat_family(f, ts, j=None)
    for k, t in enumerate(ts):
        np.testing.assert_allclose(fam[k], semigroup_apply(f, t).samples, atol=1e-12)
    idx = np.array([[16, 16, 16], [10, 20, 5]])
    pts = heat_family(f, ts, j=1, index=idx)
    full = heat_family(f, ts, j=1)
    np.testing.assert_allclose(pts, full[:, idx[:, 0], idx[:, 1], idx[:, 2]], atol=1e-12)


def test_derivative_kernel_has_zero_integral():
    for g, spec in ((euclidean(2), E2_BOX), (HEISENBERG1, H1_BOX)):
        k = heat_lattice_kernel(spec, g, 0.5, j=1)
        vals = np.asarray(k.values)
        total = vals[..., 0].sum() if not g.is_euclidean else vals.sum()
        assert abs(total) * spec.cell_weight <= 1e-6


def test_table_is_cached_singleton():
    assert heisenberg_table() is heisenberg_table()
