import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from subriesz.group import (
    HEISENBERG1,
    dilate,
    euclidean,
    homogeneous_norm,
    horizontal_coefficients,
    inverse,
    multiply,
    parse_group,
    translation_jacobian_det,
)

coord = st.floats(-5, 5, allow_nan=False)
h1_point = arrays(np.float64, 3, elements=coord)
GROUPS = [euclidean(1), euclidean(2), euclidean(3), HEISENBERG1]


def test_descriptor_dimensions():
    assert HEISENBERG1.homogeneous_dimension == 4
    assert HEISENBERG1.horizontal_count == 2
    for d in (1, 2, 3):
        g = euclidean(d)
        assert g.homogeneous_dimension == d == g.horizontal_count


def test_parse_group():
    assert parse_group("heisenberg1") is HEISENBERG1
    assert parse_group("euclidean:3").topological_dimension == 3
    with pytest.raises(ValueError):
        parse_group("sl2")


def test_heisenberg_law_example():
    np.testing.assert_allclose(multiply(HEISENBERG1, [1, 0, 0], [0, 1, 0]), [1, 1, 0.5])
    np.testing.assert_allclose(inverse(HEISENBERG1, [1, 2, 3]), [-1, -2, -3])
    np.testing.assert_allclose(dilate(HEISENBERG1, 2.0, [1, 1, 1]), [2, 2, 4])
    assert homogeneous_norm(HEISENBERG1, [0, 0, 1]) == pytest.approx(2.0)
    assert homogeneous_norm(HEISENBERG1, [0, 0, 0]) == 0.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        multiply(HEISENBERG1, [1, 2], [0, 0, 0])


def test_bad_dilation():
    with pytest.raises(ValueError):
        dilate(HEISENBERG1, 0.0, [1, 1, 1])


def test_associativity_bulk(rng):
    p, q, r = rng.uniform(-5, 5, (3, 1000, 3))
    lhs = multiply(HEISENBERG1, multiply(HEISENBERG1, p, q), r)
    rhs = multiply(HEISENBERG1, p, multiply(HEISENBERG1, q, r))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


@given(h1_point, h1_point)
def test_inverse_and_identity(p, q):
    g = HEISENBERG1
    np.testing.assert_allclose(multiply(g, p, inverse(g, p)), 0.0, atol=1e-12)
    np.testing.assert_allclose(multiply(g, p, np.zeros(3)), p, atol=0)
    # (pq)^-1 = q^-1 p^-1
    np.testing.assert_allclose(inverse(g, multiply(g, p, q)), multiply(g, inverse(g, q), inverse(g, p)), atol=1e-12)


@given(h1_point, st.floats(0.1, 10), st.floats(0.1, 10))
def test_dilations(p, r, s):
    g = HEISENBERG1
    np.testing.assert_allclose(dilate(g, r, dilate(g, s, p)), dilate(g, r * s, p), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(dilate(g, 1.0, p), p)
    # dilations are automorphisms
    q = np.array([0.3, -1.2, 0.7])
    np.testing.assert_allclose(dilate(g, r, multiply(g, p, q)), multiply(g, dilate(g, r, p), dilate(g, r, q)), rtol=1e-12, atol=1e-10)


@given(h1_point, st.floats(0.1, 10))
def test_gauge_homogeneous_and_symmetric(p, r):
    g = HEISENBERG1
    n = homogeneous_norm(g, p)
    assert homogeneous_norm(g, dilate(g, r, p)) == pytest.approx(r * n, rel=1e-12, abs=1e-300)
    assert homogeneous_norm(g, inverse(g, p)) == pytest.approx(n, rel=1e-14)


@pytest.mark.parametrize("g", GROUPS, ids=str)
def test_translation_preserves_volume(g, rng):
    for q in rng.uniform(-3, 3, (20, g.topological_dimension)):
        assert translation_jacobian_det(g, q) == pytest.approx(1.0, abs=1e-12)


def test_dilation_scales_volume():
    # a box maps to a box with side lengths scaled by r^{e_i}
    g = HEISENBERG1
    r = 1.7
    corner = dilate(g, r, [1.0, 1.0, 1.0])
    assert np.prod(corner) == pytest.approx(r**g.homogeneous_dimension)


def test_horizontal_fields_match_law(rng):
    # X_j f(p) = d/ds f(p exp(s e_j)) at s = 0, tested on the coordinate functions
    g = HEISENBERG1
    p = rng.uniform(-2, 2, (5, 3))
    coeff = horizontal_coefficients(g, p)
    h = 1e-6
    for j in range(2):
        e = np.zeros(3)
        e[j] = h
        fd = (multiply(g, p, e) - multiply(g, p, -e)) / (2 * h)
        np.testing.assert_allclose(coeff[..., j, :], fd, atol=1e-8)
