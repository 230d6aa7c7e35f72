import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsdtiga.quadrature import QuadratureRule, gauss_legendre, rule_for


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6, 8])
def test_gauss_integrates_monomials_exactly(n):
    x, w = gauss_legendre(n, 0.0, 2.0)
    for k in range(2 * n):
        assert np.isclose(w @ x**k, 2.0 ** (k + 1) / (k + 1), rtol=1e-13, atol=0)


def test_weights_sum_to_interval_length():
    x, w = gauss_legendre(5, -3.0, 4.5)
    assert np.isclose(w.sum(), 7.5, rtol=1e-14)
    assert np.all((x > -3.0) & (x < 4.5))


def test_rule_for_uses_p_plus_one_points():
    r = rule_for(3, 2)
    assert (r.points1.size, r.points2.size) == (4, 3)
    assert r.size == 12


def test_tensor_rule_integrates_bivariate_polynomials():
    r = QuadratureRule(3, 4)
    P, W = r.tensor()
    # int_{-1}^{1} int_{-1}^{1} x^4 y^6
    assert np.isclose(np.sum(W * P[:, 0] ** 4 * P[:, 1] ** 6), (2 / 5) * (2 / 7), rtol=1e-13)


@pytest.mark.parametrize("p", [0, -1])
def test_rule_for_rejects_low_degree(p):
    with pytest.raises(ValueError):
        rule_for(p, 2)


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.floats(0.1, 10), st.integers(1, 7))
def test_affine_map_preserves_exactness(a, length, n):
    b = a + length
    x, w = gauss_legendre(n, a, b)
    k = 2 * n - 1
    exact = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    assert np.isclose(w @ x**k, exact, rtol=1e-9, atol=1e-9 * max(1.0, abs(exact)))
