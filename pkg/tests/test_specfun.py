import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite as nph
from scipy import special

from qphase.errors import ParameterError
from qphase.specfun import (
    MAX_ORDER,
    gauss_hermite,
    hermite,
    hermite_function_parts,
    hermite_scaled,
    laguerre,
    log_factorial,
)

SQRT_PI = math.sqrt(math.pi)


def test_hermite_small_values():
    assert hermite(0, 3.7) == 1.0
    assert hermite(1, 1.5) == 3.0
    assert hermite(3, 1.0) == -4.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 30), st.floats(-10, 10))
def test_hermite_matches_numpy_series(n, x):
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    ref = nph.hermval(x, coeffs)
    assert hermite(n, x) == pytest.approx(ref, rel=1e-10, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 29), st.floats(-10, 10))
def test_hermite_recurrence_and_parity(n, x):
    hn1, hn, hm1 = hermite(n + 1, x), hermite(n, x), hermite(n - 1, x)
    scale = max(abs(hn1), abs(2 * x * hn), abs(2 * n * hm1), 1.0)
    assert abs(hn1 - 2 * x * hn + 2 * n * hm1) <= 1e-9 * scale
    assert hermite(n, -x) == pytest.approx((-1) ** n * hn, rel=1e-12, abs=1e-300)


def test_hermite_array_input_keeps_shape():
    x = np.linspace(-2, 2, 7).reshape(7, 1)
    assert hermite(4, x).shape == (7, 1)


def test_hermite_rejects_negative_degree():
    with pytest.raises(ParameterError):
        hermite(-1, 0.0)
    with pytest.raises(ParameterError):
        hermite(1.5, 0.0)


def test_hermite_scaled_values():
    assert hermite_scaled(0, 0.0) == pytest.approx(math.pi**-0.25, rel=1e-15)
    assert hermite_scaled(1, 0.0) == 0.0


@pytest.mark.parametrize("n", [0, 1, 5, 10])
def test_hermite_scaled_matches_naive_product(n):
    x = np.linspace(-6, 6, 41)
    naive = np.exp(-x**2 / 2) * special.eval_hermite(n, x) / math.sqrt(2**n * math.factorial(n) * SQRT_PI)
    assert np.allclose(hermite_scaled(n, x), naive, rtol=1e-12, atol=1e-15)


def test_hermite_scaled_large_degree_is_finite():
    x = np.linspace(-50, 50, 2001)
    with np.errstate(all="raise"):
        vals = hermite_scaled(200, x)
    assert np.all(np.isfinite(vals))
    # outer lobe of psi_200 sits near sqrt(2n+1) ~ 20 with amplitude of order n**(-1/12)
    assert 0.05 < np.abs(vals).max() < 1.0


def test_hermite_function_parts_reassemble():
    x = np.array([-3.0, 0.3, 2.5])
    m, m_prev, s = hermite_function_parts(4, x)
    assert np.allclose(m * np.exp(s), hermite_scaled(4, x))
    assert np.allclose(m_prev * np.exp(s), hermite_scaled(3, x))


@pytest.mark.parametrize("m_deg,n_deg", [(0, 0), (0, 2), (3, 3), (4, 7), (10, 10)])
def test_orthonormality_by_quadrature(m_deg, n_deg):
    rule = gauss_hermite(m_deg + n_deg + 1)
    y = rule.nodes
    f = hermite_scaled(m_deg, y) * hermite_scaled(n_deg, y) * np.exp(y * y)
    assert float(np.sum(rule.weights * f)) == pytest.approx(float(m_deg == n_deg), abs=1e-10)


def test_laguerre_values():
    assert laguerre(0, 2.5) == 1.0
    assert laguerre(1, 4.0) == -3.0
    assert laguerre(2, 2.0) == pytest.approx(-1.0, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 30), st.floats(0, 40))
def test_laguerre_matches_scipy(n, x):
    ref = special.eval_laguerre(n, x)
    assert laguerre(n, x) == pytest.approx(ref, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("n", range(0, 60, 7))
def test_laguerre_at_origin(n):
    assert abs(laguerre(n, 0.0) - 1.0) <= 1e-14


def test_gauss_hermite_low_orders():
    one = gauss_hermite(1)
    assert one.nodes.tolist() == [0.0]
    assert one.weights[0] == pytest.approx(SQRT_PI, rel=1e-15)
    two = gauss_hermite(2)
    assert np.allclose(two.nodes, [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)
    assert np.allclose(two.weights, [SQRT_PI / 2, SQRT_PI / 2], rtol=1e-14)


@pytest.mark.parametrize("order", [3, 10, 37, 100, 150])
def test_gauss_hermite_matches_numpy(order):
    rule = gauss_hermite(order)
    x, w = nph.hermgauss(order)
    assert np.allclose(rule.nodes, x, rtol=0, atol=1e-12)
    assert np.allclose(rule.weights, w, rtol=1e-10, atol=0)


@pytest.mark.parametrize("order", [1, 2, 7, 64, 199, MAX_ORDER])
def test_gauss_hermite_rule_invariants(order):
    rule = gauss_hermite(order)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.allclose(rule.nodes, -rule.nodes[::-1], atol=1e-12)
    assert np.all(rule.weights > 0)
    assert float(rule.weights.sum()) == pytest.approx(SQRT_PI, rel=1e-10)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 40), st.data())
def test_gauss_hermite_exactness(order, data):
    k = data.draw(st.integers(0, 2 * order - 1))
    rule = gauss_hermite(order)
    got = float(np.sum(rule.weights * rule.nodes.astype(float) ** k))
    exact = 0.0 if k % 2 else math.gamma((k + 1) / 2)
    scale = max(exact, math.gamma((k + 2) / 2), 1.0)
    assert abs(got - exact) <= 1e-10 * scale


def test_gauss_hermite_order_bounds():
    for bad in (0, -3, MAX_ORDER + 1, 2.5):
        with pytest.raises(ParameterError):
            gauss_hermite(bad)


def test_quadrature_rule_is_immutable_and_scales():
    rule = gauss_hermite(12)
    with pytest.raises(ValueError):
        rule.nodes[0] = 1.0
    x, w = rule.scaled(2.0)
    # int exp(-4 x^2) dx = sqrt(pi)/2
    assert float(np.sum(w)) == pytest.approx(SQRT_PI / 2, rel=1e-14)
    assert rule.integrate(lambda y: y**2) == pytest.approx(SQRT_PI / 2, rel=1e-14)


def test_log_factorial():
    assert log_factorial(0) == 0.0
    assert log_factorial(5) == pytest.approx(math.log(120), rel=1e-14)
    assert log_factorial(20) == pytest.approx(math.log(2432902008176640000), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5000))
def test_log_factorial_against_log_sum(n):
    assert log_factorial(n) == pytest.approx(math.fsum(math.log(k) for k in range(2, n + 1)), rel=1e-12)


def test_log_factorial_large_argument():
    n = 10**6
    # Stirling series through the 1/(360 n^3) term is far below double rounding here
    stirling = n * math.log(n) - n + 0.5 * math.log(2 * math.pi * n) + 1 / (12 * n) - 1 / (360 * n**3)
    assert log_factorial(n) == pytest.approx(stirling, rel=1e-12)
