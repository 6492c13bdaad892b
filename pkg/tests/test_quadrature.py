import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from shubin_trace.poly import GeneralizedMonomial, GaussianRational, TermBundle
from shubin_trace.quadrature import (
    PiMultiple,
    QuadratureError,
    gauss_kronrod,
    gk15_tables,
    sphere_integral_bundle,
    sphere_integral_exact,
    sphere_monte_carlo,
    sphere_rule,
)


def test_sphere_integral_examples():
    assert complex(sphere_integral_exact((0, 0), 2)) == pytest.approx(2 * math.pi)
    assert sphere_integral_exact((1, 0), 2) == PiMultiple.zero()
    assert sphere_integral_exact((2, 2), 2) == PiMultiple(Fraction(1, 4), 2)


def test_radial_factor_is_ignored_on_sphere():
    t = GeneralizedMonomial(GaussianRational(3), (2, 0), Fraction(-5, 2))
    assert sphere_integral_exact(t, 2) == PiMultiple(3, 2)


def test_sphere_integral_is_rational_for_even_dimension():
    assert sphere_integral_exact((2, 0, 2, 4), 4).half_power % 2 == 0
    assert sphere_integral_exact((0, 0, 0), 3) == PiMultiple(4, 2)


@given(st.lists(st.integers(0, 4), min_size=2, max_size=4))
def test_sphere_integral_closed_form(alpha):
    m = len(alpha)
    got = complex(sphere_integral_exact(tuple(alpha), m)).real
    if any(a % 2 for a in alpha):
        assert got == 0
        return
    want = 2 * math.prod(mpmath.gamma((a + 1) / 2) for a in alpha) / mpmath.gamma((sum(alpha) + m) / 2)
    assert got == pytest.approx(float(want), rel=1e-14)


@given(st.lists(st.integers(0, 4), min_size=2, max_size=4), st.integers(0, 2**16))
def test_exact_agrees_with_monte_carlo(alpha, seed):
    m = len(alpha)
    exact = complex(sphere_integral_exact(tuple(alpha), m)).real
    mean, se = sphere_monte_carlo(tuple(alpha), m, samples=20_000, seed=seed)
    assert abs(mean - exact) <= 4 * se + 1e-12


@pytest.mark.parametrize("m", [2, 3, 4])
def test_sphere_rule_integrates_monomials(m):
    nodes, weights = sphere_rule(m, 32)
    assert np.allclose(np.linalg.norm(nodes, axis=1), 1)
    rng = np.random.default_rng(m)
    for _ in range(10):
        alpha = tuple(int(a) for a in rng.integers(0, 5, size=m))
        quad = float(np.sum(weights * np.prod(nodes ** np.array(alpha), axis=1)))
        assert quad == pytest.approx(complex(sphere_integral_exact(alpha, m)).real, abs=1e-12)


def test_sphere_integral_bundle_sums_terms():
    x, xi = TermBundle.variables(1)
    assert sphere_integral_bundle(x**2 + xi**2) == PiMultiple(2, 2)


def test_gk15_gauss_part_matches_legendre():
    xk, wk, wg = gk15_tables()
    gx, gw = np.polynomial.legendre.leggauss(7)
    mask = wg != 0
    assert np.allclose(np.sort(xk[mask]), np.sort(gx), atol=1e-15)
    assert np.allclose(wg[mask], gw[np.argsort(gx)][np.argsort(np.argsort(xk[mask]))], atol=1e-15)
    assert wk.sum() == pytest.approx(2.0, abs=1e-15)


@pytest.mark.parametrize("dtype", [np.float64, np.longdouble])
def test_kronrod_exact_to_degree_22(dtype):
    xk, wk, wg = gk15_tables(dtype)
    for k in range(0, 23):
        want = 0.0 if k % 2 else 2.0 / (k + 1)
        assert float(np.sum(wk * xk**k)) == pytest.approx(want, abs=1e-15)
    for k in range(0, 14):
        want = 0.0 if k % 2 else 2.0 / (k + 1)
        assert float(np.sum(wg * xk**k)) == pytest.approx(want, abs=1e-15)


def test_kronrod_nodes_against_mpmath():
    # Gauss nodes are roots of P_7; the extra nodes are roots of E_8 with P_7 E_8 orthogonal to t**k, k < 8
    xk, _, wg = gk15_tables()
    gauss = [float(v) for v in xk[wg != 0]]
    extra = [mpmath.mpf(float(v)) for v in xk[wg == 0]]
    assert len(gauss) == 7 and len(extra) == 8
    assert all(abs(mpmath.legendre(7, v)) < 1e-14 for v in gauss)
    E8 = lambda t: mpmath.fprod(t - v for v in extra)
    for k in range(8):
        val = mpmath.quad(lambda t: mpmath.legendre(7, t) * E8(t) * t**k, [-1, 1])
        assert abs(val) < 1e-14


def test_gauss_kronrod_integrates_endpoint_singularity():
    res = gauss_kronrod(lambda u: u ** -0.5, 0.0, 1.0, 1e-12, 1e-12)
    assert complex(res.value).real == pytest.approx(2.0, rel=1e-10)


def test_gauss_kronrod_semi_infinite_substitution():
    # int_0^oo (1 + r**2)**-1 dr = pi/2 with u = 1/(1+r)
    def f(u):
        r = (1 - u) / u
        return (1 + r * r) ** -1 / (u * u)

    res = gauss_kronrod(f, 0.0, 1.0, 1e-13, 1e-13)
    assert complex(res.value).real == pytest.approx(math.pi / 2, rel=1e-12)


def test_gauss_kronrod_complex_and_breakpoints():
    f = lambda t: np.where(t < 0.3, 1.0, 2.0) * np.exp(1j * t)
    res = gauss_kronrod(f, 0.0, 1.0, 1e-13, 1e-13, breakpoints=(0.3,))
    want = (np.exp(0.3j) - 1) / 1j + 2 * (np.exp(1j) - np.exp(0.3j)) / 1j
    assert abs(res.value - want) < 1e-12


def test_gauss_kronrod_longdouble_beats_double():
    f = lambda t: np.exp(t)
    res = gauss_kronrod(f, 0, 1, 1e-30, 1e-18, dtype=np.longdouble)
    with mpmath.workdps(30):
        assert abs(mpmath.mpf(str(np.real(res.value))) - (mpmath.e - 1)) < 1e-17


def test_gauss_kronrod_reports_failure():
    with pytest.raises(QuadratureError):
        gauss_kronrod(lambda t: np.sin(1 / t) / t, 1e-9, 1.0, 1e-15, 1e-15, limit=20)


def test_gauss_kronrod_deterministic():
    f = lambda t: np.log(t) * np.cos(7 * t)
    a = gauss_kronrod(f, 0, 1)
    b = gauss_kronrod(f, 0, 1)
    assert a.value == b.value and a.error == b.error
