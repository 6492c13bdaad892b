import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shubin_trace.calculus import (
    EllipticityError,
    check_ellipticity,
    coefficient_polynomial,
    leibniz_product,
    leibniz_truncated,
    parametrix,
    symbol_power,
)
from shubin_trace.estimates import check_symbol_estimates
from shubin_trace.poly import GaussianRational, TermBundle
from shubin_trace.symbols import EllipticOperator, HomogeneousComponent, SymbolExpansion

from _operators import random_polynomial, symbols_agree_as_operators, xi_degree

x, xi = TermBundle.variables(1)
I = GaussianRational(0, 1)
HO = EllipticOperator.harmonic_oscillator(1)


def as_bundle(a: SymbolExpansion) -> TermBundle:
    out = TermBundle.zero(a.nvars)
    for c in a.components:
        if not c.is_zero():
            out = out + c.numerator
    return out


def compose(a: TermBundle, b: TermBundle) -> TermBundle:
    sa, sb = SymbolExpansion.from_bundle(a), SymbolExpansion.from_bundle(b)
    K = sa.J + sb.J + 2 * xi_degree(a)
    return as_bundle(leibniz_truncated(sa, sb, K))


def test_coefficient_polynomial_examples():
    assert coefficient_polynomial(Fraction(7, 3), 0, 2) == TermBundle.one(2)
    assert coefficient_polynomial(5, 1, 2).is_zero()
    assert coefficient_polynomial(-4, 2, 2) == TermBundle.radial(2, 2, -2)
    assert coefficient_polynomial(-4, 4, 2) == TermBundle.radial(4, 2, 3)


@given(st.fractions(min_value=-6, max_value=6, max_denominator=3), st.integers(0, 7))
def test_coefficient_polynomial_matches_taylor_series(rho, ell):
    import mpmath

    z2 = 0.7
    f = lambda t: (1 + t * t * z2) ** (float(rho) / 2)
    want = mpmath.taylor(f, 0, ell)[ell]
    got = coefficient_polynomial(rho, ell, 2).evaluate((np.sqrt(z2), 0.0))
    assert got.real == pytest.approx(float(want), abs=1e-10)


def test_leibniz_examples():
    assert compose(xi, x) == x * xi - I
    assert compose(x, xi) == x * xi
    assert compose(xi**2, x**2) == x**2 * xi**2 - x * xi * (4 * I) - 2


def test_leibniz_matches_operator_composition_examples():
    for a, b in [(xi, x), (xi**2, x**2), (x * xi**3, xi * x**2 + x)]:
        assert symbols_agree_as_operators(compose(a, b), a, b, 8)


@given(st.integers(0, 10**6))
def test_differential_exactness(seed):
    rng = random.Random(seed)
    n = rng.choice([1, 2])
    a, b = random_polynomial(rng, n, 3), random_polynomial(rng, n, 3)
    ab = compose(a, b)
    assert ab == leibniz_product(a, b)
    assert symbols_agree_as_operators(ab, a, b, xi_degree(ab) + 1)


@given(st.integers(0, 10**6))
def test_associativity_under_truncation(seed):
    rng = random.Random(seed)
    a, b, c = (SymbolExpansion.from_bundle(random_polynomial(rng, 1, 2, 3)) for _ in range(3))
    K = 5
    left = leibniz_truncated(leibniz_truncated(a, b, K), c, K)
    right = leibniz_truncated(a, leibniz_truncated(b, c, K), K)
    for j in range(K):
        assert left.component(j) == right.component(j)


@given(st.integers(0, 10**6))
def test_principal_multiplicativity(seed):
    rng = random.Random(seed)
    a = SymbolExpansion.from_bundle(random_polynomial(rng, 1, 3))
    b = SymbolExpansion.from_bundle(random_polynomial(rng, 1, 3))
    ab = leibniz_truncated(a, b, 3)
    assert ab.component(0).numerator == a.component(0).numerator * b.component(0).numerator


def test_leibniz_rejects_mismatched_bases():
    from shubin_trace.symbols import BaseMismatchError

    b1 = parametrix(HO, 2)
    other = EllipticOperator.from_bundle(-(x**2) - xi**2 * 2, 2)
    b2 = parametrix(other, 2)
    with pytest.raises(BaseMismatchError):
        leibniz_truncated(b1, b2, 2)


def test_ellipticity_examples():
    assert check_ellipticity(HO).accepted
    bad = EllipticOperator.from_bundle(x**2 + xi**2, 2)
    cert = check_ellipticity(bad)
    assert not cert.accepted
    assert cert.witness_value.real > 0
    with pytest.raises(EllipticityError):
        parametrix(bad, 3)
    assert check_ellipticity(EllipticOperator.from_bundle((x**2 + xi**2) * I, 2)).accepted


def test_ellipticity_certificate_records_distance():
    cert = check_ellipticity(HO)
    assert cert.min_distance == pytest.approx(1.0)
    assert cert.n_samples > 0


def test_parametrix_examples():
    b = parametrix(HO, 5)
    base = HO.base
    assert b.component(0) == HomogeneousComponent(2, {1: TermBundle.one(2)}, base, -2, 0)
    assert b.component(1).is_zero()
    # b_2 = -4i x xi R^-3 (the opposite sign is inconsistent with the defect identity)
    assert b.component(2) == HomogeneousComponent(2, {3: x * xi * (-4 * I)}, base, -4, -2)
    r2 = x**2 + xi**2
    want4 = HomogeneousComponent(
        2, {3: TermBundle.constant(-2, 2), 4: r2 * 8, 5: x**2 * xi**2 * (-48)}, base, -6, -4
    )
    assert b.component(4) == want4


@pytest.mark.parametrize(
    "p0",
    [
        -(x**2) - xi**2,
        -(x**2) - xi**2 - x,
        -(x**2) - xi**2 * 2 + x * xi + xi * I,
    ],
    ids=["oscillator", "shifted", "mixed"],
)
def test_parametrix_defect(p0):
    op = EllipticOperator.from_bundle(p0, 2)
    J = 8
    b = parametrix(op, J)
    defect = leibniz_truncated(op.resolvent_symbol(), b, J)
    assert defect.component(0).parts == {0: TermBundle.one(2)}
    for j in range(1, J):
        assert defect.component(j).is_zero(), j


def test_parametrix_defect_two_dimensions():
    op = EllipticOperator.harmonic_oscillator(2)
    b = parametrix(op, 5)
    defect = leibniz_truncated(op.resolvent_symbol(), b, 5)
    assert defect.component(0).parts == {0: TermBundle.one(4)}
    assert all(defect.component(j).is_zero() for j in range(1, 5))


def test_symbol_power_examples():
    b = parametrix(HO, 4)
    assert symbol_power(b, 1, 4).components == b.components
    b0 = b.truncate(1)
    sq = symbol_power(b0, 2, 1)
    assert sq.component(0) == HomogeneousComponent(2, {2: TermBundle.one(2)}, HO.base, -4, 0)
    assert symbol_power(b, 2, 4).component(1).is_zero()


def test_parametrix_components_satisfy_symbol_estimates():
    b = parametrix(HO, 7)
    for j, c in enumerate(b.components):
        if c.is_zero():
            continue
        rep = check_symbol_estimates(c, -2 - j, -j)
        assert rep.passed, (j, rep.max_ratio)
