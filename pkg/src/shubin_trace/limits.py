"""Expansion of symbols in powers of mu and the two limit-coefficient families."""

from __future__ import annotations

import math
from fractions import Fraction

from .calculus import coefficient_polynomial
from .poly import TermBundle, as_fraction
from .symbols import HomogeneousComponent, MuEntry, MuExpansion, SymbolExpansion

__all__ = [
    "mu_series",
    "symbol_mu_series",
    "brace_coefficients",
    "b_matrix",
    "bracket_coefficients",
    "brace_to_bracket",
    "bracket_to_brace",
    "PARAMETRIX_BRACE_SIGN_NOTE",
]

PARAMETRIX_BRACE_SIGN_NOTE = (
    "brace coefficients of the resolvent parametrix at indices d*l are computed as +p0^{#l}, "
    "the sign forced by the delta-convolution identity for p = mu^d - p0; the alternating "
    "sign (-1)^l p0^{#l} is not used"
)


def _rising_over_factorial(M: int, k: int) -> Fraction:
    """``M (M+1) .. (M+k-1) / k!``, the coefficient of ``w**k`` in ``(1-w)**-M``."""
    out = Fraction(1)
    for i in range(k):
        out = out * (M + i) / (i + 1)
    return out


def mu_series(c: HomogeneousComponent, L) -> MuExpansion:
    """Exact ``a(z, mu) = sum_{l < L} q_l(z) mu**(deg - reg - l) + remainder``.

    Uses ``R**-M = sum_k binom(M+k-1, k) P**k mu**(-d(M+k))``.  The level of a
    term is ``l = deg - reg + d(M+k)``, so ``q_l`` is homogeneous of degree
    ``reg + l``.
    """
    L = as_fraction(L)
    shift = c.degree - c.reg_index
    rem = (shift - L, c.reg_index + L)
    if c.is_zero():
        return MuExpansion((), rem[0], rem[1], c.degree)
    levels: dict[Fraction, TermBundle] = {}
    d = c.base.d if c.base is not None else 0
    for M, num in sorted(c.parts.items()):
        if M != 0 and d == 0:
            raise ValueError("denominator power without base")
        k = 0
        Pk = TermBundle.one(c.nvars)
        while True:
            ell = shift + d * (M + k)
            if ell >= L:
                break
            if M <= 0 and k > -M:
                break
            coef = _rising_over_factorial(M, k)
            if ell < 0:
                if coef:
                    raise ValueError(
                        f"component grows faster than its regularity index allows (level {ell} < 0)"
                    )
            elif coef:
                term = (num * Pk).scale(coef)
                levels[ell] = levels[ell] + term if ell in levels else term
            if d == 0:
                break
            k += 1
            Pk = Pk * c.base.principal
    # mu exponent of level l is (deg - reg) - l
    entries = tuple(MuEntry(ell, q, shift - ell) for ell, q in sorted(levels.items()) if not q.is_zero())
    return MuExpansion(entries, rem[0], rem[1], c.degree)


def symbol_mu_series(a: SymbolExpansion, L) -> list[MuExpansion]:
    """``mu_series`` of every component of ``a``."""
    return [mu_series(c, L) for c in a.components]


def brace_coefficients(a: SymbolExpansion, L: int) -> list[TermBundle]:
    """Coefficients of ``mu**(d - nu - k)``, ``k < L``, summed over all components."""
    out = [TermBundle.zero(a.nvars) for _ in range(L)]
    for c in a.components:
        for e in mu_series(c, L):
            if e.ell.denominator != 1:
                raise ValueError("non-integer brace index")
            out[int(e.ell)] = out[int(e.ell)] + e.symbol
    return out


def b_matrix(d_minus_nu, L: int, m: int) -> list[list[TermBundle]]:
    """Lower triangular ``b_{kl} = p_{d-nu-l, k-l}``."""
    dn = as_fraction(d_minus_nu)
    return [
        [coefficient_polynomial(dn - l, k - l, m) if l <= k else TermBundle.zero(m) for l in range(L)]
        for k in range(L)
    ]


def bracket_to_brace(bracket: list[TermBundle], d_minus_nu, m: int) -> list[TermBundle]:
    B = b_matrix(d_minus_nu, len(bracket), m)
    out = []
    for k in range(len(bracket)):
        s = TermBundle.zero(m)
        for l in range(k + 1):
            s = s + B[k][l] * bracket[l]
        out.append(s)
    return out


def brace_to_bracket(brace: list[TermBundle], d_minus_nu, m: int) -> list[TermBundle]:
    """Forward substitution; the diagonal of ``B`` is 1."""
    B = b_matrix(d_minus_nu, len(brace), m)
    out: list[TermBundle] = []
    for k in range(len(brace)):
        s = brace[k]
        for l in range(k):
            s = s - B[k][l] * out[l]
        out.append(s)
    return out


def bracket_coefficients(a: SymbolExpansion, L: int) -> list[TermBundle]:
    return brace_to_bracket(brace_coefficients(a, L), a.order - a.reg, a.nvars)
