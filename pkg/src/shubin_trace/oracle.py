"""Spectral ground truth for the harmonic oscillator ``|x|**2 - Laplacian`` on R^n.

Eigenvalues are ``2k + n`` with multiplicity ``binom(k+n-1, n-1)``.  The
reference expansion of ``Tr (lambda + A)**-N`` is derived by Euler-Maclaurin
in ``s = lambda + n`` with exact rational arithmetic and then re-expanded in
powers of ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .poly import as_fraction

__all__ = [
    "OscillatorSpec",
    "oscillator_trace",
    "oscillator_partial_sums",
    "oscillator_expansion_reference",
    "bernoulli_numbers",
    "ComparisonRow",
    "OracleReport",
    "compare_expansions",
]


@dataclass(frozen=True)
class OscillatorSpec:
    n: int = 1

    def level(self, k: int) -> int:
        return 2 * k + self.n

    def multiplicity(self, k: int) -> int:
        return math.comb(k + self.n - 1, self.n - 1)


@lru_cache(maxsize=None)
def bernoulli_numbers(count: int) -> tuple[Fraction, ...]:
    """``B_0 .. B_{count-1}`` with ``B_1 = -1/2``."""
    B = [Fraction(1)]
    for k in range(1, count):
        B.append(-sum(math.comb(k + 1, j) * B[j] for j in range(k)) / Fraction(k + 1))
    return tuple(B)


def _mult_poly_in_v(n: int, shift) -> list:
    """Coefficients (ascending) of ``binom(t+n-1, n-1)`` as a polynomial in ``v = t + shift``."""
    # prod_{i=1}^{n-1} (t + i) / (n-1)!  with t = v - shift
    coeffs = [Fraction(1)] if not isinstance(shift, float) else [1.0]
    for i in range(1, n):
        c0 = i - shift
        new = [0 * coeffs[0]] * (len(coeffs) + 1)
        for p, c in enumerate(coeffs):
            new[p] += c * c0
            new[p + 1] += c
        coeffs = new
    f = math.factorial(n - 1)
    return [c / f for c in coeffs]


def _em_tail(lam: float, N: int, n: int, K0: int, terms: int = 6) -> float:
    """Euler-Maclaurin value of ``sum_{k >= K0} mult(k) (lam + n + 2k)**-N``."""
    a = (lam + n) / 2.0
    v0 = K0 + a
    # f(t) = mult(t) (2 (t + a))**-N = 2**-N sum_p c_p v**(p - N), v = t + a
    c = _mult_poly_in_v(n, float(a))
    scale = 2.0**-N
    integral = sum(cp * v0 ** (p - N + 1) / (N - p - 1) for p, cp in enumerate(c))
    f0 = sum(cp * v0 ** (p - N) for p, cp in enumerate(c))
    B = bernoulli_numbers(2 * terms + 2)
    corr = 0.0
    for i in range(1, terms + 1):
        r = 2 * i - 1
        deriv = 0.0
        for p, cp in enumerate(c):
            e = p - N
            ff = 1.0
            for q in range(r):
                ff *= e - q
            deriv += cp * ff * v0 ** (e - r)
        corr -= float(B[2 * i]) / math.factorial(2 * i) * deriv
    return scale * (integral + 0.5 * f0 + corr)


def oscillator_partial_sums(lam: float, N: int, n: int = 1, K: int = 10_000) -> np.ndarray:
    """Cumulative sums of ``mult(k) (lam + 2k + n)**-N`` for ``k < K``."""
    k = np.arange(K, dtype=float)
    mult = np.array([math.comb(int(i) + n - 1, n - 1) for i in range(K)], dtype=float)
    return np.cumsum(mult * (lam + 2 * k + n) ** (-float(N)))


def oscillator_trace(lam: float, N: int, n: int = 1, K: int = 10_000) -> float:
    """``Tr (lam + A)**-N``: ``K`` explicit terms plus an Euler-Maclaurin tail."""
    if N <= n:
        raise ValueError(f"Tr (lambda + A)^-N diverges for N <= n (N={N}, n={n})")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    vals = [math.comb(k + n - 1, n - 1) * (lam + 2 * k + n) ** (-N) for k in range(K)]
    return math.fsum(vals + [_em_tail(float(lam), N, n, K)])


def _rising(x: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= x + i
    return out


def oscillator_expansion_reference(N: int, K: int, n: int = 1) -> list[tuple[Fraction, Fraction]]:
    """First ``K`` terms ``[(exponent, coeff)]`` of ``Tr (lambda + A)**-N`` as ``lambda -> oo``.

    Exponents are ``n - N - k``.  Coefficients are exact rationals.
    """
    if N < 2 or N <= n:
        raise ValueError("need N >= 2 and N > n")
    # Sum_k f(k), f(t) = mult(t) (s + 2t)**-N, s = lambda + n.  Write mult(t) in u = s + 2t:
    # t = (u - s)/2, so each term is rational * s**a * u**(b).  Collect Laurent terms in s.
    # mult(t) = prod_{i=1}^{n-1} (t+i)/(n-1)! = prod (u - s + 2i) / (2**(n-1) (n-1)!)
    poly = {(0, 0): Fraction(1)}  # (power of u, power of s) -> coeff
    for i in range(1, n):
        new: dict = {}
        for (pu, ps), c in poly.items():
            for (du, ds, cc) in ((1, 0, 1), (0, 1, -1), (0, 0, 2 * i)):
                key = (pu + du, ps + ds)
                new[key] = new.get(key, 0) + c * cc
        poly = new
    norm = Fraction(1, 2 ** (n - 1) * math.factorial(n - 1))
    terms_needed = K + 2
    B = bernoulli_numbers(2 * terms_needed + 2)
    s_series: dict[int, Fraction] = {}  # power of s -> coeff
    for (pu, ps), c in poly.items():
        c = c * norm
        e = N - pu  # term c s**ps u**-e with u = s + 2t
        # integral_0^oo (s+2t)**-e dt = s**(1-e) / (2 (e-1))
        s_series[ps + 1 - e] = s_series.get(ps + 1 - e, 0) + c / (2 * (e - 1))
        # f(0)/2
        s_series[ps - e] = s_series.get(ps - e, 0) + c / 2
        # - sum B_2i/(2i)! f^(2i-1)(0), d^r/dt^r u**-e = (-2)**r (e)_r s**(-e-r)
        for i in range(1, terms_needed + 1):
            r = 2 * i - 1
            key = ps - e - r
            s_series[key] = s_series.get(key, 0) - B[2 * i] / math.factorial(2 * i) * c * (-2) ** r * _rising(e, r)
    # re-expand s**p = (lambda + n)**p = sum_k binom(p, k) n**k lambda**(p-k)
    top = n - N
    low = top - K + 1
    out: dict[int, Fraction] = {}
    for p, c in s_series.items():
        if c == 0:
            continue
        b = Fraction(1)
        for k in range(0, p - low + 1):
            if k:
                b = b * (p - k + 1) / k
            out[p - k] = out.get(p - k, 0) + c * b * Fraction(n) ** k
    if any(v != 0 for e, v in out.items() if e > top):
        raise ArithmeticError("re-expansion produced growing terms")
    return [(Fraction(e), out.get(e, Fraction(0))) for e in range(top, top - K, -1)]


@dataclass
class ComparisonRow:
    exponent: Fraction
    log_power: int
    engine: complex
    oracle: Fraction
    abs_error: float
    rel_error: float | None
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "exponent": str(self.exponent),
            "log_power": self.log_power,
            "engine": [self.engine.real, self.engine.imag],
            "oracle": str(self.oracle),
            "abs_error": self.abs_error,
            "rel_error": self.rel_error,
            "tolerance": self.tolerance,
            "verdict": "PASS" if self.passed else "FAIL",
        }


@dataclass
class OracleReport:
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {"verdict": "PASS" if self.passed else "FAIL", "rows": [r.to_dict() for r in self.rows]}

    def __str__(self) -> str:
        lines = []
        for r in self.rows:
            lines.append(
                f"lambda^{r.exponent}: engine {r.engine.real:+.12g} oracle {r.oracle} "
                f"err {r.abs_error:.3g} tol {r.tolerance:.1g} {'PASS' if r.passed else 'FAIL'}"
            )
        lines.append("overall " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def compare_expansions(engine, reference, tol) -> OracleReport:
    """Row-wise comparison of engine lambda-coefficients with exact references.

    ``engine`` is a :class:`TraceExpansion` or a list of ``(exponent, value)``;
    ``reference`` a list of ``(exponent, Fraction)``; ``tol`` a float or a
    per-row sequence.
    """
    if hasattr(engine, "lambda_view"):
        view = {(r["exponent"], r["log_power"]): r["value"] for r in engine.lambda_view()}
        exps = {e for e, _ in view}
    else:
        view = {(as_fraction(e), 0): complex(v) for e, v in engine}
        exps = {e for e, _ in view}
    tols = list(tol) if isinstance(tol, (list, tuple)) else [float(tol)] * len(reference)
    if len(tols) != len(reference):
        raise ValueError("one tolerance per reference row")
    rows = []
    for (e, ref), t in zip(reference, tols):
        e = as_fraction(e)
        if e not in exps:
            raise ValueError(f"engine expansion has no term at exponent {e}")
        val = complex(view[(e, 0)])
        err = abs(val - float(ref))
        rel = err / abs(float(ref)) if ref != 0 else None
        rows.append(ComparisonRow(e, 0, val, Fraction(ref), err, rel, float(t), err <= t))
        # log terms must vanish in the oracle
        if (e, 1) in view:
            lv = complex(view[(e, 1)])
            rows.append(ComparisonRow(e, 1, lv, Fraction(0), abs(lv), None, float(t), abs(lv) <= t))
    return OracleReport(rows)
