"""Acceptance criteria 1-9; each prints one PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest, where
the lines are repeated in the terminal summary.
"""

import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shubin_trace.calculus import leibniz_product, leibniz_truncated, parametrix
from shubin_trace.estimates import check_symbol_estimates, default_estimate_grid
from shubin_trace.limits import brace_coefficients
from shubin_trace.oracle import oscillator_expansion_reference
from shubin_trace.poly import TermBundle
from shubin_trace.quadrature import PiMultiple
from shubin_trace.symbols import CutoffSpec, EllipticOperator, HomogeneousComponent, SymbolExpansion
from shubin_trace.trace import (
    QuadratureSpec,
    fit_constant_coefficients,
    log_coefficients,
    resolvent_trace_expansion,
    trace_samples,
)

from _operators import random_polynomial, symbols_agree_as_operators, xi_degree

RESULTS: list[str] = []
HO = EllipticOperator.harmonic_oscillator(1)
x, xi = TermBundle.variables(1)


def report(k: int, passed: bool, detail: str) -> bool:
    line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return passed


def _as_bundle(a: SymbolExpansion) -> TermBundle:
    out = TermBundle.zero(a.nvars)
    for c in a.components:
        if not c.is_zero():
            out = out + c.numerator
    return out


def criterion_1() -> bool:
    rng = random.Random(20240601)
    bad = 0
    for _ in range(200):
        n = rng.choice([1, 2])
        a, b = random_polynomial(rng, n, 4), random_polynomial(rng, n, 4)
        sa, sb = SymbolExpansion.from_bundle(a), SymbolExpansion.from_bundle(b)
        ab = _as_bundle(leibniz_truncated(sa, sb, sa.J + sb.J + 2 * xi_degree(a)))
        if not symbols_agree_as_operators(ab, a, b, xi_degree(a) + xi_degree(b)):
            bad += 1
    return report(1, bad == 0, f"Leibniz vs operator composition, 200 random symbols, {bad} mismatches (exact)")


def criterion_2() -> bool:
    ok = True
    for p0 in (-(x**2) - xi**2, -(x**2) - xi**2 - x):
        op = EllipticOperator.from_bundle(p0, 2)
        d = leibniz_truncated(op.resolvent_symbol(), parametrix(op, 8), 8)
        ok &= d.component(0).parts == {0: TermBundle.one(2)}
        ok &= all(d.component(j).is_zero() for j in range(1, 8))
    return report(2, ok, "parametrix defect (1, 0, ..., 0) exactly, J = 8, two operators")


def criterion_3() -> bool:
    J = 13
    bb = brace_coefficients(parametrix(HO, J), J)
    pb = brace_coefficients(HO.resolvent_symbol(), J)
    ok = True
    for l in range(12):
        s = TermBundle.zero(2)
        for j in range(l + 1):
            s = s + leibniz_product(bb[j], pb[l - j])
        ok &= s == (TermBundle.one(2) if l == 0 else TermBundle.zero(2))
    odd = all(bb[k].is_zero() for k in range(1, J, 2))
    return report(3, ok and odd, f"delta-convolution exact for l < 12 ({ok}); odd brace indices vanish ({odd})")


def criterion_4() -> bool:
    ok = True
    errs = []
    for N in (2, 3, 4):
        te = resolvent_trace_expansion(HO, None, N, 2, 4, fit=False)
        want = Fraction(1, 2 * (N - 1))
        err = abs(te.power_coeffs[0].value - float(want))
        errs.append(err)
        ok &= err <= 1e-9
        ok &= oscillator_expansion_reference(N, 1)[0][1] == want
    return report(4, ok, f"c_0 = 1/(2(N-1)), N = 2, 3, 4, max error {max(errs):.2e} (tol 1e-9); reference exact")


def criterion_5() -> bool:
    t0 = time.perf_counter()
    te = resolvent_trace_expansion(HO, None, 2, 6, 8)
    dt = time.perf_counter() - t0
    want = (0.5, 0.0, -1 / 6)
    tols = (1e-8, 1e-6, 1e-4)
    errs = [abs(te.lambda_coefficient(-k - 1) - w) for k, w in enumerate(want)]
    logs_zero = all(c.exact == PiMultiple.zero() and c.value == 0 for c in te.log_coeffs.values())
    ok = all(e <= t for e, t in zip(errs, tols)) and logs_zero and dt <= 300
    detail = ", ".join(f"{e:.1e}<={t:g}" for e, t in zip(errs, tols))
    return report(5, ok, f"lambda^-1..-3 errors {detail}; c' exactly 0 ({logs_zero}); {dt:.1f}s (budget 300s)")


def criterion_6() -> bool:
    c = HomogeneousComponent(2, {2: TermBundle.radial(-2, 2)}, HO.base, -6, -2)
    a = SymbolExpansion(-6, -2, (c,), CutoffSpec(), 1)
    exact = log_coefficients(a)
    ok_exact = exact == {0: PiMultiple(1, 0)}
    samples = [(mu, v) for mu, v, _ in trace_samples(a, QuadratureSpec())]
    fit = fit_constant_coefficients(samples, None, [(-4, 1), (-4, 0), (-6, 0), (-8, 0)])
    err = abs(fit.coeffs[(-4, 1)] - 1)
    return report(6, ok_exact and err <= 1e-3, f"exact c'_0 = {exact.get(0)}; fitted log coefficient error {err:.1e} (tol 1e-3)")


def criterion_7() -> bool:
    t1 = resolvent_trace_expansion(HO, None, 2, 6, 8, cutoff=CutoffSpec(0.5, 1.0))
    t2 = resolvent_trace_expansion(HO, None, 2, 6, 8, cutoff=CutoffSpec(1.0, 2.0))
    dc = max(abs(t1.power_coeffs[j].value - t2.power_coeffs[j].value) for j in t1.power_coeffs)
    dl = max((abs(t1.log_coeffs[l].value - t2.log_coeffs[l].value) for l in t1.log_coeffs), default=0.0)
    dcc = max(abs(t1.const_coeffs[l].value - t2.const_coeffs[l].value) for l in t1.const_coeffs)
    ok = dc < 1e-7 and dl < 1e-7 and dcc > 1e-3
    return report(7, ok, f"cutoff (1/2,1)->(1,2): max|dc_j| {dc:.1e}, max|dc'| {dl:.1e} (< 1e-7); max|dc''| {dcc:.2e} (> 1e-3)")


def criterion_8() -> bool:
    spec = QuadratureSpec.extended()
    te = resolvent_trace_expansion(HO, None, 2, 8, 8, spec)
    mus = np.array([float(m) for m, _, _ in te.samples])
    res = [abs(complex(v - te.model(m, min_exponent=-6, dtype=np.longdouble))) for m, v, _ in te.samples]
    slope_mu = np.polyfit(np.log(mus), np.log(res), 1)[0]
    slope = slope_mu / 2
    ok = abs(slope - (-4)) <= 0.5
    return report(8, ok, f"residual slope in lambda {slope:.2f}, first unmodeled exponent -4 (tol 0.5), extended precision")


def criterion_9() -> bool:
    b = parametrix(HO, 7)
    grid = default_estimate_grid()
    ratios, second = [], []
    for j, c in enumerate(b.components):
        if c.is_zero():
            ratios.append(0.0)
            second.append(0.0)
            continue
        ratios.append(check_symbol_estimates(c, -2 - j, -j, grid).max_ratio)
        second.append(check_symbol_estimates(c, -2 - j, -j, grid, max_order=2).max_ratio)
    ok = all(np.isfinite(r) and r <= 1e3 for r in ratios)
    info = ", ".join(f"{r:.3g}" for r in second)
    return report(
        9, ok, f"max ratios j<=6 (|alpha|+j<=1): {', '.join(f'{r:.3g}' for r in ratios)} (ceiling 1e3); order-2 info: {info}"
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 10)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
