"""Leibniz product, ellipticity test and resolvent parametrix."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import GaussianRational, TermBundle, as_fraction
from .symbols import (
    EllipticOperator,
    HomogeneousComponent,
    SymbolExpansion,
    _merge_base,
)

__all__ = [
    "coefficient_polynomial",
    "generalized_binomial",
    "multi_indices",
    "leibniz_truncated",
    "leibniz_product",
    "EllipticityCertificate",
    "EllipticityError",
    "check_ellipticity",
    "parametrix",
    "symbol_power",
]


def generalized_binomial(x: Fraction, k: int) -> Fraction:
    """``binom(x, k)`` for rational ``x``."""
    out = Fraction(1)
    for i in range(k):
        out = out * (x - i) / (i + 1)
    return out


def coefficient_polynomial(rho, ell: int, m: int) -> TermBundle:
    """Taylor coefficient of ``t -> (1 + t**2 |z|**2)**(rho/2)`` at order ``ell``."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if ell % 2:
        return TermBundle.zero(m)
    k = ell // 2
    return TermBundle.radial(2 * k, m, generalized_binomial(as_fraction(rho) / 2, k))


def multi_indices(n: int, order: int):
    """All ``alpha`` in ``N_0**n`` with ``|alpha| = order``, lexicographic."""
    if n == 1:
        yield (order,)
        return
    for head in range(order, -1, -1):
        for tail in multi_indices(n - 1, order - head):
            yield (head,) + tail


def _alpha_factorial(alpha) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


class _DerivativeCache:
    """Memoized ``d_xi**alpha`` (or ``D_x**alpha``) of the components of a symbol."""

    def __init__(self, symbol: SymbolExpansion, kind: str):
        self.symbol = symbol
        self.kind = kind
        self.n = symbol.n
        self.offset = self.n if kind == "d" else 0
        self.cache: dict = {}

    def get(self, k: int, alpha: tuple) -> HomogeneousComponent:
        key = (k, alpha)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if not any(alpha):
            out = self.symbol.component(k)
        else:
            i = max(i for i, a in enumerate(alpha) if a)
            lower = list(alpha)
            lower[i] -= 1
            prev = self.get(k, tuple(lower))
            out = prev if prev.is_zero() else prev.differentiate(self.offset + i, self.kind)
            if prev.is_zero():
                out = HomogeneousComponent.zero(prev.nvars, prev.degree - 1, prev.reg_index - 1, prev.base)
        self.cache[key] = out
        return out


def _xi_degree(symbol: SymbolExpansion) -> int | None:
    """Maximal total xi-degree if every component is polynomial in xi, else None."""
    n = symbol.n
    best = 0
    for c in symbol.components:
        for M, num in c.parts.items():
            if M != 0 or not num.is_polynomial:
                return None
            best = max(best, sum(num.max_exponents()[n:]))
    return best


def _leibniz_component(da: _DerivativeCache, db: _DerivativeCache, j: int, order, reg, skip=None):
    """Component ``j`` of ``a # b``; ``skip(k, l, alpha)`` drops selected terms."""
    n = da.n
    nv = 2 * n
    total = HomogeneousComponent.zero(nv, order - j, reg - j, _merge_base(da.symbol.base, db.symbol.base))
    for s in range(j // 2 + 1):
        for k in range(j - 2 * s + 1):
            l = j - 2 * s - k
            if da.symbol.component(k).is_zero() or db.symbol.component(l).is_zero():
                continue
            for alpha in multi_indices(n, s):
                if skip is not None and skip(k, l, alpha):
                    continue
                fa = da.get(k, alpha)
                if fa.is_zero():
                    continue
                fb = db.get(l, alpha)
                if fb.is_zero():
                    continue
                term = fa * fb
                if s:
                    term = term.scale(Fraction(1, _alpha_factorial(alpha)))
                total = total + term
    return total.with_reg_index(reg - j)


def leibniz_truncated(a: SymbolExpansion, b: SymbolExpansion, K: int) -> SymbolExpansion:
    """Components ``j < K`` of ``a # b`` (left symbol calculus).

    Component ``j`` collects ``(1/alpha!) d_xi**alpha a_k * D_x**alpha b_l`` over
    ``k + l + 2|alpha| = j``.  ``K`` is capped by the truncation depth of
    operands that are not known to be exact.
    """
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    _merge_base(a.base, b.base)
    cap = K
    if not a.exact:
        cap = min(cap, a.J)
    if not b.exact:
        cap = min(cap, b.J)
    order = a.order + b.order
    reg = a.reg + b.reg
    da = _DerivativeCache(a, "d")
    db = _DerivativeCache(b, "D")
    comps = tuple(_leibniz_component(da, db, j, order, reg) for j in range(cap))
    exact = False
    if a.exact and b.exact:
        xd = _xi_degree(a)
        if xd is not None and cap >= a.J + b.J - 1 + 2 * xd:
            exact = True
    cutoff = a.cutoff if a.cutoff is not None else b.cutoff
    return SymbolExpansion(order, reg, comps, cutoff, a.n, exact)


def leibniz_product(a: TermBundle, b: TermBundle, max_order: int = 64) -> TermBundle:
    """Full ``a # b`` of mu-independent bundles; the series must terminate."""
    if a.nvars != b.nvars:
        raise ValueError("variable count mismatch")
    n = a.nvars // 2
    total = a * b
    da = {(0,) * n: a}
    db = {(0,) * n: b}
    for s in range(1, max_order + 1):
        nda, ndb = {}, {}
        alive = False
        for alpha in multi_indices(n, s):
            i = max(i for i, v in enumerate(alpha) if v)
            lower = list(alpha)
            lower[i] -= 1
            lower = tuple(lower)
            fa = da[lower].differentiate(n + i, "d") if not da[lower].is_zero() else da[lower]
            fb = db[lower].differentiate(i, "D") if not db[lower].is_zero() else db[lower]
            nda[alpha], ndb[alpha] = fa, fb
            if not fa.is_zero() and not fb.is_zero():
                alive = True
                total = total + (fa * fb).scale(Fraction(1, _alpha_factorial(alpha)))
        da, db = nda, ndb
        if not alive and (all(v.is_zero() for v in da.values()) or all(v.is_zero() for v in db.values())):
            return total
    raise ValueError("Leibniz series did not terminate within max_order")


class EllipticityError(ValueError):
    """The principal symbol comes within tolerance of the closed half-line [0, inf)."""

    def __init__(self, certificate: "EllipticityCertificate"):
        self.certificate = certificate
        w = certificate.witness
        super().__init__(
            f"ellipticity rejected: p0^(d)({[round(float(v), 6) for v in w]}) = {certificate.witness_value:.6g} "
            f"is within {certificate.eps:g} of [0, inf)"
        )


@dataclass(frozen=True)
class EllipticityCertificate:
    accepted: bool
    min_distance: float
    witness: tuple
    witness_value: complex
    n_samples: int
    eps: float

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "min_distance": self.min_distance,
            "witness": list(self.witness),
            "witness_value": [self.witness_value.real, self.witness_value.imag],
            "n_samples": self.n_samples,
            "eps": self.eps,
        }


def sphere_samples(m: int, density: int = 720, n_random: int = 4096, seed: int = 0) -> np.ndarray:
    """Deterministic sample of ``S^{m-1}``: structured grid plus seeded random points."""
    from .quadrature import sphere_rule

    nodes, _ = sphere_rule(m, density if m == 2 else max(8, density // 24))
    if m == 2:
        return nodes
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_random, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.concatenate([nodes, g])


def check_ellipticity(
    p0: EllipticOperator, density: int = 720, eps: float = 1e-9, seed: int = 0, raise_on_reject: bool = False
) -> EllipticityCertificate:
    """Sampled test that ``p0^(d)`` avoids ``[0, inf)`` on the unit sphere.

    Sampling cannot prove the condition; the certificate is advisory.
    """
    pts = sphere_samples(p0.nvars, density, seed=seed)
    from .poly import BundleEvaluator

    re, im = BundleEvaluator(p0.principal)(pts)
    ok = (np.abs(im) > eps) | (re < -eps)
    dist = np.where(re >= 0, np.abs(im), np.hypot(re, im))
    i = int(np.argmin(np.where(ok, dist, -1.0)))
    cert = EllipticityCertificate(
        accepted=bool(ok.all()),
        min_distance=float(dist.min()),
        witness=tuple(float(v) for v in pts[i]),
        witness_value=complex(re[i], im[i]),
        n_samples=len(pts),
        eps=eps,
    )
    if raise_on_reject and not cert.accepted:
        raise EllipticityError(cert)
    return cert


def parametrix(p0: EllipticOperator, J: int, check: bool = True, **ellipticity_kw) -> SymbolExpansion:
    """Truncated symbol ``b`` of order ``(-d, 0)`` with ``b # (mu**d - p0) = 1`` in components ``< J``.

    ``b_0 = R**-1`` and for ``j >= 1``
    ``b_j = sum (1/alpha!) d_xi**alpha b_k * D_x**alpha p0^(d-l) * R**-1``
    over ``k + l + 2|alpha| = j``, ``k < j``.
    """
    if J < 1:
        raise ValueError("J must be positive")
    if check:
        check_ellipticity(p0, raise_on_reject=True, **ellipticity_kw)
    base = p0.base
    nv = p0.nvars
    p = p0.resolvent_symbol()
    rinv = HomogeneousComponent(nv, {1: TermBundle.one(nv)}, base, -p0.d, 0)
    comps = [rinv]
    order = Fraction(-p0.d)
    for j in range(1, J):
        b = SymbolExpansion(order, 0, tuple(comps), None, p0.n)
        # every term of (b # p)_j except b_j * R; all carry D_x p0 with a minus sign
        rest = _leibniz_component(
            _DerivativeCache(b, "d"),
            _DerivativeCache(p, "D"),
            j,
            order + p0.d,
            0,
            skip=lambda k, l, alpha: k >= j,
        )
        comps.append((-(rest * rinv)).with_reg_index(-j))
    return SymbolExpansion(order, 0, tuple(comps), None, p0.n)


def symbol_power(b: SymbolExpansion, N: int, J: int | None = None) -> SymbolExpansion:
    """``b # .. # b`` (``N`` factors), components ``< J``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    J = b.J if J is None else J
    out = b.truncate(min(J, b.J)) if not b.exact else b
    for _ in range(N - 1):
        out = leibniz_truncated(out, b, J)
    return out if N > 1 else out.truncate(min(J, out.J))
