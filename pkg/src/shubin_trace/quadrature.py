"""Quadrature: exact sphere moments, sphere rules, adaptive Gauss-Kronrod."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .poly import GaussianRational, GeneralizedMonomial, TermBundle, as_gaussian

__all__ = [
    "PiMultiple",
    "sphere_integral_exact",
    "sphere_integral_bundle",
    "sphere_rule",
    "sphere_monte_carlo",
    "QuadratureError",
    "GKResult",
    "gauss_kronrod",
    "PI_LONG",
]

PI_LONG = np.longdouble("3.14159265358979323846264338327950288")


def _pi(dtype):
    return PI_LONG if np.dtype(dtype) == np.longdouble else np.float64(math.pi)


class PiMultiple:
    """Exact value ``coeff * pi**(half_power / 2)``."""

    __slots__ = ("coeff", "half_power")

    def __init__(self, coeff, half_power: int):
        self.coeff = as_gaussian(coeff)
        self.half_power = int(half_power)

    @staticmethod
    def zero(half_power: int = 0) -> "PiMultiple":
        return PiMultiple(0, half_power)

    def __add__(self, other: "PiMultiple") -> "PiMultiple":
        if not other.coeff:
            return self
        if not self.coeff:
            return other
        if other.half_power != self.half_power:
            raise ValueError("cannot add different powers of pi exactly")
        return PiMultiple(self.coeff + other.coeff, self.half_power)

    def __neg__(self):
        return PiMultiple(-self.coeff, self.half_power)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "PiMultiple":
        return PiMultiple(self.coeff * as_gaussian(c), self.half_power)

    def times_pi_power(self, k: int) -> "PiMultiple":
        """Multiply by ``pi**k``."""
        return PiMultiple(self.coeff, self.half_power + 2 * k)

    def __eq__(self, other) -> bool:
        if isinstance(other, PiMultiple):
            if not self.coeff and not other.coeff:
                return True
            return self.coeff == other.coeff and self.half_power == other.half_power
        return NotImplemented

    def __hash__(self):
        return hash((self.coeff, self.half_power))

    @property
    def is_rational(self) -> bool:
        return self.half_power == 0 or not self.coeff

    def pi_factor(self, dtype=np.float64):
        if self.half_power % 2 == 0:
            return _pi(dtype) ** (self.half_power // 2)
        return np.sqrt(_pi(dtype)) ** self.half_power

    def to_complex(self, dtype=np.float64):
        dt = np.dtype(dtype)
        f = self.pi_factor(dt)
        re = dt.type(self.coeff.re.numerator) / dt.type(self.coeff.re.denominator)
        im = dt.type(self.coeff.im.numerator) / dt.type(self.coeff.im.denominator)
        if dt == np.longdouble:
            return np.clongdouble(re * f + 1j * (im * f))
        return complex(float(re * f), float(im * f))

    def __complex__(self):
        return complex(self.to_complex(np.float64))

    def __repr__(self):
        return f"PiMultiple({self.coeff}, pi^({self.half_power}/2))"

    def __str__(self):
        if not self.coeff:
            return "0"
        if self.half_power == 0:
            return str(self.coeff)
        p = Fraction(self.half_power, 2)
        return f"{self.coeff}*pi^{p}" if p != 1 else f"{self.coeff}*pi"


def _gamma_half(k: int) -> PiMultiple:
    """``Gamma(k/2)`` for integer ``k >= 1``."""
    if k % 2 == 0:
        return PiMultiple(math.factorial(k // 2 - 1), 0)
    # Gamma(j + 1/2) = (2j)! / (4**j j!) sqrt(pi)
    j = (k - 1) // 2
    return PiMultiple(Fraction(math.factorial(2 * j), 4**j * math.factorial(j)), 1)


def sphere_integral_exact(t: GeneralizedMonomial | tuple, m: int) -> PiMultiple:
    """``int_{S^{m-1}} omega**alpha dsigma`` (the radial factor is 1 on the sphere).

    Equals ``2 prod Gamma((alpha_i+1)/2) / Gamma((|alpha|+m)/2)`` for even
    ``alpha`` and 0 otherwise; the result keeps the monomial's coefficient.
    """
    if isinstance(t, GeneralizedMonomial):
        alpha, coeff = t.exponents, t.coeff
    else:
        alpha, coeff = tuple(t), GaussianRational(1)
    if len(alpha) != m:
        raise ValueError("exponent vector does not match dimension")
    half = m if m % 2 == 0 else m - 1
    if any(a % 2 for a in alpha):
        return PiMultiple.zero(half)
    num = Fraction(2)
    hp = 0
    for a in alpha:
        g = _gamma_half(a + 1)
        num *= g.coeff.re
        hp += g.half_power
    den = _gamma_half(sum(alpha) + m)
    return PiMultiple(coeff * (num / den.coeff.re), hp - den.half_power)


def sphere_integral_bundle(p: TermBundle) -> PiMultiple:
    """Exact sphere integral of every term of ``p``, summed."""
    m = p.nvars
    total = PiMultiple.zero(m if m % 2 == 0 else m - 1)
    for t in p.terms:
        total = total + sphere_integral_exact(t, m)
    return total


def sphere_rule(m: int, order: int = 64, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``S^{m-1}``.

    ``m = 2``: ``order`` equispaced trapezoid nodes.  ``m >= 3``: product
    Gauss-Legendre in the polar angles with a trapezoid in the last angle.
    """
    dt = np.dtype(dtype)
    pi = _pi(dt)
    if m < 2:
        raise ValueError("sphere dimension must be at least 1")
    nphi = order if m == 2 else 2 * order
    k = np.arange(nphi).astype(dt)
    phi = 2 * pi * k / dt.type(nphi)
    base_nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    base_w = np.full(nphi, 2 * pi / dt.type(nphi), dtype=dt)
    nodes, weights = base_nodes, base_w
    for dim in range(3, m + 1):
        # omega = (cos t, sin t * omega'), measure sin(t)**(dim-2) dt dsigma'
        x, w = np.polynomial.legendre.leggauss(order)
        t = ((x + 1) * (np.pi / 2)).astype(dt)
        wt = (w * (np.pi / 2)).astype(dt) * np.sin(t) ** (dim - 2)
        c, s = np.cos(t), np.sin(t)
        new_nodes = np.concatenate(
            [c[:, None, None] * np.ones_like(nodes[None, :, :1]), s[:, None, None] * nodes[None, :, :]], axis=-1
        ).reshape(-1, dim)
        new_w = (wt[:, None] * weights[None, :]).reshape(-1)
        nodes, weights = new_nodes, new_w
    return nodes.astype(dt), weights.astype(dt)


def sphere_monte_carlo(t: GeneralizedMonomial | tuple, m: int, samples: int = 200_000, seed: int = 0):
    """Seeded Monte-Carlo estimate of a sphere moment; returns ``(mean, stderr)``."""
    alpha = t.exponents if isinstance(t, GeneralizedMonomial) else tuple(t)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    vals = np.prod(g ** np.asarray(alpha), axis=1)
    area = 2 * math.pi ** (m / 2) / math.gamma(m / 2)
    return float(area * vals.mean()), float(area * vals.std(ddof=1) / math.sqrt(samples))


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance."""


# Kronrod 15-point / Gauss 7-point abscissae and weights (QUADPACK qk15)
_XGK = (
    "0.991455371120812639206854697526329",
    "0.949107912342758524526189684047851",
    "0.864864423359769072789712788640926",
    "0.741531185599394439863864773280788",
    "0.586087235467691130294144845693013",
    "0.405845151377397166906606412076961",
    "0.207784955007898467600689403773245",
    "0.000000000000000000000000000000000",
)
_WGK = (
    "0.022935322010529224963732008058970",
    "0.063092092629978553290700663189204",
    "0.104790010322250183839876322541518",
    "0.140653259715525918745189590510238",
    "0.169004726639267902826583426598550",
    "0.190350578064785409913256402421014",
    "0.204432940075298892414161999234649",
    "0.209482141084727828012999174891714",
)
_WG = (
    "0.129484966168869693270611432679082",
    "0.279705391489276667901467771423780",
    "0.381830050505118944950369775488975",
    "0.417959183673469387755102040816327",
)


def gk15_tables(dtype=np.float64):
    """Full 15-node rule on ``[-1, 1]``: ``(nodes, kronrod_weights, gauss_weights)``."""
    dt = np.dtype(dtype)
    conv = (lambda s: dt.type(s)) if dt == np.longdouble else (lambda s: float(s))
    xgk = [conv(s) for s in _XGK]
    wgk = [conv(s) for s in _WGK]
    wg = [conv(s) for s in _WG]
    nodes = np.array([-v for v in xgk[:7]] + [xgk[7]] + list(reversed(xgk[:7])), dtype=dt)
    kw = np.array(wgk[:7] + [wgk[7]] + list(reversed(wgk[:7])), dtype=dt)
    gw = np.zeros(15, dtype=dt)
    # Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5 from each end) and the centre
    for i, w in zip((1, 3, 5), wg[:3]):
        gw[i] = w
        gw[14 - i] = w
    gw[7] = wg[3]
    return nodes, kw, gw


@dataclass
class GKResult:
    value: complex
    error: float
    intervals: int
    evaluations: int
    roundoff_limited: bool = False


def gauss_kronrod(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
    limit: int = 4000,
    dtype=np.float64,
    breakpoints=(),
) -> GKResult:
    """Globally adaptive G7-K15 quadrature of a vectorized (possibly complex) ``f``.

    The error estimate follows QUADPACK.  Each sweep evaluates every pending
    interval in one call of ``f``; the intervals with the largest errors are
    bisected until the total estimated error meets the tolerance.

    ``f`` may return ``(values, magnitude)`` where ``magnitude`` bounds the
    terms summed inside ``f``; it sets the roundoff floor.  Intervals at the
    floor are not bisected, and a run that stalls there returns with
    ``roundoff_limited=True``.
    """
    dt = np.dtype(dtype)
    eps = np.finfo(dt).eps
    xk, wk, wg = gk15_tables(dt)
    pts = sorted({dt.type(a), dt.type(b), *[dt.type(p) for p in breakpoints if a < p < b]})
    pending = [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    done: list = []  # (err, lo, hi, val)
    nev = 0
    while True:
        lo = np.array([p[0] for p in pending], dtype=dt)
        hi = np.array([p[1] for p in pending], dtype=dt)
        c = (lo + hi) / 2
        h = (hi - lo) / 2
        x = c[:, None] + h[:, None] * xk[None, :]
        out = f(x.reshape(-1))
        if isinstance(out, tuple):
            fx = np.asarray(out[0]).reshape(x.shape)
            absf = np.maximum(np.abs(np.asarray(out[1]).reshape(x.shape)), np.abs(fx))
        else:
            fx = np.asarray(out).reshape(x.shape)
            absf = np.abs(fx)
        nev += fx.size
        resk = np.sum(fx * wk, axis=1) * h
        resg = np.sum(fx * wg, axis=1) * h
        mean = resk / (2 * h)
        resabs = np.sum(absf * wk, axis=1) * np.abs(h)
        resasc = np.sum(wk * np.abs(fx - mean[:, None]), axis=1) * np.abs(h)
        err = np.abs(resk - resg).astype(dt)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(
                (resasc != 0) & (err != 0), resasc * np.minimum(1, (200 * err / np.where(resasc != 0, resasc, 1)) ** 1.5), err
            )
        err = np.where((resasc != 0) & (err != 0), scale, err)
        floor = 50 * eps * resabs
        err = np.where(resabs > np.finfo(dt).tiny / (50 * eps), np.maximum(err, floor), err)
        at_floor = err <= floor
        for i in range(len(pending)):
            done.append((err[i], lo[i], hi[i], resk[i], bool(at_floor[i])))
        if not np.all(np.isfinite(resk)):
            raise QuadratureError("non-finite integrand values")
        done.sort(key=lambda t: (float(t[1])))
        vals = [t[3] for t in done]
        total = _kahan(vals)
        errs = np.array([t[0] for t in done], dtype=dt)
        toterr = dt.type(_kahan(list(errs)))
        tol = max(dt.type(epsabs), dt.type(epsrel) * abs(total))
        if toterr <= tol:
            return GKResult(total, float(toterr), len(done), nev)
        if len(done) >= limit:
            raise QuadratureError(
                f"tolerance not met after {len(done)} intervals: error {float(toterr):.3g} > {float(tol):.3g}"
            )
        # bisect the worst intervals until the remaining error would fit the tolerance
        order = np.argsort(-errs, kind="stable")
        budget = toterr
        split = []
        for idx in order:
            if budget <= tol / 2 or len(split) >= max(1, len(done) // 2):
                break
            if done[idx][4]:
                continue  # error estimate is at the roundoff floor
            split.append(int(idx))
            budget -= errs[idx]
        if not split:
            return GKResult(total, float(toterr), len(done), nev, True)
        chosen = set(split)
        keep = [t for i, t in enumerate(done) if i not in chosen]
        pending = []
        for idx in sorted(split):
            _, l, r, _, _ = done[idx]
            m = (l + r) / 2
            if not (l < m < r):
                raise QuadratureError("interval cannot be bisected further")
            pending += [(l, m), (m, r)]
        done = keep


def _kahan(values):
    """Neumaier sum of scalars in the given order."""
    if not values:
        return 0.0
    total = values[0] * 0
    comp = values[0] * 0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp
