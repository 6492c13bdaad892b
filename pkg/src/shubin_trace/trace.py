"""Trace integrals of truncated symbols and their large-``mu`` expansion.

For ``a`` of order ``(d, nu)`` with ``d < -m`` the trace
``I(mu) = (2 pi)**-n int a(z, mu) dz`` behaves like

    sum_j c_j mu**(d+m-j) + sum_l (c'_l log(mu) + c''_l) mu**(d-nu-l).

``c_j`` come from the homogeneous components alone (exact sphere moments plus
radial quadrature at ``mu = 1``), ``c'_l`` are exact, and ``c''_l`` are fitted
to numerically computed samples of ``I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._parallel import ordered_map
from .calculus import check_ellipticity, leibniz_truncated, parametrix, symbol_power, EllipticityError
from .limits import mu_series
from .poly import BundleEvaluator, TermBundle, as_fraction
from .quadrature import (
    PI_LONG,
    PiMultiple,
    QuadratureError,
    gauss_kronrod,
    sphere_integral_bundle,
    sphere_rule,
)
from .symbols import CutoffSpec, EllipticOperator, SymbolExpansion

__all__ = [
    "QuadratureSpec",
    "Coefficient",
    "FitResult",
    "TraceExpansion",
    "ConvergenceError",
    "IllConditionedError",
    "geometric_grid",
    "trace_integral_numeric",
    "trace_samples",
    "log_coefficients",
    "power_coefficients",
    "fit_constant_coefficients",
    "symbol_trace_expansion",
    "resolvent_symbol_for_trace",
    "resolvent_trace_expansion",
]


class ConvergenceError(QuadratureError):
    """The trace integral does not converge or misses its tolerance."""


class IllConditionedError(ValueError):
    """The least-squares basis is numerically singular."""


def geometric_grid(lo: float, hi: float, count: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(lo, hi, count))


@dataclass(frozen=True)
class QuadratureSpec:
    """Numerical settings for the trace engine.

    ``precision="extended"`` runs quadrature, evaluation and the fit in
    80-bit ``long double``.
    """

    sphere_order: int = 64
    epsabs: float = 1e-12
    epsrel: float = 1e-10
    mu_grid: tuple[float, ...] = geometric_grid(10.0, 320.0, 16)
    fit_levels: tuple | None = None
    fit_count: int = 4
    precision: str = "double"
    limit: int = 4000

    def __post_init__(self):
        object.__setattr__(self, "mu_grid", tuple(float(v) for v in self.mu_grid))
        if self.fit_levels is not None:
            object.__setattr__(self, "fit_levels", tuple(as_fraction(v) for v in self.fit_levels))
        if self.epsabs <= 0 or self.epsrel <= 0:
            raise ValueError("tolerances must be positive")
        if self.sphere_order < 2:
            raise ValueError("sphere order too small")
        if self.precision not in ("double", "extended"):
            raise ValueError("precision must be 'double' or 'extended'")
        g = self.mu_grid
        if g and (g[0] < 1 or any(b <= a for a, b in zip(g, g[1:]))):
            raise ValueError("mu grid must be strictly increasing with minimum >= 1")

    @property
    def dtype(self):
        return np.dtype(np.longdouble if self.precision == "extended" else np.float64)

    @classmethod
    def extended(cls, **kw) -> "QuadratureSpec":
        kw.setdefault("epsabs", 1e-40)
        kw.setdefault("epsrel", 2e-17)
        return cls(precision="extended", **kw)

    def to_dict(self) -> dict:
        return {
            "sphere_order": self.sphere_order,
            "epsabs": self.epsabs,
            "epsrel": self.epsrel,
            "mu_grid": list(self.mu_grid),
            "fit_levels": None if self.fit_levels is None else [str(v) for v in self.fit_levels],
            "fit_count": self.fit_count,
            "precision": self.precision,
            "limit": self.limit,
        }


@dataclass
class Coefficient:
    """A coefficient with provenance ``exact``, ``quadrature`` or ``fitted``."""

    value: complex
    provenance: str
    error: float = 0.0
    exact: PiMultiple | None = None

    def to_dict(self) -> dict:
        out = {
            "value": [float(np.real(self.value)), float(np.imag(self.value))],
            "provenance": self.provenance,
            "error": float(self.error),
        }
        if self.exact is not None:
            out["exact"] = {
                "coeff": self.exact.coeff.to_pair(),
                "pi_power": str(Fraction(self.exact.half_power, 2)),
            }
        return out


def _dt_scalar(dt, v):
    return dt.type(v) if not isinstance(v, Fraction) else dt.type(v.numerator) / dt.type(v.denominator)


class _SphereData:
    """Values of every component's numerators and of ``P`` on fixed sphere nodes."""

    def __init__(self, a: SymbolExpansion, order: int, dtype):
        self.dt = np.dtype(dtype)
        self.cdt = np.result_type(self.dt, np.complex64)
        self.m = a.nvars
        self.nodes, self.weights = sphere_rule(self.m, order, self.dt)
        base = a.base
        self.d = base.d if base is not None else 0
        if base is not None:
            pr, pi = BundleEvaluator(base.principal, self.dt)(self.nodes)
            self.P = pr.astype(self.cdt) + 1j * pi.astype(self.cdt)
        else:
            self.P = None
        self.comps = []
        for c in a.components:
            if c.is_zero():
                continue
            parts = []
            for M in sorted(c.parts):
                re, im = BundleEvaluator(c.parts[M], self.dt)(self.nodes)
                parts.append((M, re.astype(self.cdt) + 1j * im.astype(self.cdt)))
            self.comps.append((_dt_scalar(self.dt, c.degree), parts))

    def component_shell(self, idx: int, r: np.ndarray, mu, magnitude: bool = False):
        """Sphere integral of ``a_idx(r omega, mu)`` for every radius in ``r``.

        With ``magnitude=True`` also returns the sphere integral of the
        absolute values of the summed terms (a roundoff scale).
        """
        deg, parts = self.comps[idx]
        r = np.asarray(r, dtype=self.dt)
        w = self.weights
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # a(r omega, mu) = r**deg * a(omega, mu / r)
            scaled = (self.dt.type(mu) / r) if mu != 0 else np.zeros_like(r)
            R = None
            if self.P is not None and any(M for M, _ in parts):
                R = (scaled[:, None] ** self.d) - self.P[None, :]
            acc = np.zeros((len(r), len(w)), dtype=self.cdt)
            mag = np.zeros((len(r), len(w)), dtype=self.dt) if magnitude else None
            for M, vals in parts:
                if M > 0:
                    term = vals[None, :] / R**M
                elif M < 0:
                    term = vals[None, :] * R ** (-M)
                else:
                    term = np.broadcast_to(vals[None, :], acc.shape)
                acc = acc + term
                if magnitude:
                    mag = mag + np.abs(term)
            rd = r**deg
            shell = (acc @ w.astype(self.cdt)) * rd
            if magnitude:
                return shell, (mag @ w) * rd
            return shell

    def shell(self, r, mu, magnitude: bool = False):
        r = np.atleast_1d(r)
        out = np.zeros(len(r), dtype=self.cdt)
        mag = np.zeros(len(r), dtype=self.dt)
        for i in range(len(self.comps)):
            v, g = self.component_shell(i, r, mu, True)
            out = out + v
            mag = mag + g
        return (out, mag) if magnitude else out


def _prefactor(n: int, dt) -> np.floating:
    pi = PI_LONG if dt == np.longdouble else np.float64(math.pi)
    return (2 * pi) ** (-n)


def _check_order(a: SymbolExpansion):
    if a.order >= -a.nvars:
        raise ConvergenceError(f"trace integral diverges: order {a.order} >= -{a.nvars}")


def trace_integral_numeric(
    a: SymbolExpansion, mu: float, spec: QuadratureSpec | None = None, return_error: bool = False, _data=None
):
    """``(2 pi)**-n int chi(|z|) sum_j a_j(z, mu) dz`` by sphere rule times radial Gauss-Kronrod.

    The radial integral runs over ``u = 1/(1+r)`` in ``(0, 1]``; the
    cutoff radii are breakpoints.
    """
    spec = spec or QuadratureSpec()
    _check_order(a)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    dt = spec.dtype
    data = _data or _SphereData(a, spec.sphere_order, dt)
    if not data.comps:
        return (0j, 0.0) if return_error else 0j
    m = a.nvars
    cut = a.cutoff
    one = dt.type(1)

    def h(u):
        r = (one - u) / u
        vals, mag = data.shell(r, mu, magnitude=True)
        f = r ** (m - 1) / (u * u)
        if cut is not None:
            f = f * cut(r)
        return vals * f, mag * np.abs(f)

    brk = [1 / (1 + dt.type(rr)) for rr in (cut.breakpoints() if cut is not None else ())]
    try:
        res = gauss_kronrod(h, 0, 1, spec.epsabs, spec.epsrel, spec.limit, dt, brk)
    except QuadratureError as exc:
        raise ConvergenceError(f"radial quadrature failed at mu={mu}: {exc}") from exc
    pre = _prefactor(a.n, dt)
    val = res.value * pre
    if dt != np.longdouble:
        val = complex(val)
    return (val, float(res.error * pre)) if return_error else val


def trace_samples(a: SymbolExpansion, spec: QuadratureSpec | None = None, mus=None):
    """``[(mu, I(mu), error)]`` over ``spec.mu_grid`` (or ``mus``), in grid order."""
    spec = spec or QuadratureSpec()
    _check_order(a)
    mus = spec.mu_grid if mus is None else tuple(mus)
    data = _SphereData(a, spec.sphere_order, spec.dtype)

    def one(mu):
        v, e = trace_integral_numeric(a, mu, spec, return_error=True, _data=data)
        return (mu, v, e)

    return ordered_map(one, mus)


def _levels_needed(a: SymbolExpansion, j: int, L) -> Fraction:
    """Smallest level count with ``nu - j + L > -m``, at least ``L``."""
    need = -a.nvars - (a.reg - j)
    Lmin = math.floor(need) + 1
    return max(as_fraction(L), Fraction(Lmin), Fraction(0))


def log_level(a: SymbolExpansion, j: int) -> Fraction | None:
    ell = Fraction(j) - a.nvars - a.reg
    return ell if ell >= 0 else None


def log_coefficients(a: SymbolExpansion) -> dict[Fraction, PiMultiple]:
    """Exact ``c'_l = (2 pi)**-n sum_j S(q_{j,l})`` over ``l = j - m - nu >= 0``."""
    m = a.nvars
    n = a.n
    out: dict[Fraction, PiMultiple] = {}
    for j, c in enumerate(a.components):
        ell = log_level(a, j)
        if ell is None:
            continue
        total = out.get(ell, PiMultiple.zero(0))
        if not c.is_zero():
            q = mu_series(c, ell + 1).by_level().get(ell)
            if q is not None:
                s = sphere_integral_bundle(q)
                total = total + PiMultiple(s.coeff / 2**n, s.half_power - m)
        out[ell] = total
    return out


@dataclass
class _PowerDetail:
    tail: complex
    ball: complex
    exact: PiMultiple
    error: float
    levels: Fraction


def power_coefficients(a: SymbolExpansion, spec: QuadratureSpec | None = None, L=0, details=None) -> dict[int, Coefficient]:
    """``c_j = (2 pi)**-n [tail + ball + sum_{l != l*} S_{j,l} / (nu - j + l + m)]``.

    ``tail = int_{|z|>=1} a_j(z, 1) dz``, ``ball = int_{|w|<=1} s_j(w, 1) dw``
    with ``s_j = a_j(., 1) - sum_{l < L_j} q_{j,l}``.  ``L_j`` is raised to the
    smallest count making the remainder locally integrable.
    """
    spec = spec or QuadratureSpec()
    _check_order(a)
    dt = spec.dtype
    m, n = a.nvars, a.n
    data = _SphereData(a, spec.sphere_order, dt)
    pre = _prefactor(n, dt)
    one = dt.type(1)
    out: dict[int, Coefficient] = {}
    idx = 0
    for j, c in enumerate(a.components):
        if c.is_zero():
            out[j] = Coefficient(0j, "exact", 0.0, PiMultiple.zero(0))
            continue
        k = idx
        idx += 1
        Lj = _levels_needed(a, j, L)
        series = mu_series(c, Lj)
        lstar = log_level(a, j)
        exact = PiMultiple.zero(0)
        qs = []
        for e in series:
            deg = a.reg - j + e.ell
            if e.ell != lstar:
                s = sphere_integral_bundle(e.symbol)
                exact = exact + PiMultiple(s.coeff / (deg + m) / 2**n, s.half_power - m)
            re, im = BundleEvaluator(e.symbol, dt)(data.nodes)
            vals = re.astype(data.cdt) + 1j * im.astype(data.cdt)
            qs.append((_dt_scalar(dt, deg), vals @ data.weights.astype(data.cdt), np.abs(vals) @ data.weights))

        def tail_f(u, k=k):
            r = (one - u) / u
            v, g = data.component_shell(k, r, 1, True)
            f = r ** (m - 1) / (u * u)
            return v * f, g * f

        def ball_f(r, k=k):
            v, g = data.component_shell(k, r, 1, True)
            for deg, sq, sa in qs:
                rd = r**deg
                v = v - sq * rd
                g = g + sa * rd
            f = r ** (m - 1)
            return v * f, g * f

        try:
            t = gauss_kronrod(tail_f, 0, dt.type(0.5), spec.epsabs, spec.epsrel, spec.limit, dt)
            b = gauss_kronrod(ball_f, 0, 1, spec.epsabs, spec.epsrel, spec.limit, dt)
        except QuadratureError as exc:
            raise ConvergenceError(f"power coefficient c_{j}: {exc}") from exc
        val = (t.value + b.value) * pre + exact.to_complex(dt)
        if dt != np.longdouble:
            val = complex(val)
        err = float((t.error + b.error) * pre)
        out[j] = Coefficient(val, "quadrature", err, None)
        if details is not None:
            details[j] = _PowerDetail(t.value * pre, b.value * pre, exact, err, Lj)
    return out


@dataclass
class FitResult:
    coeffs: dict
    residual_norm: float
    condition: float
    residuals: list
    basis: list


def _mgs_lstsq(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least squares by modified Gram-Schmidt with one reorthogonalization (any real dtype)."""
    m, k = A.shape
    Q = A.copy()
    R = np.zeros((k, k), dtype=A.dtype)
    b = y.copy()
    for i in range(k):
        for _ in range(2):
            for p in range(i):
                s = Q[:, p] @ Q[:, i]
                R[p, i] += s
                Q[:, i] = Q[:, i] - s * Q[:, p]
        nrm = np.sqrt(Q[:, i] @ Q[:, i])
        if nrm == 0:
            raise IllConditionedError("rank-deficient fit basis")
        R[i, i] = nrm
        Q[:, i] = Q[:, i] / nrm
    rhs = np.array([Q[:, i] @ b for i in range(k)], dtype=A.dtype)
    x = np.zeros(k, dtype=A.dtype)
    for i in range(k - 1, -1, -1):
        x[i] = (rhs[i] - R[i, i + 1 :] @ x[i + 1 :]) / R[i, i]
    return x


def _basis_pairs(exponents, known) -> list:
    pairs = []
    for e in exponents:
        if isinstance(e, tuple):
            pairs.append((as_fraction(e[0]), int(e[1])))
        else:
            if known is None:
                raise ValueError("level indices need a TraceExpansion to fix their exponents")
            pairs.append((known.level_exponent(as_fraction(e)), 0))
    return pairs


def fit_constant_coefficients(samples, known=None, exponents=(), dtype=None) -> FitResult:
    """Least-squares fit of ``I(mu) - known(mu)`` in the basis ``mu**e log(mu)**k``.

    ``exponents`` holds levels ``l`` (basis ``mu**(d - nu - l)``, needs
    ``known``) or explicit ``(e, k)`` pairs.  Rows are scaled by
    ``mu**-max(e)`` and columns to unit norm.
    """
    exponents = list(exponents)
    samples = list(samples)
    if not exponents:
        return FitResult({}, 0.0, 1.0, [], [])
    if len(samples) < 2 * len(exponents):
        raise ValueError("need at least twice as many samples as basis functions")
    mus = [s[0] for s in samples]
    if len(set(mus)) != len(mus):
        raise ValueError("sample points must be distinct")
    if dtype is None:
        dtype = np.longdouble if any(isinstance(s[1], (np.longdouble, np.clongdouble)) for s in samples) else np.float64
    dt = np.dtype(dtype)
    pairs = _basis_pairs(exponents, known)
    mu = np.array([dt.type(v) for v in mus], dtype=dt)
    y = np.array([s[1] for s in samples], dtype=np.result_type(dt, np.complex64))
    if known is not None:
        y = y - np.array([known.model(v, include_const=False, dtype=dt) for v in mu])
    logmu = np.log(mu)
    A = np.stack([mu ** _dt_scalar(dt, e) * logmu**k for e, k in pairs], axis=1)
    emax = max(e for e, _ in pairs)
    w = mu ** (-_dt_scalar(dt, emax))
    A = A * w[:, None]
    yw = y * w
    cn = np.sqrt(np.sum(A * A, axis=0))
    As = A / cn
    cond = float(np.linalg.cond(As.astype(np.float64)))
    eps = float(np.finfo(dt).eps)
    if not np.isfinite(cond) or cond > 1e-2 / eps:
        raise IllConditionedError(f"fit basis condition number {cond:.3g} too large")
    if dt == np.longdouble:
        xr = _mgs_lstsq(As, np.real(yw).astype(dt))
        xi = _mgs_lstsq(As, np.imag(yw).astype(dt))
    else:
        xr = np.linalg.lstsq(As, np.real(yw), rcond=None)[0]
        xi = np.linalg.lstsq(As, np.imag(yw), rcond=None)[0]
    x = (xr + 1j * xi) / cn
    resid = y - (A / w[:, None]) @ x
    coeffs = {key: (x[i] if dt == np.longdouble else complex(x[i])) for i, key in enumerate(exponents)}
    rn = float(np.sqrt(np.sum(np.abs(resid * w) ** 2)))
    return FitResult(coeffs, rn, cond, list(resid), pairs)


@dataclass
class TraceExpansion:
    """Coefficients of the trace expansion in ``mu`` with a ``lambda = mu**base_d`` view."""

    order: Fraction
    reg: Fraction
    n: int
    base_d: int
    power_coeffs: dict = field(default_factory=dict)
    log_coeffs: dict = field(default_factory=dict)
    const_coeffs: dict = field(default_factory=dict)
    truncation: tuple = (0, 0)
    diagnostics: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)
    fit: FitResult | None = None
    symbol: SymbolExpansion | None = None
    spec: QuadratureSpec | None = None

    @property
    def m(self) -> int:
        return 2 * self.n

    def power_exponent(self, j: int) -> Fraction:
        return self.order + self.m - j

    def level_exponent(self, ell) -> Fraction:
        return self.order - self.reg - as_fraction(ell)

    def model(self, mu, include_const: bool = True, max_exponent=None, min_exponent=None, dtype=np.float64):
        """Evaluate the expansion at ``mu``; ``min_exponent`` drops faster-decaying terms."""
        dt = np.dtype(dtype)
        mu = dt.type(mu)
        lg = np.log(mu)
        terms = []

        def keep(e):
            return min_exponent is None or e >= min_exponent

        for j, c in sorted(self.power_coeffs.items()):
            e = self.power_exponent(j)
            if keep(e) and c.value != 0:
                terms.append(_cval(c, dt) * mu ** _dt_scalar(dt, e))
        for ell, c in sorted(self.log_coeffs.items()):
            e = self.level_exponent(ell)
            if keep(e) and c.value != 0:
                terms.append(_cval(c, dt) * mu ** _dt_scalar(dt, e) * lg)
        if include_const:
            for ell, c in sorted(self.const_coeffs.items()):
                e = self.level_exponent(ell)
                if keep(e):
                    terms.append(_cval(c, dt) * mu ** _dt_scalar(dt, e))
        cdt = np.result_type(dt, np.complex64)
        total = cdt.type(0)
        comp = cdt.type(0)
        for t in terms:
            s = total + t
            comp += (total - s) + t if abs(total) >= abs(t) else (t - s) + total
            total = s
        return total + comp

    def lambda_view(self) -> list[dict]:
        """Terms ``coeff * lambda**e * log(lambda)**k`` from the ``c_j`` and ``c'_l`` families.

        ``mu**e log(mu) = lambda**(e/base_d) log(lambda) / base_d``.  Fitted
        ``c''_l`` belong to the cutoff-truncated symbol and are listed separately.
        """
        bd = self.base_d
        rows: dict = {}
        for j, c in self.power_coeffs.items():
            key = (self.power_exponent(j) / bd, 0)
            row = rows.setdefault(key, {"value": 0j, "error": 0.0, "sources": []})
            row["value"] += complex(c.value)
            row["error"] += c.error
            row["sources"].append(f"c_{j}")
        for ell, c in self.log_coeffs.items():
            key = (self.level_exponent(ell) / bd, 1)
            row = rows.setdefault(key, {"value": 0j, "error": 0.0, "sources": []})
            row["value"] += complex(c.value) / bd
            row["sources"].append(f"c'_{ell}")
        out = []
        for (e, k), row in sorted(rows.items(), key=lambda t: (-t[0][0], -t[0][1])):
            out.append({"exponent": e, "log_power": k, **row})
        return out

    def lambda_coefficient(self, exponent, log_power: int = 0) -> complex:
        e = as_fraction(exponent)
        for row in self.lambda_view():
            if row["exponent"] == e and row["log_power"] == log_power:
                return row["value"]
        return 0j

    def to_dict(self) -> dict:
        def ckey(k):
            return str(k)

        return {
            "order": str(self.order),
            "reg": str(self.reg),
            "n": self.n,
            "base_d": self.base_d,
            "truncation": {"J": self.truncation[0], "L": str(self.truncation[1])},
            "power_coeffs": {
                ckey(j): {**c.to_dict(), "mu_exponent": str(self.power_exponent(j))}
                for j, c in sorted(self.power_coeffs.items())
            },
            "log_coeffs": {
                ckey(l): {**c.to_dict(), "mu_exponent": str(self.level_exponent(l))}
                for l, c in sorted(self.log_coeffs.items())
            },
            "const_coeffs": {
                ckey(l): {**c.to_dict(), "mu_exponent": str(self.level_exponent(l))}
                for l, c in sorted(self.const_coeffs.items())
            },
            "lambda_view": [
                {
                    "exponent": str(r["exponent"]),
                    "log_power": r["log_power"],
                    "value": [r["value"].real, r["value"].imag],
                    "error": r["error"],
                    "sources": r["sources"],
                }
                for r in self.lambda_view()
            ],
        }


def _cval(c: Coefficient, dt):
    if c.exact is not None and c.provenance == "exact":
        return c.exact.to_complex(dt)
    v = c.value
    if dt == np.longdouble:
        return np.clongdouble(v)
    return complex(v)


def _auto_fit_levels(a: SymbolExpansion, count: int, skip=()) -> list[Fraction]:
    """First ``count`` levels at which some ``q_{j,l}`` is non-zero."""
    found: set = set()
    L = Fraction(8)
    while L <= 64:
        found = set()
        for c in a.components:
            for e in mu_series(c, L):
                found.add(e.ell)
        levels = sorted(l for l in found if l not in skip)
        if len(levels) >= count:
            return levels[:count]
        L *= 2
    return sorted(found)[:count]


def _cutoff_diagnostics(a: SymbolExpansion, levels, spec: QuadratureSpec) -> dict:
    """``-(2 pi)**-n sum_j int (1 - chi) q_{j,l}``: the component share of ``c''_l``."""
    if a.cutoff is None:
        return {}
    cut = a.cutoff
    m, n = a.nvars, a.n
    out = {}
    for ell in levels:
        total = 0j
        ok = True
        for j, c in enumerate(a.components):
            q = mu_series(c, ell + 1).by_level().get(ell)
            if q is None:
                continue
            deg = float(a.reg - j + ell)
            if deg <= -m:
                ok = False
                break
            s = complex(sphere_integral_bundle(q))
            rad = gauss_kronrod(
                lambda r: (1 - cut(r)) * r ** (deg + m - 1), 0, cut.r1, 1e-14, 1e-12, breakpoints=cut.breakpoints()
            )
            total += s * rad.value
        if ok:
            out[str(ell)] = -total / (2 * math.pi) ** n
    return out


def symbol_trace_expansion(
    a: SymbolExpansion, L=0, spec: QuadratureSpec | None = None, base_d: int | None = None, fit: bool = True
) -> TraceExpansion:
    """Full expansion of the trace of a truncated symbol."""
    spec = spec or QuadratureSpec()
    _check_order(a)
    base = a.base
    bd = base_d if base_d is not None else (base.d if base is not None else 1)
    details: dict = {}
    power = power_coefficients(a, spec, L, details)
    logs = {
        ell: Coefficient(v.to_complex(spec.dtype), "exact", 0.0, v) for ell, v in log_coefficients(a).items()
    }
    te = TraceExpansion(
        a.order,
        a.reg,
        a.n,
        bd,
        power,
        logs,
        {},
        (a.J, max([d.levels for d in details.values()], default=as_fraction(L))),
        symbol=a,
        spec=spec,
    )
    te.diagnostics["power_split"] = {
        str(j): {
            "tail": [float(np.real(d.tail)), float(np.imag(d.tail))],
            "ball": [float(np.real(d.ball)), float(np.imag(d.ball))],
            "exact": str(d.exact),
            "levels": str(d.levels),
        }
        for j, d in details.items()
    }
    if fit and spec.mu_grid:
        te.samples = trace_samples(a, spec)
        levels = list(spec.fit_levels) if spec.fit_levels is not None else _auto_fit_levels(a, spec.fit_count)
        res = fit_constant_coefficients([(mu, v) for mu, v, _ in te.samples], te, levels, spec.dtype)
        te.fit = res
        te.const_coeffs = {ell: Coefficient(v, "fitted", res.residual_norm) for ell, v in res.coeffs.items()}
        te.diagnostics["fit"] = {
            "levels": [str(l) for l in levels],
            "condition": res.condition,
            "residual_norm": res.residual_norm,
            "provenance": "fitted (cutoff-truncated symbol)",
        }
        te.diagnostics["const_component_share"] = {
            k: [v.real, v.imag] for k, v in _cutoff_diagnostics(a, levels, spec).items()
        }
    return te


def resolvent_symbol_for_trace(p0: EllipticOperator, q: SymbolExpansion, N: int, J: int, cutoff=None) -> SymbolExpansion:
    """``q # b**#N`` with ``b`` the truncated resolvent parametrix."""
    b = parametrix(p0, J, check=False)
    bN = symbol_power(b, N, J)
    a = leibniz_truncated(q, bN, J)
    return a.with_cutoff(cutoff)


def resolvent_trace_expansion(
    p0: EllipticOperator,
    q: SymbolExpansion | None,
    N: int,
    J: int,
    L,
    spec: QuadratureSpec | None = None,
    cutoff: CutoffSpec | None = CutoffSpec(),
    ellipticity_eps: float = 1e-9,
    fit: bool = True,
) -> TraceExpansion:
    """Expansion of ``Tr q(x,D) (lambda - p0(x,D))**-N`` with ``lambda = mu**d``."""
    n = p0.n
    if q is None:
        q = SymbolExpansion.from_bundle(TermBundle.one(2 * n), order=0)
    if not q.is_mu_independent():
        raise ValueError("q must be independent of mu")
    if q.n != n:
        raise ValueError("dimension mismatch between p0 and q")
    if q.order - p0.d * N >= -2 * n:
        raise ValueError(f"need omega - d N < -2n, got {q.order} - {p0.d}*{N} >= {-2 * n}")
    cert = check_ellipticity(p0, eps=ellipticity_eps)
    if not cert.accepted:
        raise EllipticityError(cert)
    a = resolvent_symbol_for_trace(p0, q, N, J, cutoff)
    te = symbol_trace_expansion(a, L, spec, base_d=p0.d, fit=fit)
    te.diagnostics["ellipticity"] = cert.to_dict()
    return te
