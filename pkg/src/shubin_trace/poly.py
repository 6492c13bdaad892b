"""Exact algebra of generalized monomials ``c * z**alpha * |z|**s``.

The variables are ``z = (x_1..x_n, xi_1..xi_n)``.  Coefficients are Gaussian
rationals, radial powers are exact rationals.  A :class:`TermBundle` is kept
in a normal form in which structural equality coincides with equality of the
represented functions on ``z != 0``:

* terms whose radial power is an even integer ``>= 0`` are expanded into
  ordinary polynomials (radial power 0);
* every other term carries the last variable ``xi_n`` to at most the first
  power, using ``xi_n**2 = |z|**2 - sum_{i<2n} z_i**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "GaussianRational",
    "GeneralizedMonomial",
    "TermBundle",
    "as_fraction",
    "as_gaussian",
    "neumaier_sum",
    "BundleEvaluator",
    "power_table",
    "multiply",
    "differentiate",
    "homogeneous_parts",
    "evaluate",
]


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to :class:`Fraction`.

    Floats are rejected; exact inputs only.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not an exact rational")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {value!r} to an exact rational")


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = as_fraction(re)
        self.im = as_fraction(im)

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "GaussianRational":
        obj = cls.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    def __repr__(self) -> str:
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __neg__(self) -> "GaussianRational":
        return GaussianRational._raw(-self.re, -self.im)

    def __add__(self, other) -> "GaussianRational":
        other = as_gaussian(other)
        return GaussianRational._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other) -> "GaussianRational":
        other = as_gaussian(other)
        return GaussianRational._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other) -> "GaussianRational":
        return as_gaussian(other) - self

    def __mul__(self, other) -> "GaussianRational":
        if not isinstance(other, GaussianRational):
            if isinstance(other, (int, Fraction)):
                return GaussianRational._raw(self.re * other, self.im * other)
            other = as_gaussian(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational._raw(a * c, b)
        return GaussianRational._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "GaussianRational":
        other = as_gaussian(other)
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        num = self * other.conjugate()
        return GaussianRational._raw(num.re / den, num.im / den)

    def __rtruediv__(self, other) -> "GaussianRational":
        return as_gaussian(other) / self

    def __pow__(self, k: int) -> "GaussianRational":
        if k < 0:
            return GaussianRational(1) / self**(-k)
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._raw(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def to_pair(self) -> list[str]:
        """``["p/q", "p/q"]`` serialization."""
        return [str(self.re), str(self.im)]


I = GaussianRational(0, 1)
_ONE = GaussianRational(1)


def as_gaussian(value) -> GaussianRational:
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, complex):
        raise TypeError("complex floats are not exact; use GaussianRational")
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return GaussianRational(value[0], value[1])
    return GaussianRational(as_fraction(value))


@dataclass(frozen=True)
class GeneralizedMonomial:
    coeff: GaussianRational
    exponents: tuple[int, ...]
    radial_power: Fraction = Fraction(0)

    @property
    def degree(self) -> Fraction:
        return sum(self.exponents) + self.radial_power

    @property
    def is_polynomial(self) -> bool:
        return self.radial_power == 0


def _is_poly_radial(s: Fraction) -> bool:
    return s.denominator == 1 and s >= 0 and s.numerator % 2 == 0


def _normalize(raw: Mapping[tuple, GaussianRational], nvars: int) -> dict:
    """Bring a raw ``{(exps, s): coeff}`` map into normal form."""
    out: dict = {}
    stack = [(k, c) for k, c in raw.items() if c]
    last = nvars - 1
    while stack:
        (exps, s), c = stack.pop()
        if s == 0:
            key = (exps, s)
            acc = out.get(key)
            out[key] = c if acc is None else acc + c
            continue
        if _is_poly_radial(s):
            # |z|^s with s even >= 2: peel off one |z|^2 = sum z_i^2
            s2 = s - 2
            for i in range(nvars):
                e = list(exps)
                e[i] += 2
                stack.append(((tuple(e), s2), c))
            continue
        if exps[last] >= 2:
            e = list(exps)
            e[last] -= 2
            stack.append(((tuple(e), s + 2), c))
            for i in range(last):
                e2 = list(e)
                e2[i] += 2
                stack.append(((tuple(e2), s), -c))
            continue
        key = (exps, s)
        acc = out.get(key)
        out[key] = c if acc is None else acc + c
    return {k: v for k, v in out.items() if v}


def _sort_key(key):
    exps, s = key
    return (exps, s)


def neumaier_sum(values: Sequence[np.ndarray]):
    """Compensated summation of a sequence of equally shaped arrays, in order."""
    it = iter(values)
    try:
        total = np.array(next(it), copy=True)
    except StopIteration:
        return None
    comp = np.zeros_like(total)
    for v in it:
        t = total + v
        big = np.abs(total) >= np.abs(v)
        comp += np.where(big, (total - t) + v, (v - t) + total)
        total = t
    return total + comp


class TermBundle:
    """Exact linear combination of generalized monomials in ``2n`` variables.

    Instances are immutable; all operations return new bundles.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping | None = None, *, _normal: bool = False):
        if nvars < 1:
            raise ValueError("need at least one variable")
        self.nvars = nvars
        if not terms:
            self._terms = {}
        elif _normal:
            self._terms = dict(terms)
        else:
            clean = {}
            for (exps, s), c in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != nvars or any(e < 0 for e in exps):
                    raise ValueError(f"bad exponent vector {exps}")
                key = (exps, as_fraction(s))
                c = as_gaussian(c)
                clean[key] = clean[key] + c if key in clean else c
            self._terms = _normalize(clean, nvars)
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "TermBundle":
        return cls(nvars)

    @classmethod
    def constant(cls, c, nvars: int) -> "TermBundle":
        return cls(nvars, {((0,) * nvars, Fraction(0)): as_gaussian(c)})

    @classmethod
    def one(cls, nvars: int) -> "TermBundle":
        return cls.constant(1, nvars)

    @classmethod
    def monomial(cls, exponents: Sequence[int], coeff=1, radial_power=0) -> "TermBundle":
        exps = tuple(exponents)
        return cls(len(exps), {(exps, as_fraction(radial_power)): as_gaussian(coeff)})

    @classmethod
    def variable(cls, i: int, nvars: int) -> "TermBundle":
        e = [0] * nvars
        e[i] = 1
        return cls.monomial(e)

    @classmethod
    def radial(cls, s, nvars: int, coeff=1) -> "TermBundle":
        """``coeff * |z|**s``."""
        return cls.monomial((0,) * nvars, coeff, s)

    @classmethod
    def variables(cls, n: int) -> tuple["TermBundle", ...]:
        """``(x_1, .., x_n, xi_1, .., xi_n)`` as bundles."""
        return tuple(cls.variable(i, 2 * n) for i in range(2 * n))

    @classmethod
    def from_terms(cls, terms: Iterable[GeneralizedMonomial], nvars: int) -> "TermBundle":
        raw: dict = {}
        for t in terms:
            key = (tuple(t.exponents), as_fraction(t.radial_power))
            raw[key] = raw[key] + t.coeff if key in raw else as_gaussian(t.coeff)
        return cls(nvars, raw)

    # -- structure --------------------------------------------------------
    @property
    def n(self) -> int:
        return self.nvars // 2

    @property
    def terms(self) -> tuple[GeneralizedMonomial, ...]:
        return tuple(
            GeneralizedMonomial(self._terms[k], k[0], k[1]) for k in sorted(self._terms, key=_sort_key)
        )

    def items(self) -> Iterator[tuple[tuple[int, ...], Fraction, GaussianRational]]:
        for k in sorted(self._terms, key=_sort_key):
            yield k[0], k[1], self._terms[k]

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_polynomial(self) -> bool:
        return all(s == 0 for _, s in self._terms)

    def degrees(self) -> set[Fraction]:
        return {Fraction(sum(e)) + s for e, s in self._terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    @property
    def degree(self) -> Fraction | None:
        """Common homogeneity degree, ``None`` for zero; raises if mixed."""
        degs = self.degrees()
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"bundle is not homogeneous: degrees {sorted(degs)}")
        return next(iter(degs))

    def max_exponents(self) -> tuple[int, ...]:
        out = [0] * self.nvars
        for e, _ in self._terms:
            for i, k in enumerate(e):
                if k > out[i]:
                    out[i] = k
        return tuple(out)

    def radial_powers(self) -> set[Fraction]:
        return {s for _, s in self._terms}

    # -- equality ---------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, TermBundle):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self == TermBundle.constant(other, self.nvars)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"TermBundle({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        n = self.n
        names = [f"x{i + 1}" if n > 1 else "x" for i in range(n)]
        names += [f"xi{i + 1}" if n > 1 else "xi" for i in range(n)]
        parts = []
        for exps, s, c in self.items():
            factors = []
            for name, k in zip(names, exps):
                if k == 1:
                    factors.append(name)
                elif k > 1:
                    factors.append(f"{name}^{k}")
            if s:
                factors.append(f"|z|^{s}" if s.denominator == 1 and s > 0 else f"|z|^({s})")
            mono = "*".join(factors)
            cs = str(c)
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "TermBundle":
        if isinstance(other, TermBundle):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return TermBundle.constant(other, self.nvars)

    def __add__(self, other) -> "TermBundle":
        other = self._coerce(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = out.get(k)
            if v is None:
                out[k] = c
            else:
                v = v + c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return TermBundle(self.nvars, out, _normal=True)

    __radd__ = __add__

    def __neg__(self) -> "TermBundle":
        return TermBundle(self.nvars, {k: -c for k, c in self._terms.items()}, _normal=True)

    def __sub__(self, other) -> "TermBundle":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "TermBundle":
        return self._coerce(other) - self

    def scale(self, c) -> "TermBundle":
        c = as_gaussian(c)
        if not c:
            return TermBundle(self.nvars)
        return TermBundle(self.nvars, {k: v * c for k, v in self._terms.items()}, _normal=True)

    def __mul__(self, other) -> "TermBundle":
        if not isinstance(other, TermBundle):
            return self.scale(other)
        return multiply(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TermBundle":
        if k < 0:
            raise ValueError("negative powers of bundles are not bundles")
        out = TermBundle.one(self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def differentiate(self, var: int, kind: str = "d") -> "TermBundle":
        return differentiate(self, var, kind)

    def homogeneous_parts(self) -> dict[Fraction, "TermBundle"]:
        return homogeneous_parts(self)

    def evaluate(self, point: Sequence[float]) -> complex:
        return evaluate(self, point)

    def to_list(self) -> list:
        """``[[re, im, exponents, radial], ...]`` with exact ``"p/q"`` strings."""
        return [[str(c.re), str(c.im), list(e), str(s)] for e, s, c in self.items()]

    @classmethod
    def from_list(cls, rows: Sequence, nvars: int) -> "TermBundle":
        raw: dict = {}
        for row in rows:
            re, im, exps, s = row
            key = (tuple(int(e) for e in exps), as_fraction(s))
            c = GaussianRational(re, im)
            raw[key] = raw[key] + c if key in raw else c
        return cls(nvars, raw)


def multiply(p: TermBundle, q: TermBundle) -> TermBundle:
    """Exact distributive product."""
    if p.nvars != q.nvars:
        raise ValueError("variable count mismatch")
    if not p._terms or not q._terms:
        return TermBundle(p.nvars)
    out: dict = {}
    radial = False
    for (e1, s1), c1 in p._terms.items():
        for (e2, s2), c2 in q._terms.items():
            key = (tuple(a + b for a, b in zip(e1, e2)), s1 + s2)
            if key[1]:
                radial = True
            c = c1 * c2
            v = out.get(key)
            out[key] = c if v is None else v + c
    if radial:
        return TermBundle(p.nvars, _normalize(out, p.nvars), _normal=True)
    return TermBundle(p.nvars, {k: v for k, v in out.items() if v}, _normal=True)


_MINUS_I = GaussianRational(0, -1)


def differentiate(p: TermBundle, var: int, kind: str = "d") -> TermBundle:
    """``d/dz_var`` (``kind="d"``) or ``D = -i d/dz_var`` (``kind="D"``)."""
    if kind not in ("d", "D"):
        raise ValueError("kind must be 'd' or 'D'")
    if not 0 <= var < p.nvars:
        raise IndexError(var)
    out: dict = {}
    radial = False
    for (e, s), c in p._terms.items():
        k = e[var]
        if k:
            e1 = list(e)
            e1[var] -= 1
            key = (tuple(e1), s)
            v = out.get(key)
            cc = c * k
            out[key] = cc if v is None else v + cc
        if s:
            radial = True
            e2 = list(e)
            e2[var] += 1
            key = (tuple(e2), s - 2)
            v = out.get(key)
            cc = c * s
            out[key] = cc if v is None else v + cc
    if kind == "D":
        out = {k: v * _MINUS_I for k, v in out.items()}
    if radial:
        return TermBundle(p.nvars, _normalize(out, p.nvars), _normal=True)
    return TermBundle(p.nvars, {k: v for k, v in out.items() if v}, _normal=True)


def homogeneous_parts(p: TermBundle) -> dict[Fraction, TermBundle]:
    groups: dict = {}
    for (e, s), c in p._terms.items():
        g = Fraction(sum(e)) + s
        groups.setdefault(g, {})[(e, s)] = c
    return {g: TermBundle(p.nvars, t, _normal=True) for g, t in sorted(groups.items(), reverse=True)}


def evaluate(p: TermBundle, point: Sequence[float]) -> complex:
    """Numeric value at ``point``; terms summed with ``math.fsum`` in canonical order."""
    z = [float(v) for v in point]
    if len(z) != p.nvars:
        raise ValueError("point has wrong dimension")
    r = math.sqrt(math.fsum(v * v for v in z))
    re_parts, im_parts = [], []
    for e, s, c in p.items():
        if s < 0 and r == 0.0:
            raise ZeroDivisionError("negative radial power evaluated at z = 0")
        val = 1.0
        for v, k in zip(z, e):
            if k:
                val *= v**k
        if s:
            val *= r ** float(s)
        re_parts.append(float(c.re) * val)
        im_parts.append(float(c.im) * val)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


class BundleEvaluator:
    """Vectorized numeric evaluation of a fixed bundle at many points.

    ``dtype`` is the real working precision (``np.float64`` or
    ``np.longdouble``).  Returns ``(re, im)`` arrays.
    """

    def __init__(self, bundle: TermBundle, dtype=np.float64):
        self.bundle = bundle
        self.dtype = np.dtype(dtype)
        items = list(bundle.items())
        self.exps = [e for e, _, _ in items]
        self.radials = [s for _, s, _ in items]
        self.re = [_to_dtype(c.re, self.dtype) for _, _, c in items]
        self.im = [_to_dtype(c.im, self.dtype) for _, _, c in items]
        self.max_exp = bundle.max_exponents() if items else (0,) * bundle.nvars

    def __call__(self, z: np.ndarray, r: np.ndarray | None = None, powers=None):
        z = np.asarray(z, dtype=self.dtype)
        shape = z.shape[:-1]
        if not self.exps:
            zero = np.zeros(shape, dtype=self.dtype)
            return zero, zero.copy()
        if powers is None:
            powers = power_table(z, self.max_exp)
        rad_cache: dict = {}
        re_terms, im_terms = [], []
        for e, s, cr, ci in zip(self.exps, self.radials, self.re, self.im):
            val = None
            for i, k in enumerate(e):
                if k:
                    f = powers[i][k]
                    val = f if val is None else val * f
            if s:
                if r is None:
                    r = np.sqrt(np.sum(z * z, axis=-1))
                rs = rad_cache.get(s)
                if rs is None:
                    if s.denominator == 1:
                        rs = r ** int(s)
                    else:
                        rs = r ** _to_dtype(s, self.dtype)
                    rad_cache[s] = rs
                val = rs if val is None else val * rs
            if val is None:
                val = np.ones(shape, dtype=self.dtype)
            if cr:
                re_terms.append(cr * val)
            if ci:
                im_terms.append(ci * val)
        zero = np.zeros(shape, dtype=self.dtype)
        re = neumaier_sum(re_terms)
        im = neumaier_sum(im_terms)
        return (zero if re is None else re), (zero.copy() if im is None else im)


def power_table(z: np.ndarray, max_exp: Sequence[int]) -> list[list]:
    """``table[i][k] = z[..., i]**k`` for ``k <= max_exp[i]``."""
    table = []
    for i, kmax in enumerate(max_exp):
        col = z[..., i]
        row = [None, col]
        for _ in range(2, kmax + 1):
            row.append(row[-1] * col)
        table.append(row)
    return table


def _to_dtype(q: Fraction, dtype) -> np.floating:
    dtype = np.dtype(dtype)
    if dtype == np.float64:
        return np.float64(float(q))
    return dtype.type(q.numerator) / dtype.type(q.denominator)
