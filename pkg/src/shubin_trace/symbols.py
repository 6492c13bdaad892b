"""Data model for truncated parameter-dependent Shubin symbols.

A homogeneous component is a finite sum ``sum_M num_M(z) * R**(-M)`` where
``R = mu**d - P(z)`` is shared by all components of a computation and every
``num_M`` is a :class:`TermBundle` free of ``mu``.  ``M`` may be negative, so
``R`` itself (``M = -1``) is representable.  For fixed ``z`` the functions
``mu -> R**k`` are linearly independent, hence the map ``M -> num_M`` is a
canonical form and structural equality is functional equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .poly import (
    BundleEvaluator,
    GaussianRational,
    TermBundle,
    as_fraction,
    neumaier_sum,
)

__all__ = [
    "DenominatorBase",
    "HomogeneousComponent",
    "CutoffSpec",
    "SymbolExpansion",
    "EllipticOperator",
    "MuEntry",
    "MuExpansion",
    "BaseMismatchError",
]


class BaseMismatchError(ValueError):
    """Operands refer to different denominators ``R``."""


@dataclass(frozen=True)
class DenominatorBase:
    """``R = mu**d - principal(z)``."""

    n: int
    d: int
    principal: TermBundle

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("order d must be a positive integer")
        if self.principal.nvars != 2 * self.n:
            raise ValueError("principal symbol has wrong variable count")
        if self.principal.is_zero():
            raise ValueError("principal symbol must be non-zero")
        if not self.principal.is_polynomial or self.principal.degree != self.d:
            raise ValueError(f"principal symbol must be a homogeneous polynomial of degree {self.d}")


def _merge_base(a, b):
    if a is None:
        return b
    if b is None or a == b:
        return a
    raise BaseMismatchError("components use different denominator bases")


def _add_parts(p: Mapping[int, TermBundle], q: Mapping[int, TermBundle]) -> dict:
    out = dict(p)
    for M, num in q.items():
        s = out[M] + num if M in out else num
        if s.is_zero():
            out.pop(M, None)
        else:
            out[M] = s
    return out


class HomogeneousComponent:
    """One ``(degree, reg_index)`` piece ``sum_M num_M * R**(-M)``."""

    __slots__ = ("nvars", "parts", "base", "degree", "reg_index", "_evals")

    def __init__(
        self,
        nvars: int,
        parts: Mapping[int, TermBundle] | None,
        base: DenominatorBase | None,
        degree,
        reg_index,
        *,
        check: bool = True,
    ):
        self.nvars = nvars
        self.base = base
        self.degree = as_fraction(degree)
        self.reg_index = as_fraction(reg_index)
        self.parts = {int(M): num for M, num in (parts or {}).items() if not num.is_zero()}
        self._evals = {}
        if check:
            for M, num in self.parts.items():
                if num.nvars != nvars:
                    raise ValueError("numerator has wrong variable count")
                if M != 0 and base is None:
                    raise ValueError("a denominator power needs a denominator base")
                dd = base.d if base is not None else 0
                if num.degree != self.degree + dd * M:
                    raise ValueError(
                        f"numerator degree {num.degree} inconsistent with component degree "
                        f"{self.degree} and denominator power {M}"
                    )

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars, degree, reg_index, base=None) -> "HomogeneousComponent":
        return cls(nvars, {}, base, degree, reg_index, check=False)

    @classmethod
    def from_bundle(cls, numerator: TermBundle, base=None, denom_power: int = 0, reg_index=None):
        """``numerator * R**(-denom_power)``; the degree is inferred."""
        if numerator.is_zero():
            raise ValueError("use HomogeneousComponent.zero for a zero component")
        dd = base.d if base is not None else 0
        degree = numerator.degree - dd * denom_power
        reg = degree if reg_index is None else reg_index
        return cls(numerator.nvars, {denom_power: numerator}, base, degree, reg)

    # -- structure --------------------------------------------------------
    @property
    def n(self) -> int:
        return self.nvars // 2

    def is_zero(self) -> bool:
        return not self.parts

    @property
    def denom_powers(self) -> list[int]:
        return sorted(self.parts)

    @property
    def numerator(self) -> TermBundle:
        """Numerator of a single-power component."""
        if not self.parts:
            return TermBundle.zero(self.nvars)
        if len(self.parts) != 1:
            raise ValueError("component has several denominator powers")
        return next(iter(self.parts.values()))

    @property
    def denom_power(self) -> int:
        if len(self.parts) != 1:
            raise ValueError("component does not have a single denominator power")
        return next(iter(self.parts))

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomogeneousComponent):
            return NotImplemented
        if self.parts != other.parts or self.nvars != other.nvars:
            return False
        if self.parts and any(M != 0 for M in self.parts) and self.base != other.base:
            return False
        return self.degree == other.degree or not self.parts

    def __hash__(self):
        return hash((self.nvars, frozenset(self.parts.items())))

    def __repr__(self) -> str:
        return f"HomogeneousComponent(deg={self.degree}, reg={self.reg_index}, {self})"

    def __str__(self) -> str:
        if not self.parts:
            return "0"
        out = []
        for M in sorted(self.parts):
            num = str(self.parts[M])
            if M == 0:
                out.append(num)
            else:
                out.append(f"({num})*R^{-M}")
        return " + ".join(out)

    # -- arithmetic -------------------------------------------------------
    def _like(self, parts, base=None, degree=None, reg=None) -> "HomogeneousComponent":
        return HomogeneousComponent(
            self.nvars,
            parts,
            self.base if base is None else base,
            self.degree if degree is None else degree,
            self.reg_index if reg is None else reg,
            check=False,
        )

    def __add__(self, other: "HomogeneousComponent") -> "HomogeneousComponent":
        if other.is_zero():
            return self
        if self.is_zero():
            return other._like(other.parts, degree=self.degree, reg=self.reg_index)
        if other.degree != self.degree:
            raise ValueError("cannot add components of different degree")
        base = _merge_base(self.base, other.base)
        return self._like(_add_parts(self.parts, other.parts), base=base)

    def __neg__(self) -> "HomogeneousComponent":
        return self._like({M: -v for M, v in self.parts.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "HomogeneousComponent":
        return self._like({M: v.scale(c) for M, v in self.parts.items()})

    def __mul__(self, other: "HomogeneousComponent") -> "HomogeneousComponent":
        if not isinstance(other, HomogeneousComponent):
            return self.scale(other)
        base = _merge_base(self.base, other.base)
        deg = self.degree + other.degree
        reg = self.reg_index + other.reg_index
        parts: dict = {}
        for M1, a in self.parts.items():
            for M2, b in other.parts.items():
                parts = _add_parts(parts, {M1 + M2: a * b})
        return HomogeneousComponent(self.nvars, parts, base, deg, reg, check=False)

    def times_bundle(self, b: TermBundle, reg_shift=None) -> "HomogeneousComponent":
        """Multiply by a mu-independent homogeneous bundle."""
        if b.is_zero():
            return self._like({}, degree=self.degree, reg=self.reg_index)
        g = b.degree
        return HomogeneousComponent(
            self.nvars,
            {M: v * b for M, v in self.parts.items()},
            self.base,
            self.degree + g,
            self.reg_index + (g if reg_shift is None else reg_shift),
            check=False,
        )

    def differentiate(self, var: int, kind: str = "d") -> "HomogeneousComponent":
        """Derivative in ``z_var``; degree and reg index both drop by one."""
        parts: dict = {}
        dP = None
        for M, num in self.parts.items():
            parts = _add_parts(parts, {M: num.differentiate(var, kind)})
            if M:
                if dP is None:
                    dP = self.base.principal.differentiate(var, kind)
                parts = _add_parts(parts, {M + 1: (num * dP).scale(M)})
        return self._like(parts, degree=self.degree - 1, reg=self.reg_index - 1)

    def with_reg_index(self, reg) -> "HomogeneousComponent":
        return self._like(self.parts, reg=as_fraction(reg))

    # -- numerics ---------------------------------------------------------
    def _evaluators(self, dtype):
        key = np.dtype(dtype).str
        ev = self._evals.get(key)
        if ev is None:
            nums = [(M, BundleEvaluator(self.parts[M], dtype)) for M in sorted(self.parts)]
            pev = BundleEvaluator(self.base.principal, dtype) if self.base is not None else None
            ev = (nums, pev)
            self._evals[key] = ev
        return ev

    def evaluate(self, z, mu, dtype=np.float64) -> np.ndarray:
        """Complex values at points ``z[..., 2n]`` and parameter ``mu`` (broadcast)."""
        rdt = np.dtype(dtype)
        cdt = np.result_type(rdt, np.complex64)
        z = np.asarray(z, dtype=rdt)
        shape = z.shape[:-1]
        if not self.parts:
            return np.zeros(shape, dtype=cdt)
        nums, pev = self._evaluators(rdt)
        r = np.sqrt(np.sum(z * z, axis=-1))
        R = None
        if pev is not None and any(M for M, _ in nums):
            pr, pi = pev(z, r)
            mu = np.asarray(mu, dtype=rdt)
            R = (mu ** self.base.d - pr) - 1j * pi.astype(cdt)
            R = R.astype(cdt)
        terms = []
        for M, ev in nums:
            re, im = ev(z, r)
            val = re.astype(cdt) + 1j * im.astype(cdt)
            if M > 0:
                val = val / R**M
            elif M < 0:
                val = val * R ** (-M)
            terms.append(np.broadcast_to(val, np.broadcast_shapes(val.shape, shape)))
        return neumaier_sum(terms)


@dataclass(frozen=True)
class CutoffSpec:
    """Excision function in ``|z|``: 0 for ``|z| <= r0``, 1 for ``|z| >= r1``.

    ``profile="smooth"`` uses the ``exp(-1/t)`` step, ``"sharp"`` the
    indicator of ``|z| >= r1``.
    """

    r0: float = 0.5
    r1: float = 1.0
    profile: str = "smooth"

    def __post_init__(self):
        if self.profile not in ("smooth", "sharp"):
            raise ValueError("profile must be 'smooth' or 'sharp'")
        if not (0 < self.r0 < self.r1):
            raise ValueError("need 0 < r0 < r1")

    def breakpoints(self) -> tuple[float, ...]:
        return (self.r1,) if self.profile == "sharp" else (self.r0, self.r1)

    def __call__(self, r):
        r = np.asarray(r)
        dt = r.dtype if np.issubdtype(r.dtype, np.floating) else np.float64
        r = r.astype(dt)
        if self.profile == "sharp":
            return (r >= dt.type(self.r1)).astype(dt)
        r0, r1 = dt.type(self.r0), dt.type(self.r1)
        t = np.clip((r - r0) / (r1 - r0), 0, 1)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            f = np.where(t > 0, np.exp(-1 / np.where(t > 0, t, 1)), 0)
            g = np.where(t < 1, np.exp(-1 / np.where(t < 1, 1 - t, 1)), 0)
            out = f / (f + g)
        return out.astype(dt)

    def to_dict(self) -> dict:
        return {"r0": self.r0, "r1": self.r1, "profile": self.profile}


@dataclass(frozen=True)
class SymbolExpansion:
    """Truncated poly-homogeneous symbol; component ``j`` has degree ``order - j``."""

    order: Fraction
    reg: Fraction
    components: tuple[HomogeneousComponent, ...]
    cutoff: CutoffSpec | None = None
    n: int = 1
    # True when every component beyond J is known to vanish
    exact: bool = False

    def __post_init__(self):
        object.__setattr__(self, "order", as_fraction(self.order))
        object.__setattr__(self, "reg", as_fraction(self.reg))
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        for j, c in enumerate(comps):
            if c.nvars != 2 * self.n:
                raise ValueError("component has wrong variable count")
            if not c.is_zero() and c.degree != self.order - j:
                raise ValueError(f"component {j} has degree {c.degree}, expected {self.order - j}")

    @property
    def nvars(self) -> int:
        return 2 * self.n

    @property
    def J(self) -> int:
        return len(self.components)

    @property
    def remainder_order(self) -> tuple[Fraction, Fraction]:
        return (self.order - self.J, self.reg - self.J)

    @property
    def base(self) -> DenominatorBase | None:
        base = None
        for c in self.components:
            if c.parts and any(M != 0 for M in c.parts):
                base = _merge_base(base, c.base)
        return base

    def component(self, j: int) -> HomogeneousComponent:
        if j < self.J:
            return self.components[j]
        return HomogeneousComponent.zero(self.nvars, self.order - j, self.reg - j, self.base)

    def truncate(self, J: int) -> "SymbolExpansion":
        comps = [self.component(j) for j in range(J)]
        exact = self.exact and all(c.is_zero() for c in self.components[J:])
        return SymbolExpansion(self.order, self.reg, tuple(comps), self.cutoff, self.n, exact)

    def with_cutoff(self, cutoff: CutoffSpec | None) -> "SymbolExpansion":
        return SymbolExpansion(self.order, self.reg, self.components, cutoff, self.n, self.exact)

    def is_mu_independent(self) -> bool:
        return all(set(c.parts) <= {0} for c in self.components)

    def evaluate(self, z, mu, dtype=np.float64, cutoff: bool = True) -> np.ndarray:
        """``chi(|z|) * sum_j a_j(z, mu)``, complex."""
        rdt = np.dtype(dtype)
        z = np.asarray(z, dtype=rdt)
        vals = [c.evaluate(z, mu, rdt) for c in self.components if not c.is_zero()]
        cdt = np.result_type(rdt, np.complex64)
        shape = np.broadcast_shapes(z.shape[:-1], np.shape(mu))
        if not vals:
            return np.zeros(shape, dtype=cdt)
        total = neumaier_sum([np.broadcast_to(v, shape) for v in vals])
        if cutoff and self.cutoff is not None:
            r = np.sqrt(np.sum(z * z, axis=-1))
            total = total * self.cutoff(r)
        return total

    def __str__(self) -> str:
        rows = [f"SymbolExpansion(order={self.order}, reg={self.reg}, J={self.J})"]
        for j, c in enumerate(self.components):
            rows.append(f"  [{j}] {c}")
        return "\n".join(rows)

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_bundle(cls, bundle: TermBundle, order=None, J: int | None = None, cutoff=None, reg=None):
        """mu-independent symbol from a bundle split into homogeneous parts."""
        parts = bundle.homogeneous_parts()
        n = bundle.nvars // 2
        if order is None:
            if not parts:
                raise ValueError("order of the zero symbol must be given")
            order = max(parts)
        order = as_fraction(order)
        reg = order if reg is None else as_fraction(reg)
        depth = 0
        for g in parts:
            k = order - g
            if k < 0 or k.denominator != 1:
                raise ValueError(f"homogeneous part of degree {g} does not fit order {order}")
            depth = max(depth, int(k) + 1)
        J = depth if J is None else J
        comps = []
        for j in range(J):
            g = order - j
            if g in parts:
                comps.append(HomogeneousComponent(bundle.nvars, {0: parts[g]}, None, g, reg - j))
            else:
                comps.append(HomogeneousComponent.zero(bundle.nvars, g, reg - j))
        return cls(order, reg, tuple(comps), cutoff, n, exact=J >= depth)


@dataclass(frozen=True)
class EllipticOperator:
    """Differential symbol ``p0 = sum_l p0^(d-l)`` with ``p0^(d-l)`` of degree ``d-l``."""

    n: int
    d: int
    components: tuple[TermBundle, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) != self.d + 1:
            raise ValueError("need components for degrees d, d-1, .., 0")
        for l, c in enumerate(comps):
            if c.nvars != 2 * self.n:
                raise ValueError("component has wrong variable count")
            if not c.is_polynomial:
                raise ValueError("operator components must be polynomial")
            if not c.is_zero() and c.degree != self.d - l:
                raise ValueError(f"component {l} must be homogeneous of degree {self.d - l}")
        if comps[0].is_zero():
            raise ValueError("principal component must be non-zero")

    @classmethod
    def from_bundle(cls, p0: TermBundle, d: int | None = None) -> "EllipticOperator":
        if not p0.is_polynomial:
            raise ValueError("p0 must be polynomial")
        parts = p0.homogeneous_parts()
        if not parts:
            raise ValueError("p0 must be non-zero")
        if d is None:
            d = int(max(parts))
        for g in parts:
            if g > d or g < 0:
                raise ValueError(f"p0 has a part of degree {g} outside 0..{d}")
        comps = [parts.get(Fraction(d - l), TermBundle.zero(p0.nvars)) for l in range(d + 1)]
        return cls(p0.nvars // 2, d, tuple(comps))

    @classmethod
    def harmonic_oscillator(cls, n: int = 1) -> "EllipticOperator":
        """``p0 = -(|x|**2 + |xi|**2)``."""
        zs = TermBundle.variables(n)
        p = TermBundle.zero(2 * n)
        for v in zs:
            p = p - v * v
        return cls.from_bundle(p, 2)

    @property
    def nvars(self) -> int:
        return 2 * self.n

    @property
    def principal(self) -> TermBundle:
        return self.components[0]

    @property
    def polynomial(self) -> TermBundle:
        out = TermBundle.zero(self.nvars)
        for c in self.components:
            out = out + c
        return out

    @property
    def base(self) -> DenominatorBase:
        return DenominatorBase(self.n, self.d, self.principal)

    def resolvent_symbol(self) -> SymbolExpansion:
        """``mu**d - p0`` as a symbol of order ``(d, 0)``."""
        base = self.base
        nv = self.nvars
        comps = [HomogeneousComponent(nv, {-1: TermBundle.one(nv)}, base, self.d, 0)]
        for l in range(1, self.d + 1):
            c = self.components[l]
            if c.is_zero():
                comps.append(HomogeneousComponent.zero(nv, self.d - l, -l, base))
            else:
                comps.append(HomogeneousComponent(nv, {0: -c}, base, self.d - l, -l))
        return SymbolExpansion(self.d, 0, tuple(comps), None, self.n, exact=True)


@dataclass(frozen=True)
class MuEntry:
    ell: Fraction
    symbol: TermBundle
    mu_exponent: Fraction


@dataclass(frozen=True)
class MuExpansion:
    """``a_j(z, mu) = sum_l q_{j,l}(z) mu**(d-nu-l) + O(mu**rem_exp |z|**rem_rad)``."""

    entries: tuple[MuEntry, ...]
    remainder_exponent: Fraction
    remainder_radial_degree: Fraction
    degree: Fraction = Fraction(0)

    def by_level(self) -> dict[Fraction, TermBundle]:
        return {e.ell: e.symbol for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterable[MuEntry]:
        return iter(self.entries)
