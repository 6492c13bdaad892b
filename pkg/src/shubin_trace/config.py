"""Run configuration: JSON schema, validation and round-trip."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .poly import TermBundle, as_fraction
from .symbols import CutoffSpec, EllipticOperator, SymbolExpansion
from .trace import QuadratureSpec, geometric_grid

__all__ = ["CONFIG_SCHEMA", "ConfigError", "RunConfig", "harmonic_oscillator_config"]

CONFIG_SCHEMA = "shubin-trace/run-config/1"


class ConfigError(ValueError):
    """Invalid run configuration."""


def _num(v) -> str:
    """Exact rational as a ``"p/q"`` string."""
    return str(as_fraction(v))


def _terms_to_json(b: TermBundle) -> list:
    return [[str(c.re), str(c.im), list(e), str(s)] for e, s, c in b.items()]


def _terms_from_json(rows, nvars: int, what: str) -> TermBundle:
    if not isinstance(rows, list):
        raise ConfigError(f"{what}: expected a list of [re, im, exponents, radial] terms")
    for row in rows:
        if not (isinstance(row, list) and len(row) == 4 and isinstance(row[2], list)):
            raise ConfigError(f"{what}: bad term {row!r}")
        if len(row[2]) != nvars:
            raise ConfigError(f"{what}: exponent vector {row[2]} must have {nvars} entries")
    try:
        return TermBundle.from_list(rows, nvars)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


@dataclass
class RunConfig:
    n: int
    d: int
    p0: TermBundle
    q: TermBundle
    q_order: Fraction
    N: int
    J: int
    L: int
    cutoff: CutoffSpec | None = field(default_factory=CutoffSpec)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    oracle_enabled: bool = False
    oracle_tolerances: tuple = (1e-8, 1e-6, 1e-4)
    ellipticity_eps: float = 1e-9
    seed: int = 0
    outputs: dict = field(
        default_factory=lambda: {"results": "results.json", "coefficients": "coefficients.csv", "samples": "samples.csv"}
    )

    # -- derived objects --------------------------------------------------
    def operator(self) -> EllipticOperator:
        return EllipticOperator.from_bundle(self.p0, self.d)

    def q_symbol(self) -> SymbolExpansion:
        return SymbolExpansion.from_bundle(self.q, order=self.q_order)

    def is_harmonic_oscillator(self) -> bool:
        ho = EllipticOperator.harmonic_oscillator(self.n).polynomial
        return self.d == 2 and self.p0 == ho and self.q == TermBundle.one(2 * self.n) and self.q_order == 0

    # -- validation -------------------------------------------------------
    def validate(self) -> "RunConfig":
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.d < 1:
            raise ConfigError("d must be a positive integer")
        if self.N < 1 or self.J < 1 or self.L < 1:
            raise ConfigError("N, J and L must be >= 1")
        try:
            self.operator()
        except ValueError as exc:
            raise ConfigError(f"p0: {exc}") from exc
        try:
            self.q_symbol()
        except ValueError as exc:
            raise ConfigError(f"q: {exc}") from exc
        if self.q_order - self.d * self.N >= -2 * self.n:
            raise ConfigError(
                f"omega - d*N = {self.q_order - self.d * self.N} must be < -2n = {-2 * self.n}"
            )
        if self.oracle_enabled:
            if not self.is_harmonic_oscillator():
                raise ConfigError("the oracle applies only to p0 = -(|x|^2 + |xi|^2), q = 1")
            if self.N <= self.n:
                raise ConfigError("oracle trace diverges for N <= n")
            if not self.oracle_tolerances:
                raise ConfigError("oracle tolerances must be non-empty")
            # lambda**(n - N - k) comes from component j = d k
            need = self.d * (len(self.oracle_tolerances) - 1) + 1
            if self.J < need:
                raise ConfigError(f"{len(self.oracle_tolerances)} oracle rows need J >= {need}")
        return self

    # -- JSON -------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "n": self.n,
            "d": self.d,
            "p0": _terms_to_json(self.p0),
            "q": {"order": _num(self.q_order), "terms": _terms_to_json(self.q)},
            "N": self.N,
            "J": self.J,
            "L": self.L,
            "cutoff": None if self.cutoff is None else self.cutoff.to_dict(),
            "quadrature": self.quadrature.to_dict(),
            "oracle": {"enabled": self.oracle_enabled, "tolerances": list(self.oracle_tolerances)},
            "ellipticity_eps": self.ellipticity_eps,
            "seed": self.seed,
            "outputs": dict(self.outputs),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        schema = data.get("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported schema {schema!r}")
        known = {
            "schema", "n", "d", "p0", "q", "N", "J", "L", "cutoff", "quadrature",
            "oracle", "ellipticity_eps", "seed", "outputs",
        }
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown keys: {sorted(extra)}")
        try:
            n = int(data["n"])
            d = int(data["d"])
            N = int(data["N"])
            J = int(data["J"])
            L = int(data["L"])
        except KeyError as exc:
            raise ConfigError(f"missing key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if n < 1:
            raise ConfigError("n must be >= 1")
        nv = 2 * n
        if "p0" not in data:
            raise ConfigError("missing key 'p0'")
        p0 = _terms_from_json(data["p0"], nv, "p0")
        qd = data.get("q") or {"order": "0", "terms": [["1", "0", [0] * nv, "0"]]}
        try:
            q_order = as_fraction(qd.get("order", "0"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"q.order: {exc}") from exc
        q = _terms_from_json(qd.get("terms", []), nv, "q")
        cd = data.get("cutoff", {"r0": 0.5, "r1": 1.0, "profile": "smooth"})
        try:
            cutoff = None if cd is None else CutoffSpec(float(cd["r0"]), float(cd["r1"]), cd.get("profile", "smooth"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cutoff: {exc}") from exc
        qs = dict(data.get("quadrature", {}))
        try:
            if "mu_grid" in qs and isinstance(qs["mu_grid"], dict):
                g = qs["mu_grid"]
                qs["mu_grid"] = geometric_grid(float(g["min"]), float(g["max"]), int(g["count"]))
            if qs.get("fit_levels") is not None:
                qs["fit_levels"] = tuple(as_fraction(v) for v in qs["fit_levels"])
            if "mu_grid" in qs:
                qs["mu_grid"] = tuple(float(v) for v in qs["mu_grid"])
            quad = QuadratureSpec(**qs)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"quadrature: {exc}") from exc
        od = data.get("oracle", {}) or {}
        outputs = {"results": "results.json", "coefficients": "coefficients.csv", "samples": "samples.csv"}
        outputs.update(data.get("outputs", {}) or {})
        try:
            cfg = cls(
                n=n,
                d=d,
                p0=p0,
                q=q,
                q_order=q_order,
                N=N,
                J=J,
                L=L,
                cutoff=cutoff,
                quadrature=quad,
                oracle_enabled=bool(od.get("enabled", False)),
                oracle_tolerances=tuple(float(t) for t in od.get("tolerances", (1e-8, 1e-6, 1e-4))),
                ellipticity_eps=float(data.get("ellipticity_eps", 1e-9)),
                seed=int(data.get("seed", 0)),
                outputs=outputs,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def harmonic_oscillator_config(n: int = 1, N: int = 2, J: int = 6, L: int = 8, **kw) -> RunConfig:
    """Default oracle run for ``p0 = -(|x|^2 + |xi|^2)``, ``q = 1``."""
    p0 = EllipticOperator.harmonic_oscillator(n).polynomial
    cfg = RunConfig(
        n=n, d=2, p0=p0, q=TermBundle.one(2 * n), q_order=Fraction(0), N=N, J=J, L=L, oracle_enabled=True, **kw
    )
    return cfg.validate()
