"""Batch driver: config -> ellipticity -> parametrix -> trace expansion -> oracle."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .calculus import EllipticityError
from .config import ConfigError, RunConfig
from .limits import PARAMETRIX_BRACE_SIGN_NOTE, mu_series
from .oracle import OracleReport, compare_expansions, oscillator_expansion_reference
from .quadrature import QuadratureError, sphere_integral_exact, sphere_monte_carlo
from .trace import IllConditionedError, TraceExpansion, resolvent_trace_expansion

__all__ = ["RunResult", "run", "main", "RESULT_SCHEMA"]

RESULT_SCHEMA = "shubin-trace/run-result/1"
log = logging.getLogger("shubin_trace")


@dataclass
class RunResult:
    expansion: TraceExpansion
    oracle: OracleReport | None
    diagnostics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    config: RunConfig | None = None

    def to_dict(self) -> dict:
        """Deterministic serialization; timing is excluded."""
        return {
            "schema": RESULT_SCHEMA,
            "config": self.config.to_dict() if self.config else None,
            "expansion": self.expansion.to_dict(),
            "oracle": None if self.oracle is None else self.oracle.to_dict(),
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(np.real(x)), float(np.imag(x))]
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _monte_carlo_checks(te: TraceExpansion, seed: int, count: int = 3) -> list:
    """Seeded Monte-Carlo cross-check of the first few exact sphere moments used."""
    a = te.symbol
    rows = []
    if a is None:
        return rows
    m = a.nvars
    seen = set()
    for c in a.components:
        for e in mu_series(c, 4):
            for t in e.symbol.terms:
                if t.exponents in seen:
                    continue
                seen.add(t.exponents)
                exact = complex(sphere_integral_exact(t.exponents, m)).real
                mean, se = sphere_monte_carlo(t.exponents, m, samples=100_000, seed=seed + len(rows))
                rows.append(
                    {
                        "exponents": list(t.exponents),
                        "exact": exact,
                        "monte_carlo": mean,
                        "stderr": se,
                        "within_4_sigma": abs(mean - exact) <= 4 * se + 1e-15,
                    }
                )
                if len(rows) >= count:
                    return rows
    return rows


def run(config: RunConfig, seed: int | None = None) -> RunResult:
    """Execute the pipeline; raises on validation or computational failure."""
    config.validate()
    seed = config.seed if seed is None else seed
    timing = {}
    t0 = time.perf_counter()
    te = resolvent_trace_expansion(
        config.operator(),
        config.q_symbol(),
        config.N,
        config.J,
        config.L,
        config.quadrature,
        config.cutoff,
        config.ellipticity_eps,
    )
    timing["expansion"] = time.perf_counter() - t0
    report = None
    if config.oracle_enabled:
        ref = oscillator_expansion_reference(config.N, len(config.oracle_tolerances), config.n)
        report = compare_expansions(te, ref, list(config.oracle_tolerances))
    diagnostics = {
        "ellipticity": te.diagnostics.get("ellipticity", {}),
        "quadrature_errors": {str(j): c.error for j, c in sorted(te.power_coeffs.items())},
        "fit": te.diagnostics.get("fit", {}),
        "const_component_share": te.diagnostics.get("const_component_share", {}),
        "power_split": te.diagnostics.get("power_split", {}),
        "discrepancy_notes": [
            PARAMETRIX_BRACE_SIGN_NOTE,
            "lambda_view combines c_j and c'_l; fitted c''_l refer to the cutoff-truncated symbol",
        ],
        "monte_carlo": {"seed": seed, "checks": _monte_carlo_checks(te, seed)},
    }
    timing["total"] = time.perf_counter() - t0
    return RunResult(te, report, diagnostics, timing, config)


def coefficient_rows(te: TraceExpansion) -> list[list]:
    bd = te.base_d
    rows = [["family", "index", "mu_exponent", "lambda_exponent", "re", "im", "provenance", "error", "exact"]]
    for fam, coeffs, expo in (
        ("c", te.power_coeffs, te.power_exponent),
        ("c_log", te.log_coeffs, te.level_exponent),
        ("c_const", te.const_coeffs, te.level_exponent),
    ):
        for k, c in sorted(coeffs.items()):
            e = expo(k)
            v = complex(c.value)
            exact = "" if c.exact is None else str(c.exact)
            rows.append([fam, str(k), str(e), str(e / bd), repr(v.real), repr(v.imag), c.provenance, repr(float(c.error)), exact])
    return rows


def sample_rows(te: TraceExpansion) -> list[list]:
    rows = [["mu", "re", "im", "quad_error", "model_re", "model_im", "residual_abs"]]
    for mu, v, e in te.samples:
        mod = complex(te.model(mu))
        v = complex(v)
        rows.append([repr(float(mu)), repr(v.real), repr(v.imag), repr(float(e)), repr(mod.real), repr(mod.imag), repr(abs(v - mod))])
    return rows


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def write_outputs(result: RunResult, out_dir: Path, emit: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    names = result.config.outputs if result.config else {}
    written = []
    if emit in ("json", "all"):
        p = out_dir / names.get("results", "results.json")
        p.write_text(result.to_json())
        written.append(p)
    if emit in ("csv", "all"):
        p = out_dir / names.get("coefficients", "coefficients.csv")
        p.write_text(_csv_text(coefficient_rows(result.expansion)))
        written.append(p)
        p = out_dir / names.get("samples", "samples.csv")
        p.write_text(_csv_text(sample_rows(result.expansion)))
        written.append(p)
    return written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shubin-trace", description="Resolvent trace expansion for Shubin-class operators.")
    ap.add_argument("--config", required=True, type=Path, help="run configuration (JSON)")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--emit", choices=("json", "csv", "all"), default="all")
    ap.add_argument("--seed", type=int, default=None, help="seed for Monte-Carlo checks")
    ap.add_argument("--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = RunConfig.from_json(text)
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(config, seed=args.seed)
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except EllipticityError as exc:
        c = exc.certificate
        print(f"computational failure: {exc}", file=sys.stderr)
        print(f"witness: z = {[float(v) for v in c.witness]}, p0^(d)(z) = {c.witness_value}", file=sys.stderr)
        return 1
    except (QuadratureError, IllConditionedError, ArithmeticError) as exc:
        print(f"computational failure: {exc}", file=sys.stderr)
        return 1
    for p in write_outputs(result, args.out, args.emit):
        log.info("wrote %s", p)
    for k, v in result.timing.items():
        log.info("time %s: %.3fs", k, v)
    if result.oracle is not None:
        log.info("%s", result.oracle)
        if not result.oracle.passed:
            print("warning: oracle comparison FAILED", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
