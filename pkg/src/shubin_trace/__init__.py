"""Symbolic-numeric resolvent parametrices and resolvent trace expansions for Shubin operators."""

from .calculus import (
    EllipticityCertificate,
    EllipticityError,
    check_ellipticity,
    leibniz_product,
    leibniz_truncated,
    parametrix,
    symbol_power,
)
from .config import ConfigError, RunConfig, harmonic_oscillator_config
from .estimates import EstimateReport, check_symbol_estimates, default_estimate_grid
from .limits import (
    PARAMETRIX_BRACE_SIGN_NOTE,
    b_matrix,
    brace_coefficients,
    brace_to_bracket,
    bracket_coefficients,
    bracket_to_brace,
    mu_series,
)
from .oracle import compare_expansions, oscillator_expansion_reference, oscillator_trace
from .poly import GaussianRational, GeneralizedMonomial, TermBundle
from .quadrature import PiMultiple, gauss_kronrod, sphere_integral_exact
from .symbols import CutoffSpec, EllipticOperator, HomogeneousComponent, SymbolExpansion
from .trace import (
    Coefficient,
    QuadratureSpec,
    TraceExpansion,
    log_coefficients,
    power_coefficients,
    resolvent_trace_expansion,
    symbol_trace_expansion,
)

__version__ = "0.1.0"

__all__ = sorted(
    name for name, obj in globals().items() if not name.startswith("_") and not isinstance(obj, type(__import__("sys")))
)
