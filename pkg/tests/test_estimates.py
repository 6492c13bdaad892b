import numpy as np

from shubin_trace.calculus import parametrix
from shubin_trace.estimates import EstimateGrid, check_symbol_estimates, default_estimate_grid
from shubin_trace.poly import TermBundle
from shubin_trace.symbols import EllipticOperator, HomogeneousComponent, SymbolExpansion

x, xi = TermBundle.variables(1)
HO = EllipticOperator.harmonic_oscillator(1)


def test_default_grid_shape():
    g = default_estimate_grid()
    assert len(g.z_axis) == 20 and len(g.mu) == 10
    assert min(abs(v) for v in g.z_axis) >= 1
    assert g.points(2).shape == (400, 2)


def test_resolvent_passes():
    rinv = HomogeneousComponent(2, {1: TermBundle.one(2)}, HO.base, -2, 0)
    rep = check_symbol_estimates(rinv, -2, 0)
    assert rep.passed and np.isfinite(rep.max_ratio)


def test_mu_squared_with_wrong_order_fails():
    rep = check_symbol_estimates(lambda z, mu: mu**2 + 0 * z[..., 0], 1, 0, m=2)
    assert not rep.passed


def test_polynomial_of_matching_degree_passes():
    rep = check_symbol_estimates(SymbolExpansion.from_bundle(x**2 + xi**2), 2, 2)
    assert rep.passed


def test_underclaimed_order_fails():
    # ratio grows like |z|**2, beyond the ceiling at the edge of the grid
    rep = check_symbol_estimates(SymbolExpansion.from_bundle((x**2 + xi**2) ** 2), 2, 2)
    assert not rep.passed


def test_first_order_ratios_cover_every_derivative():
    rep = check_symbol_estimates(parametrix(HO, 1), -2, 0, max_order=1)
    assert len(rep.ratios) == 1 + 3


def test_report_serializes():
    grid = EstimateGrid((1.0, 2.0), (0.0, 1.0))
    rep = check_symbol_estimates(SymbolExpansion.from_bundle(x), 1, 1, grid)
    d = rep.to_dict()
    assert d["passed"] and d["ceiling"] == 1e3
