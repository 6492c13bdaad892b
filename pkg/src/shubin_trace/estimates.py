"""Numerical check of the defining symbol estimates by finite differences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import multi_indices
from .symbols import HomogeneousComponent, SymbolExpansion

__all__ = ["EstimateGrid", "EstimateReport", "default_estimate_grid", "check_symbol_estimates"]


@dataclass(frozen=True)
class EstimateGrid:
    """Tensor grid: ``z_axis`` values in every coordinate, times ``mu`` values."""

    z_axis: tuple[float, ...]
    mu: tuple[float, ...]

    def points(self, m: int) -> np.ndarray:
        axes = [np.asarray(self.z_axis, dtype=float)] * m
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=-1)


def default_estimate_grid(z_points: int = 20, mu_points: int = 10) -> EstimateGrid:
    """Symmetric log-spaced coordinates with ``|z_i| >= 1`` and ``mu`` in ``{0} u [0.1, 1e4]``."""
    half = np.logspace(0, 2, z_points // 2)
    z = np.concatenate([-half[::-1], half])
    mu = np.concatenate([[0.0], np.logspace(-1, 4, mu_points - 1)])
    return EstimateGrid(tuple(z), tuple(mu))


@dataclass
class EstimateReport:
    passed: bool
    max_ratio: float
    ceiling: float
    ratios: dict = field(default_factory=dict)  # (alpha, j) -> max ratio
    worst: tuple = ()  # (alpha, j, z, mu)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_ratio": self.max_ratio,
            "ceiling": self.ceiling,
            "ratios": {f"{list(k[0])},{k[1]}": v for k, v in self.ratios.items()},
        }


def _as_function(a) -> Callable:
    if isinstance(a, (SymbolExpansion, HomogeneousComponent)):
        return lambda z, mu: a.evaluate(z, mu)
    if callable(a):
        return a
    raise TypeError("symbol must be a SymbolExpansion, HomogeneousComponent or callable")


def _fd(f: Callable, var: int, m: int, rel_step: float) -> Callable:
    """Central difference in ``z_var`` (``var < m``) or ``mu`` (``var == m``), one Richardson step."""

    def g(z, mu):
        coord = mu if var == m else z[..., var]
        h = rel_step * np.maximum(np.abs(coord), 1.0)

        def central(step):
            if var == m:
                return (f(z, mu + step) - f(z, mu - step)) / (2 * step)
            zp = z.copy()
            zm = z.copy()
            zp[..., var] += step
            zm[..., var] -= step
            return (f(zp, mu) - f(zm, mu)) / (2 * step)

        d1 = central(h)
        d2 = central(h / 2)
        return (4 * d2 - d1) / 3

    return g


def check_symbol_estimates(
    a,
    d,
    nu,
    grid: EstimateGrid | None = None,
    max_order: int = 1,
    ceiling: float = 1e3,
    rel_step: float = 1e-4,
    m: int | None = None,
) -> EstimateReport:
    """Max over the grid of ``|D_z^alpha D_mu^j a| / (<z>^(nu-|alpha|) <z,mu>^(d-nu-j))``.

    PASS iff every ratio is finite and at most ``ceiling``.
    """
    if m is None:
        if not isinstance(a, (SymbolExpansion, HomogeneousComponent)):
            raise ValueError("dimension m is required for callables")
        m = a.nvars
    grid = grid or default_estimate_grid()
    f0 = _as_function(a)
    z = grid.points(m)[:, None, :]
    mu = np.asarray(grid.mu, dtype=float)[None, :]
    r2 = np.sum(z * z, axis=-1)
    jz = np.sqrt(1 + r2)
    jzm = np.sqrt(1 + r2 + mu * mu)
    d, nu = float(d), float(nu)
    ratios: dict = {}
    worst = ()
    best = -np.inf
    for order in range(max_order + 1):
        for idx in multi_indices(m + 1, order):
            alpha, j = idx[:m], idx[m]
            f = f0
            for var, count in enumerate(idx):
                for _ in range(count):
                    f = _fd(f, var, m, rel_step)
            val = np.abs(f(np.broadcast_to(z, z.shape[:1] + mu.shape[1:] + z.shape[-1:]).copy(), mu))
            weight = jz ** (nu - sum(alpha)) * jzm ** (d - nu - j)
            ratio = val / weight
            rmax = float(np.max(ratio)) if np.all(np.isfinite(ratio)) else float("inf")
            ratios[(tuple(alpha), j)] = rmax
            if rmax > best:
                best = rmax
                k = np.unravel_index(int(np.nanargmax(np.where(np.isfinite(ratio), ratio, np.inf))), ratio.shape)
                worst = (tuple(alpha), j, tuple(z[k[0], 0]), float(mu[0, k[1]]))
    passed = bool(np.isfinite(best) and best <= ceiling)
    return EstimateReport(passed, best, ceiling, ratios, worst)
