"""Quadrature and Riemann-Stieltjes sums on gridded paths.

dt-integrals use the trapezoidal rule. Stieltjes integrals use left-point
sums, evaluated as the correctly rounded value of the exact sum of the
grid-value products (error-free products fed to ``math.fsum``). With that
evaluation the integration-by-parts residual and the discrete quadratic
covariation are the correctly rounded value of the same real number, hence
bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sampler import TimeGrid

__all__ = [
    "GridMismatch",
    "GriddedFunction",
    "integrate_dt",
    "cumulative_dt",
    "integrate_rs",
    "ibp_residual",
    "quadratic_covariation",
]

_SPLITTER = 134217729.0  # 2**27 + 1


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GriddedFunction:
    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(f"expected {self.grid.n + 1} values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: TimeGrid, f) -> "GriddedFunction":
        return cls(grid, np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), (grid.n + 1,)).copy())

    def __len__(self):
        return self.grid.n + 1


def _same_grid(*fs: GriddedFunction) -> TimeGrid:
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise GridMismatch(f"grids differ: {grid} vs {f.grid}")
    return grid


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    """Dekker's error-free product: a*b == p + e exactly (barring over/underflow)."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _exact_sum(*signed_products) -> float:
    """Correctly rounded value of sum(sign * a_k * b_k) over all given triples."""
    parts = []
    for sign, a, b in signed_products:
        p, e = _two_prod(np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float)))
        if sign < 0:
            p, e = -p, -e
        parts.append(p)
        parts.append(e)
    return math.fsum(np.concatenate(parts).tolist())


def integrate_dt(f: GriddedFunction) -> float:
    """Trapezoidal rule over the whole grid, compensated summation."""
    v = f.values
    s = math.fsum(v[1:-1].tolist()) + 0.5 * (v[0] + v[-1])
    return s * f.grid.step


def cumulative_dt(f: GriddedFunction) -> GriddedFunction:
    v = f.values
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * (v[1:] + v[:-1]) * f.grid.step, out=out[1:])
    return GriddedFunction(f.grid, out)


def integrate_rs(f: GriddedFunction, g: GriddedFunction) -> float:
    """Left-point sum of f_i (g_{i+1} - g_i)."""
    _same_grid(f, g)
    fv, gv = f.values, g.values
    return _exact_sum((1, fv[:-1], gv[1:]), (-1, fv[:-1], gv[:-1]))


def ibp_residual(f: GriddedFunction, g: GriddedFunction) -> float:
    """f_n g_n - f_0 g_0 - int g df - int f dg with left-point sums."""
    _same_grid(f, g)
    fv, gv = f.values, g.values
    return _exact_sum(
        (1, fv[-1], gv[-1]),
        (-1, fv[0], gv[0]),
        (-1, gv[:-1], fv[1:]),
        (1, gv[:-1], fv[:-1]),
        (-1, fv[:-1], gv[1:]),
        (1, fv[:-1], gv[:-1]),
    )


def quadratic_covariation(f: GriddedFunction, g: GriddedFunction) -> float:
    """Sum of (f_{i+1} - f_i)(g_{i+1} - g_i), expanded and summed exactly."""
    _same_grid(f, g)
    fv, gv = f.values, g.values
    return _exact_sum(
        (1, fv[1:], gv[1:]),
        (-1, fv[1:], gv[:-1]),
        (-1, fv[:-1], gv[1:]),
        (1, fv[:-1], gv[:-1]),
    )
