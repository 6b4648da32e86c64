import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vasicek_lse.calculus import (
    GriddedFunction,
    GridMismatch,
    cumulative_dt,
    ibp_residual,
    integrate_dt,
    integrate_rs,
    quadratic_covariation,
)
from vasicek_lse.kernels import KernelSpec
from vasicek_lse.sampler import TimeGrid, build_factor, sample_path
from vasicek_lse.vasicek import VasicekParams, solve


def gf(grid, f):
    return GriddedFunction.from_callable(grid, f)


@pytest.mark.parametrize("n", [2, 7, 1000])
def test_trapezoid_exact_for_affine(n):
    assert integrate_dt(gf(TimeGrid(1.0, n), lambda t: t)) == pytest.approx(0.5, abs=1e-15)


def test_trapezoid_square():
    assert integrate_dt(gf(TimeGrid(1.0, 10_000), lambda t: t * t)) == pytest.approx(1 / 3, abs=1e-8)


def test_zero_integrand():
    grid = TimeGrid(3.0, 10)
    assert integrate_dt(gf(grid, np.zeros_like)) == 0.0


def test_cumulative_ends_at_total():
    grid = TimeGrid(2.0, 500)
    f = gf(grid, np.cos)
    c = cumulative_dt(f)
    assert c.values[0] == 0.0
    assert c.values[-1] == pytest.approx(integrate_dt(f), rel=1e-13)


def test_rs_smooth():
    grid = TimeGrid(1.0, 10_000)
    assert integrate_rs(gf(grid, lambda t: t), gf(grid, lambda t: t * t)) == pytest.approx(2 / 3, abs=2e-4)


@settings(max_examples=50)
@given(arrays(np.float64, st.integers(3, 60), elements=st.floats(-1e3, 1e3)))
def test_rs_telescopes_for_unit_integrand(g):
    grid = TimeGrid(1.0, len(g) - 1)
    one = GriddedFunction(grid, np.ones_like(g))
    assert integrate_rs(one, GriddedFunction(grid, g)) == pytest.approx(g[-1] - g[0], abs=1e-9)


def test_covariation_of_identity():
    grid = TimeGrid(1.0, 100)
    t = gf(grid, lambda s: s)
    assert quadratic_covariation(t, t) == pytest.approx(0.01, rel=1e-12)
    assert ibp_residual(t, t) == pytest.approx(0.01, rel=1e-12)


def test_constant_has_no_residual():
    grid = TimeGrid(1.0, 50)
    c = GriddedFunction(grid, np.full(51, 3.7))
    assert ibp_residual(c, c) == 0.0
    assert quadratic_covariation(c, c) == 0.0


@settings(max_examples=100)
@given(
    arrays(np.float64, 30, elements=st.floats(-1e6, 1e6)),
    arrays(np.float64, 30, elements=st.floats(-1e6, 1e6)),
)
def test_residual_equals_covariation_bitwise(f, g):
    grid = TimeGrid(2.0, 29)
    F, G = GriddedFunction(grid, f), GriddedFunction(grid, g)
    assert ibp_residual(F, G) == quadratic_covariation(F, G)


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        integrate_rs(gf(TimeGrid(1.0, 10), np.sin), gf(TimeGrid(1.0, 11), np.sin))
    with pytest.raises(ValueError):
        GriddedFunction(TimeGrid(1.0, 10), np.zeros(5))


def test_ito_style_identity_on_rough_vasicek_path():
    spec = KernelSpec("fbm", 0.7)
    grid = TimeGrid(1.0, 4096)
    x = solve(VasicekParams(1.0, 1.0), sample_path(build_factor(spec, grid), 3)).x
    X = GriddedFunction(grid, x)
    res = ibp_residual(X, X)
    assert abs(integrate_rs(X, X) - 0.5 * x[-1] ** 2) <= abs(res)
    assert abs(res) <= grid.n * np.max(np.diff(x) ** 2)


def test_residual_decays_like_n_power_for_fbm():
    spec = KernelSpec("fbm", 0.75)
    ns = [2**k for k in range(8, 13)]
    means = []
    for n in ns:
        grid = TimeGrid(1.0, n)
        f = build_factor(spec, grid)
        vals = []
        for s in range(40):
            g = GriddedFunction(grid, sample_path(f, s).values)
            r = ibp_residual(g, g)
            assert abs(r) <= n * np.max(np.diff(g.values) ** 2)
            vals.append(r)
        means.append(np.mean(vals))
    slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
    assert slope == pytest.approx(1 - 2 * 0.75, abs=0.1)
