import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vasicek_lse.calculus import GriddedFunction, ibp_residual, integrate_dt
from vasicek_lse.estimators import DegeneratePath, estimate, estimate_values, estimate_young, remainder_RT
from vasicek_lse.kernels import KernelSpec
from vasicek_lse.sampler import GaussianPath, TimeGrid, build_factor, sample_path
from vasicek_lse.vasicek import VasicekParams, explicit_solution, solve

FBM05 = KernelSpec("fbm", 0.5)


def test_zero_path_is_degenerate(zero_driver):
    path = solve(VasicekParams(1.0, 0.0), zero_driver(1.0, 100))
    with pytest.raises(DegeneratePath):
        estimate(path)
    with pytest.raises(DegeneratePath), pytest.warns(RuntimeWarning):
        estimate_young(path)


def test_constant_observations_are_degenerate():
    with pytest.raises(DegeneratePath):
        estimate_values(TimeGrid(2.0, 100), np.full(101, 4.2))


def test_deterministic_path_recovers_parameters(zero_driver):
    est = estimate(solve(VasicekParams(1.0, 1.0), zero_driver(10.0, 2**14)))
    assert 0.99 <= est.theta_hat <= 1.01
    assert 0.9 <= est.mu_hat <= 1.1


def test_closed_form_functionals_on_exponential_path():
    # x = mu (e^{theta t} - 1): all functionals integrate in closed form
    theta, mu, T = 0.7, 1.5, 6.0
    grid = TimeGrid(T, 2**16)
    est = estimate_values(grid, mu * np.expm1(theta * grid.nodes))
    e = math.expm1(theta * T)
    X_T = mu * e
    IX = mu * (e / theta - T)
    IX2 = mu**2 * ((math.exp(2 * theta * T) - 1) / (2 * theta) - 2 * e / theta + T)
    den = T * IX2 - IX**2
    th = (0.5 * T * X_T**2 - X_T * IX) / den
    al = (X_T * IX2 - 0.5 * X_T**2 * IX) / den
    assert est.theta_hat == pytest.approx(th, rel=1e-7)
    assert est.alpha_hat == pytest.approx(al, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_alpha_mu_theta_identity(seed):
    grid = TimeGrid(3.0, 256)
    path = solve(VasicekParams(1.0, 2.0), sample_path(build_factor(KernelSpec("subfbm", 0.4), grid), seed))
    e = estimate(path)
    assert e.alpha_hat == e.mu_hat * e.theta_hat


def test_median_concentration_fbm():
    grid = TimeGrid(10.0, 4096)
    fac = build_factor(FBM05, grid)
    p = VasicekParams(1.0, 2.0)
    est = [estimate(solve(p, sample_path(fac, s))) for s in range(500)]
    assert np.median([e.theta_hat for e in est]) == pytest.approx(1.0, abs=0.02)
    assert np.median([e.mu_hat for e in est]) == pytest.approx(2.0, abs=0.15)


def _young_gap(n, seed):
    grid = TimeGrid(5.0, n)
    path = solve(VasicekParams(1.0, 1.0), sample_path(build_factor(KernelSpec("fbm", 0.75), grid), seed))
    a, b = estimate(path), estimate_young(path)
    X = GriddedFunction(grid, path.x)
    den = grid.T * integrate_dt(GriddedFunction(grid, path.x**2)) - integrate_dt(X) ** 2
    return a, b, grid.T * ibp_residual(X, X) / den


def test_young_and_extended_differ_by_half_the_covariation():
    a, b, bound = _young_gap(4096, 17)
    assert not b.flagged and b.variant == "young"
    assert abs(a.theta_hat - b.theta_hat) <= abs(bound)
    assert a.theta_hat - b.theta_hat == pytest.approx(bound / 2, rel=1e-9)
    assert round(a.theta_hat, 2) == round(b.theta_hat, 2)


def test_young_gap_is_first_order_in_the_step():
    r1 = [abs(a.theta_hat - b.theta_hat) for a, b, _ in (_young_gap(2048, s) for s in range(3))]
    r2 = [abs(a.theta_hat - b.theta_hat) for a, b, _ in (_young_gap(4096, s) for s in range(3))]
    ratio = np.mean(r1) / np.mean(r2)
    assert 1.7 < ratio < 2.6


def test_young_warns_on_rough_driver():
    grid = TimeGrid(2.0, 256)
    path = solve(VasicekParams(1.0, 1.0), sample_path(build_factor(KernelSpec("fbm", 0.4), grid), 1))
    with pytest.warns(RuntimeWarning):
        e = estimate_young(path)
    assert e.flagged


def test_extended_estimator_silent_on_rough_driver():
    grid = TimeGrid(2.0, 256)
    path = solve(VasicekParams(1.0, 1.0), sample_path(build_factor(KernelSpec("fbm", 0.2), grid), 1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not estimate(path).flagged


def test_remainder_zero_driver(zero_driver):
    assert remainder_RT(solve(VasicekParams(1.0, 1.0), zero_driver(4.0, 400))) == 0.0


def test_remainder_matches_numerator_decomposition():
    # X_T^2/2 - (X_T/T) int X = theta (int X^2 - (int X)^2/T) + (mu + theta Z_T) int e^{theta t} dG_t + R_T
    grid = TimeGrid(3.0, 2**15)
    t = grid.nodes
    g = 0.3 * np.sin(2 * t) + 0.1 * t**2
    p = VasicekParams(0.9, 0.6)
    path = explicit_solution(p, GaussianPath(grid, FBM05, g))
    x, T = path.x, grid.T
    IX = integrate_dt(GriddedFunction(grid, x))
    IX2 = integrate_dt(GriddedFunction(grid, x * x))
    Z_T = integrate_dt(GriddedFunction(grid, np.exp(-p.theta * t) * g))
    stoch = math.exp(p.theta * T) * g[-1] - p.theta * integrate_dt(GriddedFunction(grid, np.exp(p.theta * t) * g))
    lhs = 0.5 * x[-1] ** 2 - x[-1] / T * IX
    rhs = p.theta * (IX2 - IX**2 / T) + (p.mu + p.theta * Z_T) * stoch + remainder_RT(path)
    assert lhs == pytest.approx(rhs, rel=1e-7)


def test_remainder_with_zero_mean_drops_mu_terms():
    grid = TimeGrid(2.0, 2**12)
    drv = sample_path(build_factor(FBM05, grid), 8)
    r0 = remainder_RT(solve(VasicekParams(1.0, 0.0), drv))
    g = drv.values
    path = solve(VasicekParams(1.0, 0.0), drv)
    IX = integrate_dt(GriddedFunction(grid, path.x))
    base = 0.5 * g[-1] ** 2 - g[-1] / grid.T * IX - integrate_dt(GriddedFunction(grid, g * g))
    assert math.isfinite(r0) and r0 != base  # the nested term is present


def test_remainder_needs_driver():
    from vasicek_lse.vasicek import VasicekPath

    grid = TimeGrid(1.0, 10)
    with pytest.raises(ValueError):
        remainder_RT(VasicekPath(grid, VasicekParams(1.0, 1.0), FBM05, np.zeros(11), None))
