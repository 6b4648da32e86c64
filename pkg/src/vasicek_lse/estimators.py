"""Least-squares-type drift estimators and the remainder diagnostic R_T."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .calculus import GriddedFunction, cumulative_dt, integrate_dt, integrate_rs
from .sampler import TimeGrid
from .vasicek import VasicekPath

__all__ = [
    "DegeneratePath",
    "EstimateTriple",
    "estimate",
    "estimate_values",
    "estimate_young",
    "remainder_RT",
    "ESTIMATE_HEADER",
]

DEGENERACY_RTOL = 1e-14

ESTIMATE_HEADER = ["seed", "kernel", "theta", "mu", "T", "n", "variant", "theta_hat", "mu_hat", "alpha_hat"]


class DegeneratePath(ArithmeticError):
    pass


@dataclass(frozen=True)
class EstimateTriple:
    theta_hat: float
    mu_hat: float
    alpha_hat: float
    T: float
    n: int
    variant: str = "extended"
    flagged: bool = False


def _solve(T, n, X_T, int_X, int_X2, half_sq_term, variant, flagged=False) -> EstimateTriple:
    # half_sq_term is int X dX: X_T^2 / 2 for the extended estimator
    den = T * int_X2 - int_X * int_X
    if not den > DEGENERACY_RTOL * T * int_X2:
        raise DegeneratePath(f"T*int X^2 - (int X)^2 = {den:g} vanishes: path is (nearly) constant")
    theta_hat = (T * half_sq_term - X_T * int_X) / den
    alpha_raw = (X_T * int_X2 - half_sq_term * int_X) / den
    if theta_hat == 0.0:
        raise DegeneratePath("theta estimate is exactly zero, mu estimate undefined")
    mu_hat = alpha_raw / theta_hat
    return EstimateTriple(theta_hat, mu_hat, mu_hat * theta_hat, T, n, variant, flagged)


def estimate_values(grid: TimeGrid, x) -> EstimateTriple:
    """Extended estimator from raw observations x_0..x_n on ``grid``."""
    x = np.asarray(x, dtype=float)
    X = GriddedFunction(grid, x)
    X_T = float(x[-1])
    return _solve(
        grid.T,
        grid.n,
        X_T,
        integrate_dt(X),
        integrate_dt(GriddedFunction(grid, x * x)),
        0.5 * X_T * X_T,
        "extended",
    )


def estimate(path: VasicekPath) -> EstimateTriple:
    """(theta~, mu~, alpha~) with int X dX replaced by X_T^2 / 2; valid for any Hoelder order."""
    return estimate_values(path.grid, path.x)


def estimate_young(path: VasicekPath) -> EstimateTriple:
    """Classical least-squares estimator with int X dX as a left-point Young sum.

    Only meaningful for drivers with gamma > 1/2; otherwise a warning is
    emitted and the result carries ``flagged=True``.
    """
    grid = path.grid
    flagged = path.spec is not None and path.spec.gamma <= 0.5
    if flagged:
        warnings.warn(
            f"Young integral not defined for gamma = {path.spec.gamma:g} <= 1/2",
            RuntimeWarning,
            stacklevel=2,
        )
    X = GriddedFunction(grid, path.x)
    return _solve(
        grid.T,
        grid.n,
        float(path.x[-1]),
        integrate_dt(X),
        integrate_dt(GriddedFunction(grid, path.x * path.x)),
        integrate_rs(X, X),
        "young",
        flagged,
    )


def remainder_RT(path: VasicekPath) -> float:
    """Remainder R_T of the theta-numerator decomposition.

    R_T = G_T^2/2 - mu G_T - (G_T/T) int X - theta int G^2
          + theta^2 int_0^T e^{-theta t} G_t M_t dt,   M_t = int_0^t e^{theta s} G_s ds.
    The two (mu theta T)^2 / 2 terms cancel and are left out.
    """
    if path.driver is None:
        raise ValueError("remainder_RT needs the driver path")
    grid = path.grid
    t = grid.nodes
    theta, mu, T = path.params.theta, path.params.mu, grid.T
    g = np.asarray(path.driver.values, dtype=float)
    G_T = float(g[-1])
    int_X = integrate_dt(GriddedFunction(grid, path.x))
    int_G2 = integrate_dt(GriddedFunction(grid, g * g))
    # e^{-theta t} M_t = e^{theta (T - t)} int_0^t e^{theta (s - T)} G_s ds keeps every factor finite
    M_scaled = cumulative_dt(GriddedFunction(grid, np.exp(theta * (t - T)) * g)).values
    inner = g * np.exp(theta * (T - t)) * M_scaled
    nested = integrate_dt(GriddedFunction(grid, inner))
    return 0.5 * G_T * G_T - mu * G_T - (G_T / T) * int_X - theta * int_G2 + theta * theta * nested
