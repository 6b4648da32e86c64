"""Solution paths of dX = theta (mu + X) dt + dG, X_0 = 0, and their functionals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import GriddedFunction, cumulative_dt, integrate_dt
from .kernels import KernelSpec
from .sampler import GaussianPath, TimeGrid, write_path_csv

__all__ = [
    "HorizonTooLarge",
    "VasicekParams",
    "VasicekPath",
    "PathFunctionals",
    "euler_maruyama",
    "explicit_solution",
    "solve",
    "functionals",
    "write_vasicek_csv",
]

MAX_THETA_T = 700.0


class HorizonTooLarge(OverflowError):
    pass


@dataclass(frozen=True)
class VasicekParams:
    theta: float
    mu: float
    alpha: float = field(init=False)

    def __post_init__(self):
        theta, mu = float(self.theta), float(self.mu)
        if not theta > 0:
            raise ValueError(f"theta must be positive (non-ergodic case), got {theta}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", theta * mu)


@dataclass(frozen=True, eq=False)
class VasicekPath:
    grid: TimeGrid
    params: VasicekParams
    spec: KernelSpec | None
    x: np.ndarray = field(repr=False)
    driver: GaussianPath | None = field(default=None, repr=False)
    scheme: str = "explicit"

    @property
    def X_T(self) -> float:
        return float(self.x[-1])


@dataclass(frozen=True, eq=False)
class PathFunctionals:
    X_T: float
    int_X: float
    int_X2: float
    int_sX: float
    Sigma: GriddedFunction = field(repr=False)
    zeta_T: float | None = None
    Z_T: float | None = None


def _driver_values(driver: GaussianPath) -> np.ndarray:
    g = np.asarray(driver.values, dtype=float)
    if g.shape != (driver.grid.n + 1,) or g[0] != 0.0:
        raise ValueError("driver must have n + 1 values starting at G_0 = 0")
    return g


def euler_maruyama(params: VasicekParams, driver: GaussianPath) -> VasicekPath:
    """x_{i+1} = x_i + theta (mu + x_i) dt + (g_{i+1} - g_i)."""
    grid = driver.grid
    g = _driver_values(driver)
    dg = np.diff(g).tolist()
    a = params.theta * grid.step
    mu = params.mu
    x = [0.0] * (grid.n + 1)
    xi = 0.0
    for i, d in enumerate(dg):
        xi = xi + a * (mu + xi) + d
        x[i + 1] = xi
    return VasicekPath(grid, params, driver.spec, np.array(x), driver, "euler")


def explicit_solution(params: VasicekParams, driver: GaussianPath) -> VasicekPath:
    """Closed-form solution written without any dG-integral.

    X_t = mu (e^{theta t} - 1) + G_t + theta e^{theta t} Z_t, with Z_t the
    cumulative trapezoid of e^{-theta s} G_s, so it is valid for every
    Hoelder exponent of the driver.
    """
    grid = driver.grid
    theta, mu = params.theta, params.mu
    if theta * grid.T > MAX_THETA_T:
        raise HorizonTooLarge(f"theta*T = {theta * grid.T:g} exceeds {MAX_THETA_T:g}")
    t = grid.nodes
    g = _driver_values(driver)
    Z = cumulative_dt(GriddedFunction(grid, np.exp(-theta * t) * g)).values
    x = mu * np.expm1(theta * t) + g + theta * np.exp(theta * t) * Z
    return VasicekPath(grid, params, driver.spec, x, driver, "explicit")


def solve(params: VasicekParams, driver: GaussianPath, scheme: str = "explicit") -> VasicekPath:
    if scheme == "explicit":
        return explicit_solution(params, driver)
    if scheme == "euler":
        return euler_maruyama(params, driver)
    raise ValueError(f"unknown scheme {scheme!r}")


def functionals(path: VasicekPath) -> PathFunctionals:
    grid = path.grid
    t = grid.nodes
    x = np.asarray(path.x, dtype=float)
    X = GriddedFunction(grid, x)
    Sigma = cumulative_dt(X)
    zeta_T = Z_T = None
    if path.driver is not None:
        theta = path.params.theta
        g = path.driver.values
        Z_T = integrate_dt(GriddedFunction(grid, np.exp(-theta * t) * g))
        zeta_T = math.exp(-theta * grid.T) * float(g[-1]) + theta * Z_T
    return PathFunctionals(
        X_T=float(x[-1]),
        int_X=integrate_dt(X),
        int_X2=integrate_dt(GriddedFunction(grid, x * x)),
        int_sX=integrate_dt(GriddedFunction(grid, t * x)),
        Sigma=Sigma,
        zeta_T=zeta_T,
        Z_T=Z_T,
    )


def write_vasicek_csv(file, path: VasicekPath) -> None:
    g = path.driver.values if path.driver is not None else np.full(path.grid.n + 1, np.nan)
    write_path_csv(file, path.grid, {"g": g, "x": path.x})
