"""Limit constants per driver family and samplers for the limit laws.

With N1, N2 standard normal and zeta_inf ~ N(0, var_zeta_inf), mutually
independent, the scaled errors converge to

    e^{theta T} (theta~ - theta)  ->  2 theta sigma N2 / (mu + zeta_inf)
    T^{1-eta} (mu~ - mu)          ->  (lambda / theta) N1
    T^{1-eta} (alpha~ - alpha)    ->  lambda N1
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import ndtr

from .kernels import Family, KernelSpec, covariance, gram_matrix
from .rng import standard_normals
from .sampler import TimeGrid

__all__ = [
    "QuadratureNotConverged",
    "LimitConstants",
    "klm_integrals",
    "klm_quadrature",
    "var_zeta_quadrature",
    "limit_constants",
    "sample_theta_limit",
    "sample_mu_limit",
    "sample_alpha_limit",
    "sample_joint_limit",
    "ratio_law_cdf",
    "ratio_law_quantile",
    "AssumptionRow",
    "empirical_assumption_check",
]

TRUNCATION_START = 20.0
TRUNCATION_RTOL = 1e-8
MAX_DOUBLINGS = 8


class QuadratureNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class LimitConstants:
    eta: float
    lambda_sq: float
    sigma_sq: float
    var_zeta_inf: float
    theta: float

    @property
    def lam(self) -> float:
        return math.sqrt(self.lambda_sq)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)


def _check_h_theta(H, theta):
    if not 0.0 < H < 1.0:
        raise ValueError(f"H must lie in (0, 1), got {H}")
    if not theta > 0.0:
        raise ValueError(f"theta must be positive, got {theta}")


def klm_integrals(H: float, theta: float) -> tuple[float, float, float]:
    """Closed forms of the double Laplace integrals of t^{2H}, |t-s|^{2H}, (t+s)^{2H}."""
    _check_h_theta(H, theta)
    p = theta ** (2.0 * H + 2.0)
    k = gamma_fn(2.0 * H + 1.0) / p
    return k, k, gamma_fn(2.0 * H + 2.0) / p


def _laplace2(f, theta: float, symmetric: bool, rtol: float = TRUNCATION_RTOL) -> float:
    """int_0^inf int_0^inf e^{-theta (s+t)} f(s, t) ds dt by truncated adaptive quadrature.

    The square [0, T*]^2 is split along the diagonal so kinks in |t - s| sit on
    triangle edges. T* doubles from 20 until two successive values agree to ``rtol``.
    """

    def g(s, t):
        return math.exp(-theta * (s + t)) * f(s, t)

    def tri(Tstar, lower):
        # lower: s in [0, t]; upper: s in [t, T*]
        if lower:
            val, _ = integrate.dblquad(g, 0.0, Tstar, 0.0, lambda t: t, epsabs=0.0, epsrel=1e-11)
        else:
            val, _ = integrate.dblquad(g, 0.0, Tstar, lambda t: t, Tstar, epsabs=0.0, epsrel=1e-11)
        return val

    def full(Tstar):
        lo = tri(Tstar, True)
        return 2.0 * lo if symmetric else lo + tri(Tstar, False)

    Tstar = TRUNCATION_START
    prev = full(Tstar)
    for _ in range(MAX_DOUBLINGS):
        Tstar *= 2.0
        cur = full(Tstar)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise QuadratureNotConverged(f"truncated integral still moving at T* = {Tstar:g}")


def klm_quadrature(H: float, theta: float) -> tuple[float, float, float]:
    """Brute-force 2-D quadrature of the same three integrals (test oracle)."""
    _check_h_theta(H, theta)
    h2 = 2.0 * H
    k = _laplace2(lambda s, t: t**h2, theta, symmetric=False)
    l = _laplace2(lambda s, t: abs(t - s) ** h2, theta, symmetric=True)
    m = _laplace2(lambda s, t: (t + s) ** h2, theta, symmetric=True)
    return k, l, m


def var_zeta_quadrature(spec: KernelSpec, theta: float) -> float:
    """E[zeta_inf^2] = theta^2 int int e^{-theta s} e^{-theta t} E[G_s G_t] ds dt."""
    cov = lambda s, t: float(covariance(spec, s, t))  # noqa: E731
    return theta * theta * _laplace2(cov, theta, symmetric=True)


@lru_cache(maxsize=None)
def limit_constants(spec: KernelSpec, theta: float) -> LimitConstants:
    theta = float(theta)
    _check_h_theta(spec.H, theta)
    H = spec.H
    if spec.family is Family.FBM or (spec.family is Family.BIFBM and spec.K == 1.0):
        sigma_sq = H * gamma_fn(2.0 * H) / theta ** (2.0 * H)
        return LimitConstants(H, 1.0, sigma_sq, sigma_sq, theta)
    if spec.family is Family.SUBFBM:
        sigma_sq = H * gamma_fn(2.0 * H) / theta ** (2.0 * H)
        var_zeta = (1.0 - H) * gamma_fn(2.0 * H + 1.0) / theta ** (2.0 * H)
        return LimitConstants(H, 2.0 - 2.0 ** (2.0 * H - 1.0), sigma_sq, var_zeta, theta)
    # near T the bi-fBm increments are those of 2^{(1-K)/2} B^{HK}, hence the 2^{1-K} factor
    hk = spec.H * spec.K
    sigma_sq = 2.0 ** (1.0 - spec.K) * hk * gamma_fn(2.0 * hk) / theta ** (2.0 * hk)
    return LimitConstants(hk, 1.0, sigma_sq, var_zeta_quadrature(spec, theta), theta)


def _draws(seed, size, rows):
    n = 1 if size is None else int(size)
    return standard_normals(seed, rows * n).reshape(rows, n)


def _out(a, size):
    return float(a[0]) if size is None else a


def sample_theta_limit(c: LimitConstants, mu: float, seed: int, size: int | None = None):
    """2 theta sigma N2 / (mu + zeta); N2 and zeta read from one seeded stream.

    A zero denominator yields +-inf (or nan when sigma is 0 too); such draws
    are returned as they are.
    """
    z = _draws(seed, size, 2)
    num = 2.0 * c.theta * c.sigma * z[0]
    den = mu + math.sqrt(c.var_zeta_inf) * z[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return _out(num / den, size)


def sample_mu_limit(c: LimitConstants, seed: int, size: int | None = None):
    return _out(c.lam / c.theta * _draws(seed, size, 1)[0], size)


def sample_alpha_limit(c: LimitConstants, seed: int, size: int | None = None):
    return _out(c.lam * _draws(seed, size, 1)[0], size)


def sample_joint_limit(c: LimitConstants, mu: float, seed: int, size: int | None = None, second: str = "mu"):
    """Joint limit of the (theta, mu) or (theta, alpha) scaled errors.

    Rows 0 and 1 of the stream (N2, zeta) coincide with those of
    ``sample_theta_limit`` for the same seed; row 2 is N1.
    """
    if second not in ("mu", "alpha"):
        raise ValueError(f"second must be 'mu' or 'alpha', got {second!r}")
    z = _draws(seed, size, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = 2.0 * c.theta * c.sigma * z[0] / (mu + math.sqrt(c.var_zeta_inf) * z[1])
    scale = c.lam / c.theta if second == "mu" else c.lam
    other = scale * z[2]
    if size is None:
        return float(first[0]), float(other[0])
    return first, other


_LEG_X, _LEG_W = np.polynomial.legendre.leggauss(160)
_Z_CUT = 12.0


def _legendre_nodes(a: float, b: float):
    half = 0.5 * (b - a)
    return a + half * (_LEG_X + 1.0), half * _LEG_W


def ratio_law_cdf(x, c: LimitConstants, mu: float):
    """CDF of 2 theta sigma N2 / (mu + zeta), integrating over zeta.

    Conditioning on d = mu + zeta gives P(. <= x | d) = Phi(x |d| / (2 theta sigma)).
    The integrand has a kink where d = 0, so Gauss-Legendre is applied on
    each side of it separately (z truncated at +-12 standard deviations).
    """
    x = np.asarray(x, dtype=float)
    scale = 2.0 * c.theta * c.sigma
    sd = math.sqrt(c.var_zeta_inf)
    if scale == 0.0:
        out = (x >= 0).astype(float)
        return out[()] if out.ndim == 0 else out
    if sd == 0.0:
        out = ndtr(x * abs(mu) / scale)
        return out[()] if out.ndim == 0 else out
    kink = -mu / sd
    cuts = [-_Z_CUT] + ([kink] if -_Z_CUT < kink < _Z_CUT else []) + [_Z_CUT]
    pieces = [_legendre_nodes(a, b) for a, b in zip(cuts, cuts[1:])]
    z = np.concatenate([p[0] for p in pieces])
    w = np.concatenate([p[1] for p in pieces]) * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    d = np.abs(mu + sd * z)
    out = ndtr(np.multiply.outer(x, d) / scale) @ w
    return out[()] if out.ndim == 0 else out


def ratio_law_quantile(p: float, c: LimitConstants, mu: float) -> float:
    from scipy.optimize import brentq

    lo, hi = -1.0, 1.0
    while ratio_law_cdf(lo, c, mu) > p:
        lo *= 2.0
    while ratio_law_cdf(hi, c, mu) < p:
        hi *= 2.0
    return brentq(lambda v: ratio_law_cdf(v, c, mu) - p, lo, hi, xtol=1e-13, rtol=1e-13)


def _phi1(a: float) -> float:
    """int_0^1 e^{a u} u du."""
    if a > 0.1:
        return (a * math.exp(a) - math.expm1(a)) / (a * a)
    # sum_k a^k / (k! (k + 2))
    term, total = 1.0, 0.5
    for k in range(1, 20):
        term *= a / k
        total += term / (k + 2)
    return total


def _exp_weights(theta: float, grid: TimeGrid) -> np.ndarray:
    """w_j with sum_j w_j G_{t_j} = int_0^T e^{theta (t - T)} G^lin_t dt, j = 1..n (G_0 = 0)."""
    a = theta * grid.step
    p1 = _phi1(a)
    p0 = math.expm1(a) / a - p1
    E = np.exp(theta * (grid.nodes - grid.T))
    w = grid.step * p1 * E[:-1]  # right end of [t_{j-1}, t_j]
    w[:-1] += grid.step * p0 * E[1:-1]  # left end of [t_j, t_{j+1}]
    return w


@dataclass(frozen=True)
class AssumptionRow:
    T: float
    n: int
    growth: float  # E[G_T^2] / T^{2 eta}, target lambda^2
    growth_target: float
    limit_var: float  # Var(e^{-theta T} int_0^T e^{theta s} dG_s), target sigma^2
    limit_var_target: float
    cross_s: float  # E[G_s G_T] / T^eta, target 0
    cross_s_limit: float  # E[G_s e^{-theta T} int e^{theta r} dG_r], target 0
    cross_T: float  # E[G_T / T^eta * e^{-theta T} int e^{theta r} dG_r], target 0


def empirical_assumption_check(
    spec: KernelSpec,
    theta: float,
    horizons,
    n: int = 4096,
    s: float = 1.0,
) -> list[AssumptionRow]:
    """Evaluate the growth, limiting-variance and decorrelation conditions at finite T.

    No simulation: with Y_T = G_T - theta e^{-theta T} int_0^T e^{theta t} G_t dt
    (the dG-integral after integration by parts), every statistic is a
    linear or quadratic form in the Gram matrix over the grid. The
    dt-integral weights integrate e^{theta (t - T)} exactly against the
    piecewise-linear interpolant of G, which removes the O(step^2) bias that
    trapezoid weights leave in the variance.
    """
    horizons = [float(T) for T in horizons]
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("horizons must be strictly increasing")
    c = limit_constants(spec, theta)
    rows = []
    for T in horizons:
        grid = TimeGrid(T, n)
        t = grid.nodes[1:]
        a = -theta * _exp_weights(theta, grid)
        a[-1] += 1.0
        C = gram_matrix(spec, t)
        Ca = C @ a
        del C
        eta = spec.eta
        var_y = float(a @ Ca)
        rows.append(
            AssumptionRow(
                T=T,
                n=n,
                growth=float(covariance(spec, T, T)) / T ** (2.0 * eta),
                growth_target=c.lambda_sq,
                limit_var=var_y,
                limit_var_target=c.sigma_sq,
                cross_s=float(covariance(spec, s, T)) / T**eta,
                cross_s_limit=float(covariance(spec, s, t) @ a),
                cross_T=float(Ca[-1]) / T**eta,
            )
        )
    return rows
