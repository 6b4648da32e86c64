"""Exact Gaussian path synthesis on a uniform grid.

The default route factorizes the Gram matrix over the nonzero nodes once
and reuses the triangular factor for every path. Fractional Brownian motion
additionally has a circulant-embedding route (stationary fGn increments)
for grids too large for a dense factor.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg.blas import dtrmv

from .kernels import Family, KernelSpec, gram_matrix
from .rng import standard_normals

__all__ = [
    "TimeGrid",
    "PathFactor",
    "GaussianPath",
    "FactorizationFailed",
    "InsufficientSamples",
    "build_factor",
    "sample_path",
    "empirical_covariance",
    "choose_method",
    "path_filename",
    "write_path_csv",
    "read_path_csv",
]

JITTER_LADDER = (1e-12, 1e-10, 1e-8)
# dense factors above this size are not attempted by the "auto" method choice
AUTO_DENSE_MAX_N = 4096


class FactorizationFailed(RuntimeError):
    pass


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "T", float(self.T))
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 intervals, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def step(self) -> float:
        return self.T / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.linspace(0.0, self.T, self.n + 1)
        t.flags.writeable = False
        return t


@dataclass(frozen=True, eq=False)
class PathFactor:
    """Immutable square-root factor of the driver law on a grid.

    ``method == "cholesky"``: ``L`` is the lower Cholesky factor of the Gram
    matrix over t_1..t_n. ``method == "circulant"``: ``L`` holds the scaled
    square roots of the circulant eigenvalues for the fGn increments.
    """

    grid: TimeGrid
    spec: KernelSpec
    L: np.ndarray = field(repr=False)
    jitter_used: float = 0.0
    method: str = "cholesky"


@dataclass(frozen=True, eq=False)
class GaussianPath:
    grid: TimeGrid
    spec: KernelSpec
    values: np.ndarray = field(repr=False)
    seed: int | None = None

    @property
    def G_T(self) -> float:
        return float(self.values[-1])


def choose_method(spec: KernelSpec, grid: TimeGrid) -> str:
    if spec.family is Family.FBM and grid.n > AUTO_DENSE_MAX_N:
        return "circulant"
    return "cholesky"


def build_factor(spec: KernelSpec, grid: TimeGrid, method: str = "cholesky") -> PathFactor:
    if method == "auto":
        method = choose_method(spec, grid)
    if method == "cholesky":
        return _cholesky_factor(spec, grid)
    if method == "circulant":
        return _circulant_factor(spec, grid)
    raise ValueError(f"unknown factorization method {method!r}")


def _cholesky_factor(spec: KernelSpec, grid: TimeGrid) -> PathFactor:
    # t_0 is dropped: G_0 = 0 makes the full Gram matrix singular
    C = gram_matrix(spec, grid.nodes[1:])
    scale = float(np.max(np.diag(C)))
    jitter = 0.0
    for eps in (0.0,) + JITTER_LADDER:
        A = C if eps == 0.0 else C + (eps * scale) * np.eye(grid.n)
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            continue
        jitter = eps * scale
        break
    else:
        raise FactorizationFailed(
            f"Gram matrix of {spec.token} on T={grid.T}, n={grid.n} "
            f"is not PSD after jitter {JITTER_LADDER[-1]:g} x max diagonal"
        )
    L = np.asfortranarray(L)
    L.flags.writeable = False
    return PathFactor(grid, spec, L, jitter, "cholesky")


def fgn_autocovariance(H: float, step: float, lags) -> np.ndarray:
    k = np.abs(np.asarray(lags, dtype=float))
    H2 = 2.0 * H
    return 0.5 * step**H2 * ((k + 1.0) ** H2 - 2.0 * k**H2 + np.abs(k - 1.0) ** H2)


def _circulant_factor(spec: KernelSpec, grid: TimeGrid) -> PathFactor:
    if spec.family is not Family.FBM:
        raise ValueError("circulant embedding needs stationary increments (fbm only)")
    n = grid.n
    gam = fgn_autocovariance(spec.H, grid.step, np.arange(n + 1))
    row = np.concatenate([gam, gam[n - 1 : 0 : -1]])
    lam = np.fft.fft(row).real
    tol = 1e-10 * float(np.max(np.abs(lam)))
    if np.min(lam) < -tol:
        raise FactorizationFailed(
            f"circulant embedding of fGn H={spec.H} on n={n} has negative eigenvalue {np.min(lam):g}"
        )
    root = np.sqrt(np.clip(lam, 0.0, None) / (2 * n))
    root.flags.writeable = False
    return PathFactor(grid, spec, root, 0.0, "circulant")


def sample_path(factor: PathFactor, seed: int) -> GaussianPath:
    """Draw one path; a pure function of ``(factor, seed)``."""
    n = factor.grid.n
    g = np.empty(n + 1)
    g[0] = 0.0
    if factor.method == "cholesky":
        z = standard_normals(seed, n)
        g[1:] = dtrmv(factor.L, z, lower=1)
    else:
        m = 2 * n
        z = standard_normals(seed, 2 * m)
        w = factor.L * (z[:m] + 1j * z[m:])
        np.cumsum(np.fft.fft(w).real[:n], out=g[1:])
    g.flags.writeable = False
    return GaussianPath(factor.grid, factor.spec, g, seed)


def sample_matrix(factor: PathFactor, seeds: Sequence[int]) -> np.ndarray:
    """Stack ``sample_path`` outputs row-wise, shape (len(seeds), n + 1)."""
    return np.array([sample_path(factor, s).values for s in seeds])


def empirical_covariance(paths: Sequence[GaussianPath], i: int, j: int) -> float:
    if len(paths) < 2:
        raise InsufficientSamples("need at least 2 paths for a sample covariance")
    gi = np.array([p.values[i] for p in paths])
    gj = np.array([p.values[j] for p in paths])
    return float(np.sum((gi - gi.mean()) * (gj - gj.mean())) / (len(paths) - 1))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def path_filename(spec: KernelSpec, T: float, n: int, seed: int) -> str:
    return f"{spec.token}_T{T:g}_n{n}_seed{seed}.csv"


def write_path_csv(file, grid: TimeGrid, columns: dict[str, np.ndarray]) -> None:
    """Write ``t`` plus the given columns with 17 significant digits."""
    names = ["t", *columns]
    cols = [grid.nodes, *columns.values()]
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def read_path_csv(file: str | os.PathLike) -> tuple[TimeGrid, dict[str, np.ndarray]]:
    """Read a path CSV back; the grid must be uniform and start at t = 0."""
    with open(file, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or "t" not in rows[0]:
        raise ValueError(f"{file}: missing header with a 't' column")
    header = rows[0]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{file}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header) or data.shape[0] < 3:
        raise ValueError(f"{file}: expected at least 3 rows of {len(header)} columns")
    cols = {name: data[:, k] for k, name in enumerate(header)}
    t = cols.pop("t")
    grid = TimeGrid(t[-1], len(t) - 1)
    if t[0] != 0.0 or not np.allclose(t, grid.nodes, rtol=1e-12, atol=1e-12 * grid.T):
        raise ValueError(f"{file}: time column is not a uniform grid from 0")
    return grid, cols
