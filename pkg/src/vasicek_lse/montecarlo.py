"""Seeded replication engine for consistency and limit-law experiments."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .asymptotics import LimitConstants, limit_constants, ratio_law_cdf
from .estimators import ESTIMATE_HEADER, DegeneratePath, estimate
from .kernels import KernelSpec
from .rng import mix
from .sampler import GaussianPath, InsufficientSamples, PathFactor, TimeGrid, build_factor, sample_path
from .vasicek import VasicekParams, solve

__all__ = [
    "ExperimentConfig",
    "ExperimentFailed",
    "ReplicationRecord",
    "CellSummary",
    "ExperimentSummary",
    "run_replication",
    "run_experiment",
    "ks_statistic",
    "parse_config",
    "RECORD_HEADER",
    "SUMMARY_HEADER",
    "write_records_csv",
    "write_summary_csv",
]

MAX_CELL_FAILURE_RATE = 0.10

RECORD_HEADER = ESTIMATE_HEADER + ["scaled_theta_err", "scaled_mu_err", "scaled_alpha_err", "status"]

SUMMARY_HEADER = [
    "kernel", "theta", "mu", "T", "n", "replications", "failures", "infinite",
    "mean_theta_hat", "median_theta_hat", "iqr_theta_hat",
    "mean_mu_hat", "median_mu_hat", "iqr_mu_hat",
    "mean_alpha_hat", "median_alpha_hat", "iqr_alpha_hat",
    "median_abs_theta_err", "median_abs_mu_err", "median_abs_alpha_err",
    "median_scaled_theta_err", "iqr_scaled_theta_err",
    "ks_theta", "ks_mu", "ks_alpha", "spearman_theta_mu",
]  # fmt: skip


class ExperimentFailed(RuntimeError):
    pass


DriverHook = Callable[[TimeGrid, int], np.ndarray]


@dataclass(frozen=True)
class ExperimentConfig:
    spec: KernelSpec
    params: VasicekParams
    horizons: tuple[tuple[float, int], ...]
    replications: int
    base_seed: int
    scheme: str = "explicit"
    method: str = "auto"

    def __post_init__(self):
        hs = tuple((float(T), int(n)) for T, n in self.horizons)
        object.__setattr__(self, "horizons", hs)
        if not hs:
            raise ValueError("at least one horizon is required")
        if any(n < 64 for _, n in hs):
            raise ValueError("every horizon needs n >= 64")
        if self.replications < 2:
            raise ValueError("replications must be >= 2")
        if self.scheme not in ("explicit", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.method not in ("auto", "cholesky", "circulant"):
            raise ValueError(f"unknown method {self.method!r}")

    def grid(self, h: int) -> TimeGrid:
        T, n = self.horizons[h]
        return TimeGrid(T, n)

    def as_items(self) -> list[tuple[str, str]]:
        items = [
            ("kernel", self.spec.token),
            ("theta", repr(self.params.theta)),
            ("mu", repr(self.params.mu)),
        ]
        items += [("horizon", f"{T!r},{n}") for T, n in self.horizons]
        items += [
            ("replications", str(self.replications)),
            ("base_seed", str(self.base_seed)),
            ("scheme", self.scheme),
            ("method", self.method),
        ]
        return items

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.as_items())


@dataclass(frozen=True)
class ReplicationRecord:
    horizon_index: int
    r: int
    seed: int
    T: float
    n: int
    theta_hat: float
    mu_hat: float
    alpha_hat: float
    scaled_theta_err: float
    scaled_mu_err: float
    scaled_alpha_err: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run_replication(
    cfg: ExperimentConfig,
    horizon_index: int,
    r: int,
    factor: PathFactor | None = None,
    driver_hook: DriverHook | None = None,
) -> ReplicationRecord:
    """One replication; deterministic in ``(cfg, horizon_index, r)``.

    ``driver_hook(grid, seed)`` replaces the sampled driver values (test hook).
    """
    if not 0 <= horizon_index < len(cfg.horizons) or not 0 <= r < cfg.replications:
        raise IndexError(f"cell ({horizon_index}, {r}) out of range")
    grid = cfg.grid(horizon_index)
    seed = mix(cfg.base_seed, horizon_index, r)
    if driver_hook is not None:
        driver = GaussianPath(grid, cfg.spec, np.asarray(driver_hook(grid, seed), dtype=float), seed)
    else:
        if factor is None:
            factor = build_factor(cfg.spec, grid, cfg.method)
        driver = sample_path(factor, seed)
    p = cfg.params
    path = solve(p, driver, cfg.scheme)
    T = grid.T
    try:
        est = estimate(path)
    except DegeneratePath:
        nan = math.nan
        return ReplicationRecord(horizon_index, r, seed, T, grid.n, nan, nan, nan, nan, nan, nan, "degenerate")
    poly = T ** (1.0 - cfg.spec.eta)
    return ReplicationRecord(
        horizon_index,
        r,
        seed,
        T,
        grid.n,
        est.theta_hat,
        est.mu_hat,
        est.alpha_hat,
        math.exp(p.theta * T) * (est.theta_hat - p.theta),
        poly * (est.mu_hat - p.mu),
        poly * (est.alpha_hat - p.alpha),
    )


def ks_statistic(sample: Sequence[float], reference) -> float:
    """Kolmogorov-Smirnov distance to a CDF (callable) or to a second sample.

    Infinite values are legal and sit in the tails; NaN is not.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    if x.size < 10:
        raise InsufficientSamples(f"KS needs at least 10 values, got {x.size}")
    if np.isnan(x).any():
        raise ValueError("KS sample contains NaN")
    if callable(reference):
        F = np.asarray(reference(x), dtype=float)
        n = x.size
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    y = np.sort(np.asarray(reference, dtype=float))
    if y.size < 10:
        raise InsufficientSamples(f"KS needs at least 10 reference values, got {y.size}")
    if np.isnan(y).any():
        raise ValueError("KS reference sample contains NaN")
    allv = np.concatenate([x, y])
    fx = np.searchsorted(x, allv, side="right") / x.size
    fy = np.searchsorted(y, allv, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def _iqr(a: np.ndarray) -> float:
    q75, q25 = np.percentile(a, [75, 25])
    return float(q75 - q25)


@dataclass(frozen=True, eq=False)
class CellSummary:
    T: float
    n: int
    replications: int
    failures: int
    infinite: int
    failed_seeds: tuple[int, ...]
    theta_hat: np.ndarray = field(repr=False)
    mu_hat: np.ndarray = field(repr=False)
    alpha_hat: np.ndarray = field(repr=False)
    scaled_theta_err: np.ndarray = field(repr=False)
    scaled_mu_err: np.ndarray = field(repr=False)
    scaled_alpha_err: np.ndarray = field(repr=False)
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ExperimentSummary:
    config: ExperimentConfig
    constants: LimitConstants
    cells: tuple[CellSummary, ...]
    records: tuple[ReplicationRecord, ...] = field(repr=False)


def _summarize(cfg: ExperimentConfig, c: LimitConstants, h: int, recs: list[ReplicationRecord]) -> CellSummary:
    T, n = cfg.horizons[h]
    ok = [rec for rec in recs if rec.ok]
    failed = tuple(rec.seed for rec in recs if not rec.ok)
    if len(failed) > MAX_CELL_FAILURE_RATE * len(recs):
        raise ExperimentFailed(f"horizon T={T}, n={n}: {len(failed)}/{len(recs)} replications degenerate")
    col = lambda name: np.array([getattr(rec, name) for rec in ok])  # noqa: E731
    th, mu, al = col("theta_hat"), col("mu_hat"), col("alpha_hat")
    st, sm, sa = col("scaled_theta_err"), col("scaled_mu_err"), col("scaled_alpha_err")
    p = cfg.params
    finite = np.isfinite(st) & np.isfinite(sm) & np.isfinite(sa)
    s = {
        "mean_theta_hat": float(np.mean(th)),
        "median_theta_hat": float(np.median(th)),
        "iqr_theta_hat": _iqr(th),
        "mean_mu_hat": float(np.mean(mu)),
        "median_mu_hat": float(np.median(mu)),
        "iqr_mu_hat": _iqr(mu),
        "mean_alpha_hat": float(np.mean(al)),
        "median_alpha_hat": float(np.median(al)),
        "iqr_alpha_hat": _iqr(al),
        "median_abs_theta_err": float(np.median(np.abs(th - p.theta))),
        "median_abs_mu_err": float(np.median(np.abs(mu - p.mu))),
        "median_abs_alpha_err": float(np.median(np.abs(al - p.alpha))),
        "median_scaled_theta_err": float(np.median(st)),
        "iqr_scaled_theta_err": _iqr(st),
    }
    if len(ok) >= 10:
        mu_sd = c.lam / p.theta
        s["ks_theta"] = ks_statistic(st, lambda x: ratio_law_cdf(x, c, p.mu))
        s["ks_mu"] = ks_statistic(sm, lambda x: ndtr(x / mu_sd))
        s["ks_alpha"] = ks_statistic(sa, lambda x: ndtr(x / c.lam))
        s["spearman_theta_mu"] = float(stats.spearmanr(st[finite], sm[finite])[0])
    else:
        s.update(ks_theta=math.nan, ks_mu=math.nan, ks_alpha=math.nan, spearman_theta_mu=math.nan)
    return CellSummary(
        T, n, len(recs), len(failed), int(np.count_nonzero(~np.isfinite(st))), failed,
        th, mu, al, st, sm, sa, s,
    )  # fmt: skip


def run_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    driver_hook: DriverHook | None = None,
) -> ExperimentSummary:
    """Run every (horizon, replication) cell.

    One factorization per horizon is shared by all replications. Results are
    reduced in ascending (horizon, r) order, so the summary does not depend
    on ``workers``.
    """
    c = limit_constants(cfg.spec, cfg.params.theta)
    cells, records = [], []
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        for h in range(len(cfg.horizons)):
            factor = None if driver_hook is not None else build_factor(cfg.spec, cfg.grid(h), cfg.method)
            recs = list(
                pool.map(lambda r: run_replication(cfg, h, r, factor, driver_hook), range(cfg.replications))
            )
            records.extend(recs)
            cells.append(_summarize(cfg, c, h, recs))
    return ExperimentSummary(cfg, c, tuple(cells), tuple(records))


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_records_csv(file, summary: ExperimentSummary) -> None:
    cfg = summary.config
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for rec in summary.records:
            w.writerow(
                [_fmt(v) for v in (
                    rec.seed, cfg.spec.token, cfg.params.theta, cfg.params.mu, rec.T, rec.n, "extended",
                    rec.theta_hat, rec.mu_hat, rec.alpha_hat,
                    rec.scaled_theta_err, rec.scaled_mu_err, rec.scaled_alpha_err, rec.status,
                )]  # fmt: skip
            )


def write_summary_csv(file, summary: ExperimentSummary) -> None:
    cfg = summary.config
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for cell in summary.cells:
            head = [cfg.spec.token, cfg.params.theta, cfg.params.mu, cell.T, cell.n,
                    cell.replications, cell.failures, cell.infinite]  # fmt: skip
            w.writerow([_fmt(v) for v in head] + [_fmt(cell.stats[k]) for k in SUMMARY_HEADER[len(head):]])


_CONFIG_KEYS = {"kernel", "theta", "mu", "horizon", "replications", "base_seed", "scheme", "method"}
_REQUIRED = {"kernel", "theta", "mu", "horizon", "replications", "base_seed"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; ``horizon = T,n`` may repeat."""
    values: dict[str, str] = {}
    horizons = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key == "horizon":
            try:
                T, n = value.split(",")
                horizons.append((float(T), int(n)))
            except ValueError:
                raise ValueError(f"line {lineno}: horizon must be 'T,n', got {value!r}") from None
            continue
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    missing = _REQUIRED - set(values) - ({"horizon"} if horizons else set())
    if missing:
        raise ValueError(f"missing keys: {', '.join(sorted(missing))}")
    return ExperimentConfig(
        spec=KernelSpec.from_token(values["kernel"]),
        params=VasicekParams(float(values["theta"]), float(values["mu"])),
        horizons=tuple(horizons),
        replications=int(values["replications"]),
        base_seed=int(values["base_seed"], 0),
        scheme=values.get("scheme", "explicit"),
        method=values.get("method", "auto"),
    )
