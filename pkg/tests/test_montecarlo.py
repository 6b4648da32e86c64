import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtr

from vasicek_lse.kernels import KernelSpec
from vasicek_lse.montecarlo import (
    ExperimentConfig,
    ExperimentFailed,
    InsufficientSamples,
    ks_statistic,
    parse_config,
    run_experiment,
    run_replication,
    write_records_csv,
    write_summary_csv,
)
from vasicek_lse.rng import standard_normals
from vasicek_lse.vasicek import VasicekParams

FBM05 = KernelSpec("fbm", 0.5)


def cfg(T=(4.0,), n=512, R=20, mu=2.0, spec=FBM05, seed=7):
    return ExperimentConfig(spec, VasicekParams(1.0, mu), tuple((t, n) for t in T), R, seed)


def test_replication_is_deterministic():
    c = cfg()
    assert run_replication(c, 0, 5) == run_replication(c, 0, 5)
    assert run_replication(c, 0, 5) != run_replication(c, 0, 6)
    with pytest.raises(IndexError):
        run_replication(c, 1, 0)


def test_theta_band_at_long_horizon():
    c = ExperimentConfig(FBM05, VasicekParams(1.0, 1.0), ((10.0, 2**13),), 500, 99)
    s = run_experiment(c)
    th = s.cells[0].theta_hat
    assert np.mean((th > 0.8) & (th < 1.2)) >= 0.95


def test_degenerate_injection_is_counted():
    c = cfg(mu=0.0)

    def hook(grid, seed):
        from vasicek_lse.rng import mix

        if seed == mix(c.base_seed, 0, 3):
            return np.zeros(grid.n + 1)
        return np.cumsum(np.concatenate([[0.0], standard_normals(seed, grid.n)])) * math.sqrt(grid.step)

    s = run_experiment(c, driver_hook=hook)
    cell = s.cells[0]
    assert cell.failures == 1
    assert cell.failed_seeds == (s.records[3].seed,)
    assert s.records[3].status == "degenerate"
    assert len(cell.theta_hat) == c.replications - 1


def test_too_many_failures_abort():
    c = cfg(mu=0.0)
    with pytest.raises(ExperimentFailed):
        run_experiment(c, driver_hook=lambda grid, seed: np.zeros(grid.n + 1))


def test_worker_count_does_not_change_output(tmp_path):
    c = cfg(T=(3.0, 4.0), R=24)
    a, b = run_experiment(c, workers=1), run_experiment(c, workers=4)
    for name, s in (("a", a), ("b", b)):
        write_records_csv(tmp_path / f"{name}_raw.csv", s)
        write_summary_csv(tmp_path / f"{name}_sum.csv", s)
    assert (tmp_path / "a_raw.csv").read_bytes() == (tmp_path / "b_raw.csv").read_bytes()
    assert (tmp_path / "a_sum.csv").read_bytes() == (tmp_path / "b_sum.csv").read_bytes()


def test_consistency_trend_fbm():
    c = ExperimentConfig(FBM05, VasicekParams(1.0, 2.0), ((4.0, 4096), (6.0, 4096), (8.0, 4096)), 500, 20240501)
    s = run_experiment(c)
    th = [cell.stats["median_abs_theta_err"] for cell in s.cells]
    mu = [cell.stats["median_abs_mu_err"] for cell in s.cells]
    assert th[0] > th[1] > th[2]
    assert mu[0] > mu[1] > mu[2]


def test_ks_cell_mu_fbm():
    c = ExperimentConfig(FBM05, VasicekParams(1.0, 2.0), ((8.0, 4096),), 1000, 20240501)
    assert run_experiment(c).cells[0].stats["ks_mu"] < 0.10


def test_ks_self_consistency():
    z = standard_normals(5, 10_000)
    assert ks_statistic(z, ndtr) < 0.02
    assert ks_statistic(z, ndtr) == pytest.approx(stats.kstest(z, "norm").statistic, abs=1e-12)


def test_ks_identical_samples():
    z = standard_normals(6, 500)
    assert ks_statistic(z, z) == 0.0


def test_ks_wrong_scale():
    z = standard_normals(7, 10_000)
    x = np.linspace(0, 5, 100_001)
    sup = np.max(np.abs(ndtr(x) - ndtr(x / 2)))
    # maximum at x^2 = (8/3) ln 2
    xs = math.sqrt(8 * math.log(2) / 3)
    assert sup == pytest.approx(ndtr(xs) - ndtr(xs / 2), abs=1e-9)
    assert sup == pytest.approx(0.16134, abs=1e-5)
    assert ks_statistic(z, lambda v: ndtr(v / 2)) == pytest.approx(sup, abs=0.02)


def test_ks_two_sample_matches_scipy():
    a, b = standard_normals(1, 300), 1.1 * standard_normals(2, 700)
    assert ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_ks_errors():
    with pytest.raises(InsufficientSamples):
        ks_statistic([1.0, 2.0], ndtr)
    with pytest.raises(ValueError):
        ks_statistic([math.nan] + [0.0] * 20, ndtr)


def test_ks_accepts_infinities():
    x = np.concatenate([standard_normals(3, 100), [np.inf, -np.inf]])
    assert 0.0 <= ks_statistic(x, ndtr) < 0.2


CONFIG = """
# comment line
kernel = subfbm:H=0.3
theta = 1
mu = 2      # trailing comment
horizon = 4,4096
horizon = 6,4096
replications = 100
base_seed = 0x1234
"""


def test_parse_config_roundtrip():
    c = parse_config(CONFIG)
    assert c.spec == KernelSpec("subfbm", 0.3)
    assert c.horizons == ((4.0, 4096), (6.0, 4096))
    assert c.base_seed == 0x1234
    assert parse_config(c.to_text()) == c


@pytest.mark.parametrize(
    "text",
    [
        CONFIG + "replicatons = 5\n",
        CONFIG + "theta = 2\n",
        CONFIG.replace("base_seed = 0x1234", ""),
        CONFIG + "horizon = 4\n",
        CONFIG + "just words\n",
        CONFIG.replace("replications = 100", "replications = 1"),
        CONFIG + "scheme = rk4\n",
    ],
)
def test_parse_config_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)
