"""Command-line entry point: ``vasicek-lse <command> ...``.

Exit status: 0 success, 2 usage error, 3 data error or degenerate path,
4 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
import time
from pathlib import Path

from . import __version__
from .asymptotics import (
    limit_constants,
    sample_alpha_limit,
    sample_joint_limit,
    sample_mu_limit,
    sample_theta_limit,
)
from .estimators import ESTIMATE_HEADER, DegeneratePath, estimate_values
from .kernels import KernelSpec
from .montecarlo import ExperimentFailed, parse_config, run_experiment, write_records_csv, write_summary_csv
from .plotting import line_chart_svg
from .sampler import build_factor, path_filename, read_path_csv, sample_path, TimeGrid
from .vasicek import HorizonTooLarge, VasicekParams, solve, write_vasicek_csv

log = logging.getLogger("vasicek_lse")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
WORKERS_ENV = "VASICEK_LSE_WORKERS"
MANIFEST_NAME = "manifest.json"

_FILENAME_RE = re.compile(r"^(?P<token>.+)_T(?P<T>[^_]+)_n(?P<n>\d+)_seed(?P<seed>\d+)\.csv$")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _row(values) -> str:
    return ",".join(_fmt(v) for v in values)


def _kernel(token: str) -> KernelSpec:
    try:
        return KernelSpec.from_token(token)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _params(theta: float, mu: float) -> VasicekParams:
    try:
        return VasicekParams(theta, mu)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_manifest(out_dir: Path, command: str, argv: list[str], config: dict, outputs: list[str], t0: float):
    manifest = {
        "command": command,
        "argv": argv,
        "config": config,
        "version": __version__,
        "base_seed": config.get("base_seed", config.get("seed")),
        "outputs": outputs,
        "duration_s": round(time.perf_counter() - t0, 6),
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args, argv) -> int:
    t0 = time.perf_counter()
    spec = _kernel(args.kernel)
    params = _params(args.theta, args.mu)
    if args.n < 2:
        raise UsageError(f"--n must be >= 2, got {args.n}")
    if not args.T > 0:
        raise UsageError(f"--T must be positive, got {args.T}")
    grid = TimeGrid(args.T, args.n)
    factor = build_factor(spec, grid, args.method)
    path = solve(params, sample_path(factor, args.seed), args.scheme)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = path_filename(spec, args.T, args.n, args.seed)
    write_vasicek_csv(out_dir / name, path)
    outputs = [name]
    if args.svg:
        svg = name[:-4] + ".svg"
        (out_dir / svg).write_text(
            line_chart_svg(grid.nodes, {"X_t": path.x}, title=f"{spec.token}, theta={args.theta:g}, mu={args.mu:g}",
                           xlabel="t", ylabel="X_t")  # fmt: skip
        )
        outputs.append(svg)
    config = {
        "kernel": spec.token, "theta": params.theta, "mu": params.mu, "T": grid.T, "n": grid.n,
        "seed": args.seed, "scheme": args.scheme, "method": factor.method,
    }  # fmt: skip
    _write_manifest(out_dir, "simulate", argv, config, outputs, t0)
    print(out_dir / name)
    return EXIT_OK


def cmd_estimate(args, argv) -> int:
    try:
        grid, cols = read_path_csv(args.path)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from None
    if "x" not in cols:
        raise DataError(f"{args.path}: no 'x' column")
    m = _FILENAME_RE.match(Path(args.path).name)
    seed = m["seed"] if m else ""
    token = args.kernel or (m["token"] if m else "")
    spec = _kernel(token) if token else None
    est = estimate_values(grid, cols["x"])
    header = list(ESTIMATE_HEADER)
    row = [seed, token, "" if args.theta is None else args.theta, "" if args.mu is None else args.mu,
           grid.T, grid.n, est.variant, est.theta_hat, est.mu_hat, est.alpha_hat]  # fmt: skip
    if args.theta is not None and args.mu is not None:
        p = _params(args.theta, args.mu)
        header += ["scaled_theta_err", "scaled_mu_err", "scaled_alpha_err"]
        row.append(math.exp(p.theta * grid.T) * (est.theta_hat - p.theta))
        if spec is not None:
            poly = grid.T ** (1.0 - spec.eta)
            row += [poly * (est.mu_hat - p.mu), poly * (est.alpha_hat - p.alpha)]
        else:
            row += ["", ""]
    print(",".join(header))
    print(_row(row))
    return EXIT_OK


def cmd_constants(args, argv) -> int:
    spec = _kernel(args.kernel)
    if not args.theta > 0:
        raise UsageError("--theta must be positive")
    c = limit_constants(spec, args.theta)
    print("kernel,theta,eta,lambda_sq,sigma_sq,var_zeta_inf")
    print(_row([spec.token, float(args.theta), c.eta, c.lambda_sq, c.sigma_sq, c.var_zeta_inf]))
    return EXIT_OK


def cmd_limit_sample(args, argv) -> int:
    spec = _kernel(args.kernel)
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    if not args.theta > 0:
        raise UsageError("--theta must be positive")
    if args.count == 0:
        return EXIT_OK
    c = limit_constants(spec, args.theta)
    if args.law == "theta":
        cols = {"theta_limit": sample_theta_limit(c, args.mu, args.seed, args.count)}
    elif args.law == "mu":
        cols = {"mu_limit": sample_mu_limit(c, args.seed, args.count)}
    elif args.law == "alpha":
        cols = {"alpha_limit": sample_alpha_limit(c, args.seed, args.count)}
    else:
        a, b = sample_joint_limit(c, args.mu, args.seed, args.count)
        cols = {"theta_limit": a, "mu_limit": b}
    lines = [",".join(cols)] + [_row(vals) for vals in zip(*cols.values())]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    try:
        return int(os.environ.get(WORKERS_ENV, "1"))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer") from None


def cmd_experiment(args, argv) -> int:
    t0 = time.perf_counter()
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(str(exc)) from None
    try:
        cfg = parse_config(text)
    except ValueError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    workers = _workers(args)
    summary = run_experiment(cfg, workers=workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records_csv(out_dir / "raw.csv", summary)
    write_summary_csv(out_dir / "summary.csv", summary)
    outputs = ["raw.csv", "summary.csv"]
    if len(summary.cells) > 1:
        Ts = [cell.T for cell in summary.cells]
        (out_dir / "summary.svg").write_text(
            line_chart_svg(
                Ts,
                {
                    "median |theta~ - theta|": [cell.stats["median_abs_theta_err"] for cell in summary.cells],
                    "median |mu~ - mu|": [cell.stats["median_abs_mu_err"] for cell in summary.cells],
                },
                title=f"{cfg.spec.token}: median estimation error",
                xlabel="T",
                ylabel="median abs error",
                logy=True,
            )
        )
        outputs.append("summary.svg")
    config = dict(cfg.as_items())
    config["horizon"] = [f"{T!r},{n}" for T, n in cfg.horizons]
    config["base_seed"] = cfg.base_seed
    config["config_text"] = cfg.to_text()
    _write_manifest(out_dir, "experiment", argv, config, outputs, t0)
    for cell in summary.cells:
        s = cell.stats
        log.info("T=%g n=%d failures=%d median|dtheta|=%.3g median|dmu|=%.3g ks_mu=%.3f",
                 cell.T, cell.n, cell.failures, s["median_abs_theta_err"], s["median_abs_mu_err"], s["ks_mu"])  # fmt: skip
    print(out_dir / "summary.csv")
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    """Re-run the command recorded in a manifest."""
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        old = list(manifest["argv"])
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"unreadable manifest {args.manifest}: {exc}") from None
    if args.out_dir is not None:
        old = [a for a in _strip_opt(old, "--out-dir")] + ["--out-dir", args.out_dir]
    if args.workers is not None:
        old = [a for a in _strip_opt(old, "--workers")] + ["--workers", str(args.workers)]
    return main(old)


def _strip_opt(argv: list[str], opt: str) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == opt:
            skip = True
            continue
        if a.startswith(opt + "="):
            continue
        out.append(a)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vasicek-lse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample a driver path and the Vasicek solution")
    s.add_argument("kernel", help="e.g. fbm:H=0.7, subfbm:H=0.3, bifbm:H=0.6,K=0.8")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--scheme", choices=("explicit", "euler"), default="explicit")
    s.add_argument("--method", choices=("auto", "cholesky", "circulant"), default="auto")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--svg", action="store_true", help="also write a line plot of X_t")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate (theta, mu, alpha) from a path CSV")
    e.add_argument("path")
    e.add_argument("--theta", type=float)
    e.add_argument("--mu", type=float)
    e.add_argument("--kernel", help="kernel token, needed for scaled mu/alpha errors if not in the file name")
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("constants", help="print the limit constants")
    c.add_argument("kernel")
    c.add_argument("--theta", type=float, required=True)
    c.set_defaults(func=cmd_constants)

    ls = sub.add_parser("limit-sample", help="draw from the limit laws")
    ls.add_argument("kernel")
    ls.add_argument("--theta", type=float, required=True)
    ls.add_argument("--mu", type=float, required=True)
    ls.add_argument("--count", type=int, required=True)
    ls.add_argument("--seed", type=int, default=0)
    ls.add_argument("--law", choices=("theta", "mu", "alpha", "joint"), default="joint")
    ls.add_argument("--out")
    ls.set_defaults(func=cmd_limit_sample)

    x = sub.add_parser("experiment", help="run a Monte Carlo experiment from a config file")
    x.add_argument("config")
    x.add_argument("--out-dir", default="experiment-out")
    x.add_argument("--workers", type=int, default=None, help=f"default: ${WORKERS_ENV} or 1")
    x.set_defaults(func=cmd_experiment)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest.json")
    r.add_argument("manifest")
    r.add_argument("--out-dir", default=None)
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"vasicek-lse: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegeneratePath, ExperimentFailed, HorizonTooLarge) as exc:
        print(f"vasicek-lse: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"vasicek-lse: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
