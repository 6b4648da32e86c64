"""Sample Vasicek paths for several drivers on one grid and plot them.

    python3 scripts/simulate_paths.py --out paths.svg
"""
from __future__ import annotations

import argparse
from pathlib import Path

from vasicek_lse.kernels import KernelSpec
from vasicek_lse.plotting import line_chart_svg
from vasicek_lse.sampler import TimeGrid, build_factor, sample_path
from vasicek_lse.vasicek import VasicekParams, solve

DRIVERS = ("fbm:H=0.3", "fbm:H=0.5", "fbm:H=0.7", "subfbm:H=0.3", "bifbm:H=0.6,K=0.8")


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=0.3)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=Path("paths.svg"))
    args = ap.parse_args(argv)

    grid = TimeGrid(args.T, args.n)
    params = VasicekParams(args.theta, args.mu)
    series = {}
    for token in DRIVERS:
        spec = KernelSpec.from_token(token)
        series[token] = solve(params, sample_path(build_factor(spec, grid), args.seed)).x
    args.out.write_text(
        line_chart_svg(grid.nodes, series, title=f"theta={args.theta:g}, mu={args.mu:g}", xlabel="t", ylabel="X_t")
    )
    print(args.out)


if __name__ == "__main__":
    main()
