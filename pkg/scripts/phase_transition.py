#!/usr/bin/env python3
"""Percolation-frequency sweep across the predicted threshold.

Two identical communities, threshold r = 2, cross/intra ratio psi = 1/3.
The equal-split critical intensity is (1 + psi)^(-2) = 0.5625; the sweep
grid brackets it and the output freq_curve.dat holds (intensity, frequency)
pairs with the interpolated 50% crossing in summary.json.

Usage: python scripts/phase_transition.py [--n 200000] [--trials 100]
       [--workers N] [--out out/phase]
"""

import argparse
import json
import tempfile

from sbmboot.cli import main as cli_main


def run(n_total: int, trials: int, workers: int, out: str, seed: int) -> int:
    p = n_total ** -0.6
    psi = 1 / 3
    cfg = {
        "mode": "sweep-alpha",
        "sizes": [n_total // 2, n_total // 2],
        "edge_probs": [[p, psi * p], [psi * p, p]],
        "r": 2,
        "alpha_grid": [0.3, 0.4, 0.5, 0.5625, 0.65, 0.75, 0.9],
        "trials": trials,
        "seed": seed,
        "workers": workers,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json",
                                     delete=False) as fh:
        json.dump(cfg, fh)
        path = fh.name
    return cli_main(["sweep-alpha", "--config", path, "--out", out,
                     "--workers", str(workers)])


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--seed", type=int, default=20240809)
    ap.add_argument("--out", default="out/phase")
    args = ap.parse_args()
    raise SystemExit(run(args.n, args.trials, args.workers, args.out,
                         args.seed))
