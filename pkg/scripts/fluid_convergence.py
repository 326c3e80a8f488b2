#!/usr/bin/env python3
"""Finite-size expected dynamics vs the fluid drift, plus schedule tracking.

Emits gaps.csv (normalized expected usable-node count against the limit
drift at several grid points, along a growing instance sequence) and
track.csv (mean explored-count trajectory under the deterministic schedule
against the integrated fluid trajectory, subcritical two-community case).

Usage: python scripts/fluid_convergence.py [--out out/fluid]
"""

import argparse
import json
import tempfile

from sbmboot.cli import main as cli_main


def run(out: str, seed: int) -> int:
    instances = []
    for n in (10 ** 4, 10 ** 5, 10 ** 6):
        p = n ** -0.6
        instances.append({"sizes": [n], "edge_probs": [[p]]})
    n_i = 100_000
    p2 = (1.0 / (60.0 * n_i)) ** 0.5
    psi = 1 / 3
    cfg = {
        "mode": "fluid-check",
        "r": 2,
        "alpha": [0.5],
        "instances": instances,
        "x_points": [[0.2], [0.4], [0.6], [0.8], [1.0]],
        "track": {
            "sizes": [n_i, n_i],
            "edge_probs": [[p2, psi * p2], [psi * p2, p2]],
            "r": 2,
            "alpha": [0.4, 0.4],
            "trials": 20,
            "progress_fracs": [0.3, 0.5, 0.7],
        },
        "seed": seed,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json",
                                     delete=False) as fh:
        json.dump(cfg, fh)
        path = fh.name
    return cli_main(["fluid-check", "--config", path, "--out", out])


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out/fluid")
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    raise SystemExit(run(args.out, args.seed))
