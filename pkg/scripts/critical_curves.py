#!/usr/bin/env python3
"""Critical curves in seed-intensity space for two identical communities.

Sweeps the surface parametrization for several cross/intra ratios psi (at
r = 2) and several thresholds r (at psi = 1/3), one output directory per
curve; curve_alpha.dat holds the (alpha_1, alpha_2) pairs.

Usage: python scripts/critical_curves.py [--out out/critical]
"""

import argparse
import json
import os
import tempfile

from sbmboot.cli import main as cli_main


def run_one(psi: float, r: int, out: str) -> int:
    cfg = {
        "mode": "critical-curve",
        "chi": [[1.0, psi], [psi, 1.0]],
        "r": r,
        "theta_grid": {"log10_min": -3, "log10_max": 3, "num": 400},
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json",
                                     delete=False) as fh:
        json.dump(cfg, fh)
        path = fh.name
    return cli_main(["critical-curve", "--config", path, "--out", out])


def main(out_base: str) -> int:
    rc = 0
    for psi in (0.1, 1 / 3, 0.6, 0.9):
        rc |= run_one(psi, 2, os.path.join(out_base, f"psi{psi:.2f}_r2"))
    for r in (2, 3, 4):
        rc |= run_one(1 / 3, r, os.path.join(out_base, f"psi0.33_r{r}"))
    return rc


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out/critical")
    args = ap.parse_args()
    raise SystemExit(main(args.out))
