#!/usr/bin/env python3
"""Normalized critical seed counts of the two extreme allocations.

For k identical communities with cross/intra ratio psi = 0.1 and
r in {2, 4}, emits the total critical seed count (relative to a single
community of the same total size) for equal-split and all-in-one seeding.
Output: kvary_{equal_split,all_in_one}_r{2,4}.dat, two columns (k, ratio).

Usage: python scripts/allocation_curves.py [--kmax 50] [--out out/kvary]
"""

import argparse
import json
import tempfile

from sbmboot.cli import main as cli_main


def run(k_max: int, out: str) -> int:
    cfg = {
        "mode": "allocations",
        "psi": 0.1,
        "r_values": [2, 4],
        "k_min": 2,
        "k_max": k_max,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json",
                                     delete=False) as fh:
        json.dump(cfg, fh)
        path = fh.name
    return cli_main(["allocations", "--config", path, "--out", out])


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--kmax", type=int, default=50)
    ap.add_argument("--out", default="out/kvary")
    args = ap.parse_args()
    raise SystemExit(run(args.kmax, args.out))
