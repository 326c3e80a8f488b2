"""Command-line driver.

Usage:  sbmboot SUBCOMMAND --config cfg.json [--seed U64] [--workers N]
        [--out DIR]

Subcommands: simulate, sweep-alpha, classify, critical-curve, fluid-check,
allocations, oracle-check.  The config is a single JSON file holding every
physical parameter explicitly (no hidden defaults for sizes, probabilities,
thresholds or seed counts); command-line flags override the config's
``seed``, ``workers`` and ``out`` fields.  Identical config and seed give
byte-identical output files for any worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .classify import classify
from .critical import critical_curve
from .errors import ReducibleMatrixError
from .experiments import (allocation_table, crossing_estimate,
                          fluid_gap_table, mean_schedule_trajectory,
                          percolation_curve, run_oracle_check, run_simulate,
                          write_sweep_outputs, _write_json)
from .fluid import AsymptoticLimits, FluidModel, chi_from_limits
from .sbm import SbmParams

MODES = ("simulate", "sweep-alpha", "classify", "critical-curve",
         "fluid-check", "allocations", "oracle-check")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SystemExit(f"config parse error in {path}: line {exc.lineno}, "
                         f"column {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise SystemExit(f"cannot read config {path}: {exc}")


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise SystemExit("config is missing required field(s): "
                         + ", ".join(missing))


def parse_fluid_model(spec: dict) -> FluidModel:
    """Model spec: k, r, alpha plus one of chi / limits / identical_psi."""
    _require(spec, "k", "r", "alpha")
    k = int(spec["k"])
    r = int(spec["r"])
    alpha = np.asarray(spec["alpha"], dtype=float)
    if "chi" in spec:
        chi = np.asarray(spec["chi"], dtype=float)
    elif "limits" in spec:
        lim = spec["limits"]
        limits = AsymptoticLimits(nu=lim["nu"], gamma=lim["gamma"],
                                  mu=lim["mu"])
        chi = chi_from_limits(limits, r)
    elif "identical_psi" in spec:
        psi = float(spec["identical_psi"])
        chi = np.full((k, k), psi)
        np.fill_diagonal(chi, 1.0)
    else:
        raise SystemExit("model spec needs 'chi', 'limits' or "
                         "'identical_psi'")
    return FluidModel(k, r, alpha, chi)


def _out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def cmd_simulate(cfg: dict, seed: int, workers: int, out_dir: str) -> int:
    result = run_simulate(cfg, seed, workers)
    write_sweep_outputs(result, _out_path(out_dir, "results.csv"),
                        _out_path(out_dir, "summary.json"))
    return 0


def cmd_sweep_alpha(cfg: dict, seed: int, workers: int, out_dir: str) -> int:
    result = run_simulate(cfg, seed, workers)
    write_sweep_outputs(result, _out_path(out_dir, "results.csv"),
                        _out_path(out_dir, "summary.json"))
    curve = percolation_curve(result)
    with open(_out_path(out_dir, "freq_curve.dat"), "w") as fh:
        for alpha, freq in curve:
            fh.write(f"{alpha!r} {freq!r}\n")
    summary = result.summary()
    summary["crossing_alpha_50pct"] = crossing_estimate(curve)
    _write_json(_out_path(out_dir, "summary.json"), summary)
    return 0


def cmd_classify(cfg: dict, seed: int, workers: int, out_dir: str) -> int:
    model = parse_fluid_model(cfg["model"] if "model" in cfg else cfg)
    try:
        result = classify(model)
    except ReducibleMatrixError as exc:
        raise SystemExit(str(exc))
    _write_json(_out_path(out_dir, "summary.json"), result.to_dict())
    traj = result.trajectory
    with open(_out_path(out_dir, "trajectory.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x_{i + 1}" for i in range(model.k)])
        for y, x in zip(traj.ys, traj.xs):
            writer.writerow([repr(float(y))] + [repr(float(v)) for v in x])
    print(f"verdict: {result.verdict}  margin: {result.margin:.6g}")
    return 0


def cmd_critical_curve(cfg: dict, seed: int, workers: int,
                       out_dir: str) -> int:
    _require(cfg, "chi", "r")
    chi = np.asarray(cfg["chi"], dtype=float)
    r = int(cfg["r"])
    k = chi.shape[0]
    grid_spec = cfg.get("theta_grid", {})
    lo = float(grid_spec.get("log10_min", -3.0))
    hi = float(grid_spec.get("log10_max", 3.0))
    num = int(grid_spec.get("num", 400))
    if k == 2:
        grid = [np.array([1.0, t]) for t in np.logspace(lo, hi, num)]
    else:
        rng = np.random.default_rng(seed)
        grid = [np.concatenate([[1.0],
                                10 ** rng.uniform(lo, hi, k - 1)])
                for _ in range(num)]
    points = critical_curve(chi, r, grid)
    with open(_out_path(out_dir, "curve.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"theta_{i + 1}" for i in range(k)]
                        + [f"alpha_{i + 1}" for i in range(k)]
                        + [f"z_{i + 1}" for i in range(k)] + ["lambda_pf"])
        for pt in points:
            writer.writerow([repr(float(v)) for v in pt.theta]
                            + [repr(float(v)) for v in pt.alpha]
                            + [repr(float(v)) for v in pt.z]
                            + [repr(float(pt.lambda_pf))])
    if k == 2:
        with open(_out_path(out_dir, "curve_alpha.dat"), "w") as fh:
            for pt in points:
                fh.write(f"{pt.alpha[0]!r} {pt.alpha[1]!r}\n")
    print(f"{len(points)} critical points kept")
    return 0


def cmd_fluid_check(cfg: dict, seed: int, workers: int, out_dir: str) -> int:
    _require(cfg, "instances", "alpha", "x_points")
    instances = [SbmParams(sizes=inst["sizes"],
                           edge_probs=inst["edge_probs"],
                           r=int(cfg["r"]),
                           seeds=[0] * len(inst["sizes"]))
                 for inst in cfg["instances"]]
    rows = fluid_gap_table(instances, np.asarray(cfg["alpha"], dtype=float),
                           [np.asarray(x, dtype=float)
                            for x in cfg["x_points"]])
    with open(_out_path(out_dir, "gaps.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "community", "x", "r_over_g", "rho",
                         "abs_gap", "rel_gap"])
        for row in rows:
            writer.writerow([row["n"], row["community"],
                             ";".join(repr(v) for v in row["x"]),
                             repr(row["r_over_g"]), repr(row["rho"]),
                             repr(row["abs_gap"]), repr(row["rel_gap"])])
    summary = {"rows": rows}
    if "track" in cfg:
        track_rows = mean_schedule_trajectory(cfg["track"], seed)
        with open(_out_path(out_dir, "track.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frac", "t", "community", "mean_u_over_g",
                             "x_fluid", "rel_gap", "surviving_trials"])
            for row in track_rows:
                writer.writerow([repr(row["frac"]), row["t"],
                                 row["community"],
                                 repr(row["mean_u_over_g"]),
                                 repr(row["x_fluid"]), repr(row["rel_gap"]),
                                 row["surviving_trials"]])
        summary["track"] = track_rows
    _write_json(_out_path(out_dir, "summary.json"), summary)
    return 0


def cmd_allocations(cfg: dict, seed: int, workers: int, out_dir: str) -> int:
    _require(cfg, "psi", "r_values", "k_min", "k_max")
    k_values = list(range(int(cfg["k_min"]), int(cfg["k_max"]) + 1))
    rows = allocation_table(float(cfg["psi"]), cfg["r_values"], k_values)
    with open(_out_path(out_dir, "allocations.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "r", "psi", "equal_split", "all_in_one"])
        for row in rows:
            writer.writerow([row["k"], row["r"], repr(row["psi"]),
                             repr(row["equal_split"]),
                             repr(row["all_in_one"])])
    for r in cfg["r_values"]:
        for kind in ("equal_split", "all_in_one"):
            name = f"kvary_{kind}_r{r}.dat"
            with open(_out_path(out_dir, name), "w") as fh:
                for row in rows:
                    if row["r"] == r:
                        fh.write(f"{row['k']} {row[kind]!r}\n")
    _write_json(_out_path(out_dir, "summary.json"), {"rows": rows})
    return 0


def cmd_oracle_check(cfg: dict, seed: int, workers: int, out_dir: str) -> int:
    report = run_oracle_check(cfg, seed)
    _write_json(_out_path(out_dir, "summary.json"), report)
    if not report["ok"]:
        print(f"MISMATCH on instances {report['mismatches']}",
              file=sys.stderr)
        return 1
    print(f"{report['instances']} instances agree across engines "
          "and strategies")
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "sweep-alpha": cmd_sweep_alpha,
    "classify": cmd_classify,
    "critical-curve": cmd_critical_curve,
    "fluid-check": cmd_fluid_check,
    "allocations": cmd_allocations,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbmboot",
        description="bootstrap percolation on block models: simulation "
                    "and fluid-limit analysis")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", required=True,
                        help="JSON config file (documented in README)")
        sp.add_argument("--seed", type=int, default=None,
                        help="64-bit master seed (overrides config)")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (overrides config)")
        sp.add_argument("--out", default=None,
                        help="output directory (overrides config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _load_config(args.config)
    if "mode" in cfg and cfg["mode"] != args.mode:
        raise SystemExit(f"config mode {cfg['mode']!r} does not match "
                         f"subcommand {args.mode!r}")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    workers = args.workers if args.workers is not None \
        else int(cfg.get("workers", 1))
    out_dir = args.out if args.out is not None else cfg.get("out", "out")
    return _HANDLERS[args.mode](cfg, seed, workers, out_dir)


if __name__ == "__main__":
    sys.exit(main())
