"""Reproducible Monte Carlo experiments and theory/simulation comparisons.

Every run is fully determined by the config payload plus a 64-bit master
seed: each trial derives its graph, seed-selection and run substreams from
(master, cell index, trial index), so results are byte-identical regardless
of the worker count.  Aggregation always happens on rows sorted by
(cell, trial).
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classify import Classification, IntegratorOptions, classify
from .critical import extreme_allocations
from .fluid import (FluidModel, critical_seed_scale, expected_remainder,
                    rho)
from .percolation import (FixedSchedule, RoundRobin, UniformUsable,
                          build_schedule_from_points, naive_bootstrap,
                          run_bootstrap, strategy_invariance_check)
from .rngutil import KIND_TRIAL, substream, substream_state64
from .sbm import SbmParams, generate_sbm, select_seeds


# ---------------------------------------------------------------------------
# config plumbing

@dataclass
class CellSpec:
    """One sweep cell: explicit seed counts, or an intensity alpha applied
    along a per-community direction (seeds = round(alpha * dir_i * g_i))."""

    seeds: tuple[int, ...] | None = None
    alpha: float | None = None
    direction: tuple[float, ...] | None = None

    def resolve(self, g_scales: np.ndarray) -> np.ndarray:
        if self.seeds is not None:
            return np.asarray(self.seeds, dtype=np.int64)
        direction = (np.ones_like(g_scales) if self.direction is None
                     else np.asarray(self.direction, dtype=float))
        return np.rint(self.alpha * direction * g_scales).astype(np.int64)

    def label(self) -> float:
        return math.nan if self.alpha is None else float(self.alpha)


@dataclass
class SimulatePlan:
    params_base: SbmParams          # sizes, edge_probs, r (seeds overridden)
    cells: list[CellSpec]
    trials: int
    regenerate_graph: bool = True

    @classmethod
    def from_payload(cls, payload: dict) -> "SimulatePlan":
        for key in ("sizes", "edge_probs", "r", "trials"):
            if key not in payload:
                raise ValueError(f"config is missing required field {key!r}")
        base = SbmParams(sizes=payload["sizes"],
                         edge_probs=payload["edge_probs"],
                         r=payload["r"],
                         seeds=[0] * len(payload["sizes"]))
        cells = []
        for spec in payload.get("cells", []):
            if "seeds" in spec:
                cells.append(CellSpec(seeds=tuple(spec["seeds"])))
            else:
                cells.append(CellSpec(alpha=float(spec["alpha"]),
                                      direction=tuple(spec["direction"])
                                      if "direction" in spec else None))
        if "alpha_grid" in payload:
            for a in payload["alpha_grid"]:
                cells.append(CellSpec(alpha=float(a),
                                      direction=tuple(payload["direction"])
                                      if "direction" in payload else None))
        if not cells:
            raise ValueError("config defines no cells "
                             "(use 'cells' or 'alpha_grid')")
        return cls(params_base=base, cells=cells,
                   trials=int(payload["trials"]),
                   regenerate_graph=bool(payload.get("regenerate_graph",
                                                     True)))

    def g_scales(self) -> np.ndarray:
        p = self.params_base
        return np.array([critical_seed_scale(n_i, p.p[i], p.r)
                         for i, n_i in enumerate(p.sizes)])


# ---------------------------------------------------------------------------
# trial execution

_WORKER_PLAN: SimulatePlan | None = None
_WORKER_SEED: int = 0
_WORKER_GRAPH_CACHE: dict = {}


def _trial_tokens(master_seed: int, cell: int, trial: int):
    graph_token = substream_state64(master_seed, KIND_TRIAL, cell, trial, 0)
    seed_token = substream_state64(master_seed, KIND_TRIAL, cell, trial, 1)
    run_token = substream_state64(master_seed, KIND_TRIAL, cell, trial, 2)
    return graph_token, seed_token, run_token


def _init_worker(plan: SimulatePlan, master_seed: int) -> None:
    global _WORKER_PLAN, _WORKER_SEED, _WORKER_GRAPH_CACHE
    _WORKER_PLAN = plan
    _WORKER_SEED = master_seed
    _WORKER_GRAPH_CACHE = {}


def _run_trial(task: tuple[int, int]) -> tuple[int, int, int, list[int]]:
    cell_idx, trial_idx = task
    plan = _WORKER_PLAN
    g_scales = plan.g_scales()
    a_vec = plan.cells[cell_idx].resolve(g_scales)
    graph_token, seed_token, run_token = _trial_tokens(
        _WORKER_SEED, cell_idx, trial_idx)
    if not plan.regenerate_graph:
        # one shared graph per cell, still keyed only by config + master seed
        graph_token = substream_state64(_WORKER_SEED, KIND_TRIAL, cell_idx,
                                        0, 0)
    params = SbmParams(sizes=plan.params_base.sizes,
                       edge_probs=plan.params_base.edge_probs,
                       r=plan.params_base.r, seeds=tuple(int(x) for x in a_vec))
    cache_key = (cell_idx, graph_token)
    graph = _WORKER_GRAPH_CACHE.get(cache_key)
    if graph is None:
        graph = generate_sbm(params, seed=graph_token)
        if not plan.regenerate_graph:
            _WORKER_GRAPH_CACHE.clear()
            _WORKER_GRAPH_CACHE[cache_key] = graph
    seeds = select_seeds(graph, a_vec, seed=seed_token)
    res = run_bootstrap(graph, seeds, UniformUsable(), rng_seed=run_token)
    return (cell_idx, trial_idx, res.final_size,
            [int(x) for x in res.per_community_final])


def _execute_trials(plan: SimulatePlan, master_seed: int, workers: int):
    tasks = [(c, t) for c in range(len(plan.cells))
             for t in range(plan.trials)]
    if workers <= 1 or len(tasks) <= 1:
        _init_worker(plan, master_seed)
        rows = [_run_trial(task) for task in tasks]
    else:
        with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker,
                initargs=(plan, master_seed)) as pool:
            rows = list(pool.map(_run_trial, tasks, chunksize=4))
    rows.sort(key=lambda row: (row[0], row[1]))
    return rows


# ---------------------------------------------------------------------------
# sweep results

@dataclass
class CellResult:
    alpha: float
    seeds_per_community: tuple[int, ...]
    final_sizes: np.ndarray

    def stats(self, n_total: int, g1: float) -> dict:
        a = self.final_sizes.astype(float)
        if a.size == 0:
            return {"trials": 0}
        ratio_g = a / g1
        freq = float(np.mean(a > n_total / 2.0))
        return {
            "trials": int(a.size),
            "alpha": self.alpha,
            "seeds_per_community": list(self.seeds_per_community),
            "mean_final": float(np.mean(a)),
            "mean_over_g1": float(np.mean(ratio_g)),
            "se_over_g1": float(np.std(ratio_g, ddof=1)
                                / math.sqrt(a.size)) if a.size > 1 else 0.0,
            "quantiles_over_g1": [float(np.quantile(ratio_g, q))
                                  for q in (0.1, 0.5, 0.9)],
            "mean_over_n": float(np.mean(a / n_total)),
            "percolation_frequency": freq,
            "freq_se": float(math.sqrt(max(freq * (1 - freq), 1.0 / a.size)
                                       / a.size)),
        }


@dataclass
class SweepResult:
    plan: SimulatePlan
    master_seed: int
    cells: list[CellResult]
    g_scales: np.ndarray

    @property
    def n_total(self) -> int:
        return self.plan.params_base.n

    def summary(self) -> dict:
        g1 = float(self.g_scales[0])
        return {
            "n_total": self.n_total,
            "g_scales": [float(g) for g in self.g_scales],
            "trials_per_cell": self.plan.trials,
            "master_seed": self.master_seed,
            "cells": [c.stats(self.n_total, g1) for c in self.cells],
        }


def run_simulate(payload: dict, master_seed: int,
                 workers: int = 1) -> SweepResult:
    """Monte Carlo sweep: per cell, generate graphs, select seeds, run the
    activation process and collect final sizes."""
    plan = SimulatePlan.from_payload(payload)
    g_scales = plan.g_scales()
    rows = _execute_trials(plan, master_seed, workers)
    cells = []
    for c, cell in enumerate(plan.cells):
        sizes = np.array([row[2] for row in rows if row[0] == c],
                         dtype=np.int64)
        cells.append(CellResult(alpha=cell.label(),
                                seeds_per_community=tuple(
                                    int(x) for x in cell.resolve(g_scales)),
                                final_sizes=sizes))
    return SweepResult(plan=plan, master_seed=master_seed, cells=cells,
                       g_scales=g_scales)


def write_sweep_outputs(result: SweepResult, rows_path: str,
                        summary_path: str) -> None:
    g1 = float(result.g_scales[0])
    n_total = result.n_total
    with open(rows_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "trial", "alpha", "seeds_total", "A_star",
                         "A_star_over_g1", "A_star_over_n", "percolated"])
        for c, cell in enumerate(result.cells):
            seeds_total = int(np.sum(cell.seeds_per_community))
            for t, a_star in enumerate(cell.final_sizes):
                a_star = int(a_star)
                writer.writerow([c, t, repr(cell.alpha), seeds_total, a_star,
                                 repr(a_star / g1), repr(a_star / n_total),
                                 int(a_star > n_total / 2)])
    _write_json(summary_path, result.summary())


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def percolation_curve(result: SweepResult) -> list[tuple[float, float]]:
    """(alpha, percolation frequency) points sorted by alpha."""
    pts = []
    n_total = result.n_total
    for cell in result.cells:
        freq = float(np.mean(cell.final_sizes > n_total / 2.0)) \
            if cell.final_sizes.size else math.nan
        pts.append((cell.alpha, freq))
    pts.sort(key=lambda p: p[0])
    return pts


def crossing_estimate(curve: list[tuple[float, float]],
                      level: float = 0.5) -> float:
    """Linear-interpolated alpha where the frequency curve crosses level."""
    for (a0, f0), (a1, f1) in zip(curve[:-1], curve[1:]):
        if (f0 - level) * (f1 - level) <= 0 and f0 != f1:
            return a0 + (level - f0) * (a1 - a0) / (f1 - f0)
    return math.nan


# ---------------------------------------------------------------------------
# fluid-limit convergence checks

def fluid_gap_table(instances: list[SbmParams], alpha: np.ndarray,
                    x_points: list[np.ndarray]) -> list[dict]:
    """Gap between the finite-size normalized expected usable count and its
    limit at selected grid points.

    For each finite instance, seeds are set to round(alpha_i g_i) and the
    table reports R(floor(x g)) / g against the limit drift at x (computed
    with the instance's effective intensities a_i / g_i, so quantization of
    the seed counts does not pollute the comparison).
    """
    rows = []
    for params in instances:
        k = params.k
        g = np.array([critical_seed_scale(params.sizes[i], params.p[i],
                                          params.r) for i in range(k)])
        a_vec = np.rint(np.asarray(alpha) * g).astype(int)
        inst = SbmParams(sizes=params.sizes, edge_probs=params.edge_probs,
                         r=params.r, seeds=tuple(int(x) for x in a_vec))
        alpha_eff = a_vec / g
        chi_fin = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                chi_fin[i, j] = inst.q[i, j] * g[j] / (inst.p[i] * g[i])
        model = FluidModel(k, inst.r, alpha_eff, chi_fin)
        for x in x_points:
            x = np.asarray(x, dtype=float)
            u = np.floor(x * g).astype(np.int64)
            r_over_g = expected_remainder(u, inst) / g
            limit = rho(x, model)
            for i in range(k):
                denom = max(abs(limit[i]), 1e-12)
                rows.append({
                    "n": inst.n, "community": i,
                    "x": [float(v) for v in x],
                    "r_over_g": float(r_over_g[i]),
                    "rho": float(limit[i]),
                    "abs_gap": float(abs(r_over_g[i] - limit[i])),
                    "rel_gap": float(abs(r_over_g[i] - limit[i]) / denom),
                })
    return rows


def schedule_points(model: FluidModel, classification: Classification
                    ) -> list[np.ndarray]:
    """Piecewise-linear curve from the origin through the recursion points
    to the trajectory, suitable for build_schedule_from_points."""
    from .classify import community_levels, initial_point

    m = classification.leading_community
    meta = community_levels(model.chi, source=m)
    _, betas, shrink = initial_point(model, meta, with_details=True)
    pts = [np.zeros(model.k)]
    acc = np.zeros(model.k)
    for h, members in enumerate(meta.levels):
        acc = acc.copy()
        for i in members:
            acc[i] = shrink * betas[h]
        pts.append(acc)
    traj = classification.trajectory
    for y, x in zip(traj.ys, traj.xs):
        if math.isfinite(y):
            pts.append(np.asarray(x))
    pts.append(np.asarray(traj.x_exit))
    return pts


def mean_schedule_trajectory(payload: dict, master_seed: int) -> list[dict]:
    """Mean explored-count trajectory under the fixed schedule vs the fluid
    trajectory at matched times.

    payload: sizes, edge_probs, r, alpha (per community), trials,
    progress_fracs (fractions of the stall point at which to compare).
    Returns one row per (fraction, community) with the relative gap.
    """
    sizes = payload["sizes"]
    q = np.asarray(payload["edge_probs"], dtype=float)
    r = int(payload["r"])
    alpha = np.asarray(payload["alpha"], dtype=float)
    trials = int(payload["trials"])
    fracs = payload.get("progress_fracs", [0.3, 0.5, 0.7])

    k = len(sizes)
    base = SbmParams(sizes=sizes, edge_probs=q, r=r, seeds=[0] * k)
    g = np.array([critical_seed_scale(sizes[i], base.p[i], r)
                  for i in range(k)])
    a_vec = np.rint(alpha * g).astype(np.int64)
    alpha_eff = a_vec / g
    chi_fin = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            chi_fin[i, j] = q[i, j] * g[j] / (base.p[i] * g[i])
    model = FluidModel(k, r, alpha_eff, chi_fin)
    cls = classify(model)
    if cls.verdict != "Sub":
        raise ValueError("schedule tracking expects a subcritical instance")
    w = build_schedule_from_points(schedule_points(model, cls), g)
    strategy = FixedSchedule(w)

    z = cls.trajectory.x_exit
    targets = []
    for frac in fracs:
        x_t = frac * z
        # nearest fluid grid point at or past the requested progress
        grid = [x for y, x in zip(cls.trajectory.ys, cls.trajectory.xs)
                if math.isfinite(y)]
        best = min(grid, key=lambda x: float(np.max(np.abs(x - x_t))))
        t_match = int(np.sum(np.floor(best * g)))
        targets.append((float(frac), best, t_match))

    params = SbmParams(sizes=sizes, edge_probs=q, r=r,
                       seeds=tuple(int(x) for x in a_vec))
    sums = {t_match: np.zeros(k) for _, _, t_match in targets}
    counts = {t_match: 0 for _, _, t_match in targets}
    for trial in range(trials):
        graph_token, seed_token, run_token = _trial_tokens(
            master_seed, 0, trial)
        graph = generate_sbm(params, seed=graph_token)
        seeds = select_seeds(graph, a_vec, seed=seed_token)
        res = run_bootstrap(graph, seeds, strategy, rng_seed=run_token,
                            trace=True)
        u = np.zeros(k, dtype=np.int64)
        by_t = {}
        for t in range(1, res.termination_time + 1):
            u[res.trace_community[t]] += 1
            by_t[t] = u.copy()
        for _, _, t_match in targets:
            if res.termination_time >= t_match:
                sums[t_match] += by_t[t_match]
                counts[t_match] += 1
    rows = []
    for frac, x_fluid, t_match in targets:
        cnt = counts[t_match]
        mean_u = sums[t_match] / max(cnt, 1) / g
        for i in range(k):
            denom = max(abs(float(x_fluid[i])), 1e-12)
            rows.append({
                "frac": frac, "t": t_match, "community": i,
                "mean_u_over_g": float(mean_u[i]),
                "x_fluid": float(x_fluid[i]),
                "rel_gap": float(abs(mean_u[i] - x_fluid[i]) / denom),
                "surviving_trials": cnt,
            })
    return rows


# ---------------------------------------------------------------------------
# oracle check

def run_oracle_check(payload: dict, master_seed: int) -> dict:
    """Randomized agreement check of the chain engine against the
    generation-based oracle across strategies and rng draws."""
    instances = int(payload.get("instances", 25))
    max_size = int(payload.get("max_community_size", 60))
    draws = int(payload.get("rng_draws", 3))
    rng = substream(master_seed, KIND_TRIAL, 9)
    mismatches = []
    for idx in range(instances):
        k = int(rng.integers(1, 4))
        sizes = [int(rng.integers(10, max_size + 1)) for _ in range(k)]
        p_base = float(rng.uniform(0.05, 0.3))
        q = np.full((k, k), p_base * float(rng.uniform(0.1, 1.0)))
        np.fill_diagonal(q, p_base)
        r = int(rng.integers(2, 4))
        a = [int(rng.integers(0, min(5, s) + 1)) for s in sizes]
        params = SbmParams(sizes=sizes, edge_probs=q, r=r, seeds=a)
        graph = generate_sbm(params, seed=int(rng.integers(1 << 60)))
        seeds = select_seeds(graph, a, seed=int(rng.integers(1 << 60)))
        ref = naive_bootstrap(graph, seeds)
        total_steps = int(np.sum(np.rint(np.asarray(sizes))))
        schedule = _arbitrary_schedule(k, min(total_steps, 64), rng)
        strategies = [UniformUsable(), RoundRobin(), FixedSchedule(schedule)]
        agree = strategy_invariance_check(graph, seeds, strategies,
                                          trials=draws,
                                          rng_seed=int(rng.integers(1 << 30)))
        chain = run_bootstrap(graph, seeds, UniformUsable(),
                              rng_seed=int(rng.integers(1 << 30)))
        same = (agree and chain.final_size == ref.final_size
                and np.array_equal(chain.per_community_final,
                                   ref.per_community_final))
        if not same:
            mismatches.append(idx)
    return {"instances": instances, "mismatches": mismatches,
            "ok": not mismatches}


def _arbitrary_schedule(k: int, steps: int, rng: np.random.Generator
                        ) -> np.ndarray:
    w = np.zeros((steps + 1, k), dtype=np.int64)
    for t in range(1, steps + 1):
        w[t] = w[t - 1]
        w[t, int(rng.integers(0, k))] += 1
    return w


# ---------------------------------------------------------------------------
# allocations

def allocation_table(psi: float, r_values, k_values,
                     options: IntegratorOptions | None = None) -> list[dict]:
    rows = []
    for r in r_values:
        for k in k_values:
            equal, all_in_one = extreme_allocations(int(k), float(psi),
                                                    int(r), options=options)
            rows.append({"k": int(k), "r": int(r), "psi": float(psi),
                         "equal_split": equal, "all_in_one": all_in_one})
    return rows
