"""End-to-end acceptance suite.

One test per criterion, each printing a single pass/fail line with its
runtime.  Criteria 8 and 9 perform every measurement before asserting, so a
failure message carries the full picture.
"""

import json
import math
import os
import time

import numpy as np
import pytest
from scipy.optimize import brentq

import sbmboot as sb
from sbmboot import FixedSchedule, FluidModel, RoundRobin, UniformUsable
from sbmboot.cli import main as cli_main
from sbmboot.critical import (critical_point, equal_split_ratio,
                              extreme_allocations, identical_chi)
from sbmboot.experiments import run_simulate
from conftest import random_chi, random_point_in_domain

pytestmark = pytest.mark.acceptance


def report(num, name, ok, started, detail=""):
    status = "PASS" if ok else "FAIL"
    line = (f"criterion {num:02d} {name}: {status} "
            f"({time.perf_counter() - started:.1f}s)"
            + (f"  [{detail}]" if detail else ""))
    print(line, flush=True)
    return line


def bernoulli_tail(probs, r):
    dist = [1.0]
    for p in probs:
        new = [0.0] * (len(dist) + 1)
        for c, w in enumerate(dist):
            new[c] += w * (1.0 - p)
            new[c + 1] += w * p
        dist = new
    return math.fsum(dist[r:])


def test_criterion_01_strategy_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    bad = []
    for idx in range(100):
        k = int(rng.integers(1, 4))
        sizes = [int(rng.integers(12, 200 // k + 1)) for _ in range(k)]
        p = float(rng.uniform(0.05, 0.3))
        q = np.full((k, k), p * float(rng.uniform(0.1, 1.0)))
        np.fill_diagonal(q, p)
        r = int(rng.integers(2, 4))
        a = [int(rng.integers(0, min(6, s) + 1)) for s in sizes]
        params = sb.SbmParams(sizes=sizes, edge_probs=q, r=r, seeds=a)
        graph = sb.generate_sbm(params, seed=int(rng.integers(1 << 60)))
        seeds = sb.select_seeds(graph, a, seed=int(rng.integers(1 << 60)))
        sched = np.zeros((int(rng.integers(2, 80)), k), dtype=np.int64)
        for t in range(1, sched.shape[0]):
            sched[t] = sched[t - 1]
            sched[t, int(rng.integers(k))] += 1
        strategies = [UniformUsable(), RoundRobin(), FixedSchedule(sched)]
        ref = sb.naive_bootstrap(graph, seeds)
        key = (ref.final_size, tuple(ref.per_community_final))
        for s_idx, strat in enumerate(strategies):
            for draw in range(5):
                res = sb.run_bootstrap(graph, seeds, strat,
                                       rng_seed=9973 * idx + 131 * s_idx
                                       + draw)
                if (res.final_size, tuple(res.per_community_final)) != key:
                    bad.append((idx, strat.label(), draw))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 10.0
    line = report(1, "strategy invariance + oracle equality", ok, t0,
                  f"100 instances, mismatches={bad}, {elapsed:.1f}s<10s")
    assert ok, line


def test_criterion_02_exact_b_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst_enum = 0.0
    for _ in range(500):
        k = int(rng.integers(1, 4))
        u = rng.integers(0, 7, size=k)
        while u.sum() > 12:
            u = rng.integers(0, 7, size=k)
        q = rng.uniform(0.0, 0.95, size=k)
        r = int(rng.integers(2, 5))
        probs = [float(q[j]) for j in range(k) for _ in range(int(u[j]))]
        gap = abs(sb.exact_b(u, q, r) - bernoulli_tail(probs, r))
        worst_enum = max(worst_enum, gap)
    worst_mc = 0.0
    for case in range(20):
        k = int(rng.integers(1, 4))
        u = rng.integers(10_000, 200_000, size=k)
        r = int(rng.integers(2, 5))
        # keep the tail in a measurable range for the MC comparison
        target = rng.uniform(0.05, 0.95)
        scale = float(rng.uniform(0.5, 2.0))
        q = np.full(k, scale * r / float(u.sum()))
        exact = sb.exact_b(u, q, r)
        est, se = sb.empirical_b(u, q, r, trials=1_000_000,
                                 rng=4000 + case)
        worst_mc = max(worst_mc, abs(est - exact) / max(se, 1e-12))
    elapsed = time.perf_counter() - t0
    ok = worst_enum < 1e-12 and worst_mc < 4.0 and elapsed < 30.0
    line = report(2, "exact activation probability", ok, t0,
                  f"enum gap={worst_enum:.2e}<1e-12, "
                  f"mc={worst_mc:.2f}se<4se, {elapsed:.1f}s<30s")
    assert ok, line


def test_criterion_03_jacobian_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    h = 1e-5
    worst = 0.0
    for k in (1, 2, 4):
        for r in (2, 3):
            for _ in range(100):
                chi = random_chi(rng, k)
                m = FluidModel(k, r, rng.uniform(0, 1, k), chi)
                x = random_point_in_domain(rng, m, margin=0.05)
                jac = sb.jacobian_rho(x, m)
                for j in range(k):
                    e = np.zeros(k)
                    e[j] = h
                    fd = (sb.rho(x + e, m) - sb.rho(x - e, m)) / (2 * h)
                    worst = max(worst, float(np.max(np.abs(jac[:, j] - fd))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 5.0
    line = report(3, "Jacobian vs central differences", ok, t0,
                  f"max gap={worst:.2e}<1e-6, {elapsed:.1f}s<5s")
    assert ok, line


def test_criterion_04_single_community_endpoint():
    t0 = time.perf_counter()
    worst = 0.0
    for r in (2, 3, 4):
        for tenths in range(1, 10):
            alpha = tenths / 10.0
            res = sb.classify(FluidModel(1, r, [alpha], [[1.0]]))
            phi = brentq(lambda x: r * x - x ** r - (r - 1) * alpha,
                         0.0, 1.0)
            target = (r / (r - 1)) * phi
            worst = max(worst, abs(res.x_exit[0] - target))
            assert res.verdict == "Sub"
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 5.0
    line = report(4, "single-community stall endpoint", ok, t0,
                  f"max gap={worst:.2e}<1e-8, {elapsed:.1f}s<5s")
    assert ok, line


def test_criterion_05_critical_surface_self_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    kept = 0
    tried = 0
    worst_rho = 0.0
    worst_lam = 0.0
    verdicts = {}
    while kept < 200 and tried < 10_000:
        tried += 1
        k = int(rng.integers(2, 4))
        r = int(rng.integers(2, 4))
        chi = random_chi(rng, k, lo=0.05, hi=0.6)
        theta = np.concatenate([[1.0], np.exp(rng.uniform(-0.5, 0.5,
                                                          k - 1))])
        try:
            pt = critical_point(theta, chi, r)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not pt.in_unit_box or np.any(pt.z <= 0):
            continue
        kept += 1
        worst_rho = max(worst_rho, pt.rho_residual)
        worst_lam = max(worst_lam, abs(pt.lambda_pf))
        v = sb.classify(FluidModel(k, r, pt.alpha, chi)).verdict
        verdicts[v] = verdicts.get(v, 0) + 1
    elapsed = time.perf_counter() - t0
    ok = (kept == 200 and worst_rho < 1e-9 and worst_lam < 1e-6
          and verdicts.get("NearCritical", 0) == 200 and elapsed < 60.0)
    line = report(5, "critical surface self-consistency", ok, t0,
                  f"{kept}/200 pts of {tried} draws, "
                  f"rho={worst_rho:.1e}<1e-9, |lam|={worst_lam:.1e}<1e-6, "
                  f"verdicts={verdicts}, {elapsed:.1f}s<60s")
    assert ok, line


def test_criterion_06_identical_communities_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(2, 11):
        for psi in (0.1, 1 / 3, 0.9):
            for r in (2, 3, 4):
                pt = critical_point(np.ones(k), identical_chi(k, psi), r)
                target = (1.0 + (k - 1) * psi) ** (-r / (r - 1.0))
                worst = max(worst, float(np.max(np.abs(pt.alpha - target))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 5.0
    line = report(6, "identical-communities closed form", ok, t0,
                  f"max gap={worst:.2e}<1e-10, {elapsed:.1f}s<5s")
    assert ok, line


def test_criterion_07_large_leading_intensity_is_supercritical():
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    bad = []
    for idx in range(200):
        k = int(rng.integers(2, 5))
        r = int(rng.integers(2, 4))
        chi = random_chi(rng, k, lo=0.02, hi=1.2, skew=2.0)
        alpha = rng.uniform(0.0, 1.0, k)
        alpha[int(rng.integers(k))] = float(rng.uniform(1.0, 3.0))
        verdict = sb.classify(FluidModel(k, r, alpha, chi)).verdict
        if verdict != "Sup":
            bad.append((idx, verdict))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60.0
    line = report(7, "leading intensity >= 1 implies percolation", ok, t0,
                  f"200 models, failures={bad}, {elapsed:.1f}s<60s")
    assert ok, line


def test_criterion_08_monte_carlo_phase_transition():
    t0 = time.perf_counter()
    n_total = 200_000
    p = n_total ** -0.6
    psi = 1 / 3
    q = psi * p
    alpha_c = (1 + psi) ** -2.0  # 0.5625
    chi = identical_chi(2, psi)
    grid = [0.3, round(0.7 * alpha_c, 6), round(1.3 * alpha_c, 6), 0.9]
    payload = {
        "sizes": [n_total // 2, n_total // 2],
        "edge_probs": [[p, q], [q, p]],
        "r": 2,
        "alpha_grid": grid,
        "trials": 100,
    }
    workers = min(4, os.cpu_count() or 1)
    result = run_simulate(payload, master_seed=808, workers=workers)
    g1 = float(result.g_scales[0])

    lines = []
    freqs = {}
    sub_gaps = {}
    for cell in result.cells:
        freq = float(np.mean(cell.final_sizes > n_total / 2))
        freqs[cell.alpha] = freq
        a_i = cell.seeds_per_community[0]
        alpha_eff = a_i / g1
        entry = (f"alpha={cell.alpha:.5f} a_i={a_i} "
                 f"alpha_eff={alpha_eff:.4f} freq={freq:.2f}")
        if alpha_eff < 0.8 * alpha_c:  # solidly subcritical cells
            model = FluidModel(2, 2, [alpha_eff, alpha_eff], chi)
            x_star = sb.classify(model).x_star
            # the frequency clause of this criterion tolerates up to 10%
            # percolating runs in these cells, so the concentration check
            # applies to the non-percolating bulk (a single percolated run
            # at A* ~ n would otherwise dominate the mean by construction)
            bulk = cell.final_sizes[cell.final_sizes <= n_total / 2]
            sub_mean = float(np.mean(bulk)) / g1
            rel = abs(sub_mean - x_star) / x_star
            sub_gaps[cell.alpha] = rel
            entry += (f" bulk mean A*/g1={sub_mean:.3f} x*={x_star:.3f} "
                      f"rel={rel:.1%} ({bulk.size}/{cell.final_sizes.size}"
                      f" runs)")
        lines.append(entry)
    elapsed = time.perf_counter() - t0

    low_ok = freqs[grid[1]] < 0.10
    high_ok = freqs[grid[2]] > 0.90
    sub_ok = all(rel <= 0.15 for rel in sub_gaps.values())
    time_ok = elapsed < 1800.0
    ok = low_ok and high_ok and sub_ok and time_ok
    detail = ("; ".join(lines)
              + f"; low(<10%)={low_ok} high(>90%)={high_ok} "
                f"sub(15%)={sub_ok} time={elapsed:.0f}s<1800s")
    line = report(8, "Monte Carlo phase transition", ok, t0, detail)
    assert ok, line


def test_criterion_09_allocation_curves():
    t0 = time.perf_counter()
    psi = 0.1
    rows = {}
    for r in (2, 4):
        prev_star = None
        for k in range(2, 51):
            # the critical intensity decreases in k, so the previous value
            # brackets the next search
            bracket = (None if prev_star is None
                       else (0.5 * prev_star, 1.02 * prev_star))
            equal, allinone = extreme_allocations(k, psi, r, rel_tol=1e-4,
                                                  bracket=bracket)
            prev_star = allinone / k ** (1.0 / (r - 1.0))
            rows[(r, k)] = (equal, allinone)
    closed_gap = max(abs(rows[(r, k)][0] - equal_split_ratio(k, psi, r))
                     for r in (2, 4) for k in range(2, 51))
    order_ok = all(allinone <= equal + 1e-9
                   for equal, allinone in rows.values())
    rel_gap_50 = {r: (rows[(r, 50)][0] - rows[(r, 50)][1])
                  / rows[(r, 50)][0] for r in (2, 4)}
    converged_ok = all(g <= 0.05 for g in rel_gap_50.values())
    elapsed = time.perf_counter() - t0
    ok = (closed_gap < 1e-10 and order_ok and converged_ok
          and elapsed < 60.0)
    line = report(9, "allocation strategy curves", ok, t0,
                  f"closed-form gap={closed_gap:.1e}<1e-10, "
                  f"ordering={order_ok}, "
                  f"k=50 rel gaps={{r=2: {rel_gap_50[2]:.1%}, "
                  f"r=4: {rel_gap_50[4]:.1%}}} (need <=5%), "
                  f"{elapsed:.1f}s<60s")
    assert ok, line


def test_criterion_10_reproducibility_across_workers(tmp_path):
    t0 = time.perf_counter()
    sim_cfg = {
        "sizes": [2000, 2000],
        "edge_probs": [[0.01, 0.003], [0.003, 0.01]],
        "r": 2, "alpha_grid": [0.5, 1.5], "trials": 10, "seed": 4242,
    }
    cls_cfg = {"model": {"k": 2, "r": 2, "alpha": [0.7, 0.2],
                         "identical_psi": 0.25}, "seed": 1}
    all_equal = True
    notes = []
    for mode, cfg in (("simulate", sim_cfg), ("sweep-alpha", sim_cfg),
                      ("classify", cls_cfg)):
        cfg_path = tmp_path / f"{mode}.json"
        cfg_path.write_text(json.dumps(dict(cfg, mode=mode)))
        outs = []
        for run_idx, workers in enumerate((1, 3)):
            out = tmp_path / f"{mode}-{run_idx}"
            rc = cli_main([mode, "--config", str(cfg_path),
                           "--out", str(out), "--workers", str(workers)])
            assert rc == 0
            outs.append(out)
        for name in sorted(os.listdir(outs[0])):
            b0 = (outs[0] / name).read_bytes()
            b1 = (outs[1] / name).read_bytes()
            if b0 != b1:
                all_equal = False
                notes.append(f"{mode}/{name} differs")
    elapsed = time.perf_counter() - t0
    ok = all_equal and elapsed < 120.0
    line = report(10, "byte-identical outputs across workers", ok, t0,
                  f"{notes or 'all files identical'}, {elapsed:.1f}s<120s")
    assert ok, line
