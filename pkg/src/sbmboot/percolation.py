"""The activation process on a realized graph.

``run_bootstrap`` implements the one-node-per-step chain construction: at
each virtual time step a community with usable (active and not yet
explored) nodes is selected by the strategy, a uniform usable node of that
community is explored, every neighbor receives a mark, and non-seeds
activate at r marks.  The process stops when every active node has been
explored; the termination time then equals the final active count.

``naive_bootstrap`` is an independent brute-force oracle that grows the
active set generation by generation; for any fixed (graph, seeds) both
engines and every strategy produce the same final count per community.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .rngutil import KIND_RUN, substream, substream_state64
from .sbm import SbmGraph


@dataclass
class BootstrapState:
    """Read-only view of the chain state offered to custom strategies.

    t is the step about to be executed; usable_counts[i] the number of
    active but unexplored nodes of community i (A_i(t-1) - U_i(t-1));
    used_counts[i] = U_i(t-1); active_counts[i] = A_i(t-1); marks the
    current mark counters.  A strategy must return a community with
    usable_counts > 0.
    """

    t: int
    usable_counts: np.ndarray
    used_counts: np.ndarray
    active_counts: np.ndarray
    marks: np.ndarray


class Strategy:
    """Rule selecting the community explored at each step.

    Built-ins run inside the compiled kernel; subclasses overriding
    ``select`` run on the pure-Python path and may inspect the full state.
    """

    code: int = _kernels.STRATEGY_UNIFORM

    def schedule_array(self, graph: SbmGraph) -> np.ndarray:
        return np.full(1, -1, dtype=np.int64)

    def label(self) -> str:
        return type(self).__name__

    def select(self, state: BootstrapState,
               rng: np.random.Generator) -> int:
        usable = state.usable_counts
        m = rng.integers(int(usable.sum()))
        j = 0
        while m >= usable[j]:
            m -= usable[j]
            j += 1
        return int(j)


class UniformUsable(Strategy):
    """Pick a community with probability proportional to its usable count,
    i.e. explore a uniform node among all usable nodes."""

    code = _kernels.STRATEGY_UNIFORM


class RoundRobin(Strategy):
    """Cycle through communities, skipping those without usable nodes."""

    code = _kernels.STRATEGY_ROUND_ROBIN


class FixedSchedule(Strategy):
    """Follow a precomputed cumulative exploration table w.

    w has shape (T+1, k); w[t, i] is the number of nodes of community i
    explored up to step t, so w[0] = 0, each row increments exactly one
    entry by one, and row sums equal t.  When the prescribed community has
    no usable node (or the table is exhausted) the run switches permanently
    to the uniform-over-usable rule.
    """

    code = _kernels.STRATEGY_FIXED_SCHEDULE

    def __init__(self, w: np.ndarray):
        w = np.asarray(w, dtype=np.int64)
        if w.ndim != 2:
            raise ValueError("w must be a (T+1, k) table")
        if np.any(w[0] != 0):
            raise ValueError("w[0] must be the zero vector")
        steps = np.diff(w, axis=0)
        if np.any((steps != 0) & (steps != 1)) or \
                np.any(steps.sum(axis=1) != 1):
            raise ValueError("each w row must increment exactly one entry by 1")
        self.w = w
        self._sched = np.concatenate(
            [[-1], np.argmax(steps, axis=1)]).astype(np.int64)

    def schedule_array(self, graph: SbmGraph) -> np.ndarray:
        if self.w.shape[1] != graph.k:
            raise ValueError("schedule width does not match community count")
        return self._sched


@dataclass
class RunResult:
    """Outcome of one run: the final size equals the termination time."""

    final_size: int
    termination_time: int
    per_community_final: np.ndarray
    used_counts: np.ndarray
    marks: np.ndarray | None = None
    trace_community: np.ndarray | None = None
    trace_delta_active: np.ndarray | None = None

    def trace_rows(self, seeds_per_community: np.ndarray):
        """Yield (t, community_used, U_1..U_k, A_1..A_k) rows, t = 0..T."""
        if self.trace_community is None:
            raise ValueError("run was executed without trace=True")
        k = len(self.per_community_final)
        u = np.zeros(k, dtype=np.int64)
        a = np.asarray(seeds_per_community, dtype=np.int64).copy()
        yield (0, -1, *u, *a)
        for t in range(1, self.termination_time + 1):
            j = int(self.trace_community[t])
            u[j] += 1
            a += self.trace_delta_active[t]
            yield (t, j, *u, *a)


def write_trace_csv(result: RunResult, seeds_per_community, path: str) -> None:
    k = len(result.per_community_final)
    header = (["t", "community_used"]
              + [f"U_{i + 1}" for i in range(k)]
              + [f"A_{i + 1}" for i in range(k)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in result.trace_rows(np.asarray(seeds_per_community)):
            writer.writerow(row)


def _check_seeds(graph: SbmGraph, seeds: np.ndarray) -> np.ndarray:
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.size == 0:
        return seeds
    if seeds.min() < 0 or seeds.max() >= graph.n:
        raise ValueError("seed id out of range")
    if np.unique(seeds).size != seeds.size:
        raise ValueError("duplicate seed ids")
    return seeds


def run_bootstrap(graph: SbmGraph, seeds, strategy: Strategy | None = None,
                  rng_seed: int = 0, trace: bool = False,
                  keep_marks: bool = False) -> RunResult:
    """Run the chain construction to termination.

    The final size and the per-community final counts do not depend on the
    strategy or on the rng token; both only shape the exploration order.
    An empty seed set terminates immediately with final size 0.
    """
    if strategy is None:
        strategy = UniformUsable()
    seeds = _check_seeds(graph, seeds)
    if type(strategy).select is not Strategy.select:
        return _run_bootstrap_python(graph, seeds, strategy, rng_seed,
                                     trace, keep_marks)
    sched = strategy.schedule_array(graph)
    word = substream_state64(rng_seed, KIND_RUN)
    t, act, used, marks, tr_comm, tr_delta = _kernels.bootstrap_chain(
        graph.indptr, graph.indices, graph.labels.astype(np.int64),
        graph.offsets, seeds, graph.params.r, strategy.code, sched,
        np.uint64(word), trace)
    return RunResult(
        final_size=int(t), termination_time=int(t),
        per_community_final=np.asarray(act),
        used_counts=np.asarray(used),
        marks=np.asarray(marks) if keep_marks else None,
        trace_community=np.asarray(tr_comm) if trace else None,
        trace_delta_active=np.asarray(tr_delta) if trace else None)


def _run_bootstrap_python(graph: SbmGraph, seeds, strategy: Strategy,
                          rng_seed: int, trace: bool,
                          keep_marks: bool) -> RunResult:
    """Reference path for strategies that inspect the process state."""
    k = graph.k
    n = graph.n
    rng = substream(rng_seed, KIND_RUN)
    active = np.zeros(n, dtype=bool)
    marks = np.zeros(n, dtype=np.int32)
    pools: list[list[int]] = [[] for _ in range(k)]
    used = np.zeros(k, dtype=np.int64)
    act_count = np.zeros(k, dtype=np.int64)
    for v in seeds:
        v = int(v)
        active[v] = True
        c = graph.community_of(v)
        pools[c].append(v)
        act_count[c] += 1
    usable = np.array([len(p) for p in pools], dtype=np.int64)
    r = graph.params.r
    tr_comm = np.full(n + 1, -1, dtype=np.int32) if trace else None
    tr_delta = np.zeros((n + 1, k), dtype=np.int32) if trace else None
    t = 0
    while usable.sum() > 0:
        t += 1
        state = BootstrapState(t=t, usable_counts=usable.copy(),
                               used_counts=used.copy(),
                               active_counts=act_count.copy(), marks=marks)
        j = int(strategy.select(state, rng))
        if usable[j] <= 0:
            raise ValueError(f"strategy selected community {j} "
                             "with no usable node")
        idx = int(rng.integers(len(pools[j])))
        pools[j][idx], pools[j][-1] = pools[j][-1], pools[j][idx]
        v = pools[j].pop()
        usable[j] -= 1
        used[j] += 1
        for w in graph.neighbors(v):
            w = int(w)
            marks[w] += 1
            if not active[w] and marks[w] >= r:
                active[w] = True
                c = graph.community_of(w)
                pools[c].append(w)
                usable[c] += 1
                act_count[c] += 1
                if trace:
                    tr_delta[t, c] += 1
        if trace:
            tr_comm[t] = j
    return RunResult(final_size=int(t), termination_time=int(t),
                     per_community_final=act_count, used_counts=used,
                     marks=marks if keep_marks else None,
                     trace_community=tr_comm,
                     trace_delta_active=tr_delta)


def naive_bootstrap(graph: SbmGraph, seeds) -> RunResult:
    """Brute-force oracle: grow the active set generation by generation.

    Each round recomputes, for every inactive node, the number of active
    neighbors, activating those with at least r.  Independent of the chain
    construction by design.
    """
    seeds = _check_seeds(graph, seeds)
    r = graph.params.r
    active = set(int(v) for v in seeds)
    frontier = True
    while frontier:
        frontier = False
        new_nodes = []
        for v in range(graph.n):
            if v in active:
                continue
            cnt = 0
            for w in graph.neighbors(v):
                if int(w) in active:
                    cnt += 1
                    if cnt >= r:
                        break
            if cnt >= r:
                new_nodes.append(v)
        if new_nodes:
            frontier = True
            active.update(new_nodes)
    per_comm = np.zeros(graph.k, dtype=np.int64)
    for v in active:
        per_comm[graph.community_of(v)] += 1
    total = int(len(active))
    return RunResult(final_size=total, termination_time=total,
                     per_community_final=per_comm,
                     used_counts=per_comm.copy())


def strategy_invariance_check(graph: SbmGraph, seeds,
                              strategies: Sequence[Strategy],
                              trials: int = 3, rng_seed: int = 0) -> bool:
    """True iff every strategy and rng draw yields the same final size and
    the same per-community final counts on the fixed (graph, seeds)."""
    if len(strategies) < 2:
        raise ValueError("need at least two strategies")
    reference = None
    for s_idx, strategy in enumerate(strategies):
        for trial in range(trials):
            res = run_bootstrap(graph, seeds, strategy,
                                rng_seed=rng_seed * 100003 + s_idx * 101 + trial)
            key = (res.final_size, tuple(res.per_community_final))
            if reference is None:
                reference = key
            elif key != reference:
                return False
    return True


def empirical_b(u, q_row, r: int, trials: int,
                rng: np.random.Generator | int) -> tuple[float, float]:
    """Monte Carlo estimate (with standard error) of the activation
    probability P(sum_j Bin(u_j, q_j) >= r)."""
    if isinstance(rng, (int, np.integer)):
        rng = substream(int(rng), KIND_RUN, 1)
    u = np.atleast_1d(np.asarray(u, dtype=np.int64))
    q_row = np.atleast_1d(np.asarray(q_row, dtype=float))
    total = np.zeros(trials, dtype=np.int64)
    for u_j, q_j in zip(u, q_row):
        if u_j > 0 and q_j > 0:
            total += rng.binomial(int(u_j), float(q_j), size=trials)
    est = float(np.mean(total >= int(r)))
    se = float(np.sqrt(max(est * (1.0 - est), 1.0 / trials) / trials))
    return est, se


def build_schedule_from_points(points, g, eps: float = 1e-12) -> np.ndarray:
    """Cumulative exploration table w following a piecewise-linear curve.

    points is a sequence of componentwise nondecreasing k-vectors (a curve
    in normalized coordinates); g the per-community seed scale.  The table
    tracks floor(x * g) along the curve, interpolating simultaneous ticks in
    ascending community order, and is suitable for FixedSchedule.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    if not pts:
        raise ValueError("need at least one curve point")
    g = np.asarray(g, dtype=float)
    k = g.shape[0]

    rows = [np.zeros(k, dtype=np.int64)]
    current = np.floor(pts[0] * g + eps).astype(np.int64)
    if np.any(current != 0):
        raise ValueError("curve must start at the origin of the grid")

    def emit(target):
        nonlocal current
        while True:
            diff = target - current
            if np.all(diff <= 0):
                return
            j = int(np.argmax(diff > 0))  # lowest community index first
            nxt = current.copy()
            nxt[j] += 1
            rows.append(nxt)
            current = nxt

    for a, b in zip(pts[:-1], pts[1:]):
        stack = [(a, b)]
        while stack:
            lo, hi = stack.pop()
            tgt_lo = np.floor(lo * g + eps).astype(np.int64)
            tgt_hi = np.floor(hi * g + eps).astype(np.int64)
            if np.max(tgt_hi - tgt_lo) > 1 and np.max(np.abs(hi - lo)) > eps:
                mid = 0.5 * (lo + hi)
                stack.append((mid, hi))
                stack.append((lo, mid))
            else:
                emit(tgt_hi)
    return np.stack(rows)
