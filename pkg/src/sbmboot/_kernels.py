"""Numba kernels for the one-node-per-step activation process.

The kernel explores a single active node per virtual time step: its
neighbors each receive one mark, and a non-seed activates once it has
collected r marks.  Per-community pools of active-but-unexplored nodes are
flat arrays with swap-remove, giving O(1) uniform sampling.  Total cost is
the sum of the degrees of explored nodes.

An inline xorshift generator keeps runs reproducible across platforms.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STRATEGY_UNIFORM = 0
STRATEGY_ROUND_ROBIN = 1
STRATEGY_FIXED_SCHEDULE = 2

_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _next_u64(state):
    s = state[0]
    s ^= s >> np.uint64(12)
    s ^= s << np.uint64(25)
    s ^= s >> np.uint64(27)
    state[0] = s
    return s * np.uint64(2685821657736338717)


@njit(cache=True, inline="always")
def _rand_below(state, bound):
    x = _next_u64(state) >> np.uint64(11)
    return np.int64(np.float64(x) * _INV_2_53 * np.float64(bound))


@njit(cache=True)
def csr_fill_undirected(u, v, indptr, out):
    """Place both directions of each undirected edge into CSR storage.

    Counting-sort style: cursor[s] tracks the next free slot of row s.
    Much faster than a comparison sort of the combined key.
    """
    n = indptr.shape[0] - 1
    cursor = np.empty(n, dtype=np.int64)
    for i in range(n):
        cursor[i] = indptr[i]
    for e in range(u.shape[0]):
        a = u[e]
        b = v[e]
        out[cursor[a]] = np.int32(b)
        cursor[a] += 1
        out[cursor[b]] = np.int32(a)
        cursor[b] += 1


@njit(cache=True)
def bootstrap_chain(indptr, indices, labels, offsets, seeds, r,
                    strategy_code, sched, rng_word, want_trace):
    """Run the chain construction to termination.

    sched[t] is the community prescribed at step t for the fixed-schedule
    strategy (ignored otherwise); when the prescribed community has no
    usable node, or the schedule is exhausted, the run switches permanently
    to the uniform-over-usable rule.

    Returns (T, active_per_community, used_per_community, marks,
    trace_community, trace_delta_active); the trace arrays have length 1
    when no trace was requested.
    """
    n = indptr.shape[0] - 1
    k = offsets.shape[0] - 1

    state = np.empty(1, dtype=np.uint64)
    state[0] = rng_word

    active = np.zeros(n, dtype=np.bool_)
    marks = np.zeros(n, dtype=np.int32)
    pool = np.empty(n, dtype=np.int64)
    pool_size = np.zeros(k, dtype=np.int64)
    used = np.zeros(k, dtype=np.int64)
    act_count = np.zeros(k, dtype=np.int64)

    for s in range(seeds.shape[0]):
        v = seeds[s]
        active[v] = True
        c = labels[v]
        pool[offsets[c] + pool_size[c]] = v
        pool_size[c] += 1
        act_count[c] += 1
    total_usable = seeds.shape[0]

    if want_trace:
        trace_comm = np.full(n + 1, -1, dtype=np.int32)
        trace_delta = np.zeros((n + 1, k), dtype=np.int32)
    else:
        trace_comm = np.full(1, -1, dtype=np.int32)
        trace_delta = np.zeros((1, k), dtype=np.int32)

    t = 0
    rr_next = 0
    fallback = False
    sched_len = sched.shape[0]

    while total_usable > 0:
        t += 1

        # community selection
        if strategy_code == STRATEGY_ROUND_ROBIN:
            j = rr_next % k
            while pool_size[j] == 0:
                j = (j + 1) % k
            rr_next = j + 1
        else:
            use_uniform = True
            j = 0
            if strategy_code == STRATEGY_FIXED_SCHEDULE and not fallback:
                if t < sched_len and sched[t] >= 0 \
                        and pool_size[sched[t]] > 0:
                    j = sched[t]
                    use_uniform = False
                else:
                    fallback = True
            if use_uniform:
                m = _rand_below(state, total_usable)
                j = 0
                while m >= pool_size[j]:
                    m -= pool_size[j]
                    j += 1

        # uniform unexplored active node of community j, removed by swap
        idx = _rand_below(state, pool_size[j])
        slot = offsets[j] + idx
        v = pool[slot]
        pool[slot] = pool[offsets[j] + pool_size[j] - 1]
        pool_size[j] -= 1
        total_usable -= 1
        used[j] += 1

        for e in range(indptr[v], indptr[v + 1]):
            w = indices[e]
            marks[w] += 1
            if not active[w] and marks[w] >= r:
                active[w] = True
                c = labels[w]
                pool[offsets[c] + pool_size[c]] = w
                pool_size[c] += 1
                total_usable += 1
                act_count[c] += 1
                if want_trace:
                    trace_delta[t, c] += 1
        if want_trace:
            trace_comm[t] = j

    return t, act_count, used, marks, trace_comm, trace_delta
