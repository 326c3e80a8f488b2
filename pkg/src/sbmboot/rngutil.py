"""Deterministic substream derivation from a single 64-bit master seed.

Every random object in the package is drawn from a substream keyed by the
master seed plus a small integer tuple identifying its purpose (graph block,
seed draw, trial index, ...).  Substreams are independent of the order in
which they are opened, so parallel and serial executions produce identical
results.
"""

from __future__ import annotations

import numpy as np

# stream-kind tags, kept distinct so (seed, kind, ...) tuples never collide
KIND_EDGES = 0
KIND_SEEDS = 1
KIND_RUN = 2
KIND_TRIAL = 3


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Return a Generator for the substream identified by ``key``."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1),
                                spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.PCG64(ss))


def substream_state64(master_seed: int, *key: int) -> int:
    """A nonzero 64-bit word for in-kernel generators, derived like substream."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1),
                                spawn_key=tuple(int(x) for x in key))
    word = int(ss.generate_state(1, np.uint64)[0])
    return word if word != 0 else 0x9E3779B97F4A7C15
