"""Finite stochastic block model instances: validation, sampling, seeds, io.

Nodes carry global 0-based ids and every community occupies one contiguous
id range, so membership lookups are O(1) and iteration is cache friendly.
Graphs are stored in CSR form (``indptr``/``indices``) with both directions
of every undirected edge present and rows sorted.

Sparse sampling walks each block's lexicographic pair sequence with
geometric jumps, so the cost is proportional to the number of edges actually
produced rather than to the number of node pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ResourceLimitError
from .rngutil import KIND_EDGES, KIND_SEEDS, substream

GRAPH_FORMAT_MAGIC = "sbmboot-graph v1"


@dataclass(frozen=True)
class SbmParams:
    """Parameters of one finite SBM instance.

    sizes[i] is the number of nodes of community i, edge_probs[i][j] the
    probability of an edge between a node of community i and one of
    community j (diagonal entries are the intra-community probabilities),
    r the activation threshold and seeds[i] the number of initially active
    nodes drawn uniformly inside community i.
    """

    sizes: tuple[int, ...]
    edge_probs: tuple[tuple[float, ...], ...]
    r: int
    seeds: tuple[int, ...]

    def __init__(self, sizes, edge_probs, r, seeds):
        object.__setattr__(self, "sizes", tuple(int(s) for s in sizes))
        q = np.asarray(edge_probs, dtype=float)
        object.__setattr__(self, "edge_probs",
                           tuple(tuple(float(x) for x in row) for row in q))
        object.__setattr__(self, "r", int(r))
        object.__setattr__(self, "seeds", tuple(int(a) for a in seeds))

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.edge_probs, dtype=float)

    @property
    def p(self) -> np.ndarray:
        """Intra-community probabilities, the diagonal of edge_probs."""
        return np.diag(self.q)

    def expected_edge_count(self) -> float:
        sizes = np.asarray(self.sizes, dtype=float)
        q = self.q
        total = 0.0
        for i in range(self.k):
            total += q[i, i] * sizes[i] * (sizes[i] - 1) / 2.0
            for j in range(i + 1, self.k):
                total += q[i, j] * sizes[i] * sizes[j]
        return total


@dataclass(frozen=True)
class Violation:
    """One validation finding; severity is 'error' or 'warning'."""

    severity: str
    code: str
    message: str
    where: tuple | None = None

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"[{self.severity}] {self.code}: {self.message}"


def validate_params(params: SbmParams) -> list[Violation]:
    """Report every violated invariant of an SBM parameter set.

    Hard errors cover shape, probability range, symmetry and seed bounds.
    Weak assortativity (cross probabilities not exceeding the smaller of the
    two intra probabilities) and connectivity of the community-level graph
    are reported as warnings: finite instances may legitimately explore them.
    Returns an empty list when every check passes.
    """
    out: list[Violation] = []
    k = params.k
    if k < 1:
        out.append(Violation("error", "k-range", "community count must be >= 1"))
        return out
    sizes = np.asarray(params.sizes)
    if np.any(sizes <= 0):
        bad = tuple(int(i) for i in np.nonzero(sizes <= 0)[0])
        out.append(Violation("error", "size-range",
                             f"community sizes must be positive, got {bad}", bad))
    q = params.q
    if q.shape != (k, k):
        out.append(Violation("error", "q-shape",
                             f"edge_probs must be {k}x{k}, got {q.shape}"))
        return out
    if np.any(~np.isfinite(q)) or np.any(q < 0.0) or np.any(q >= 1.0):
        out.append(Violation("error", "q-range",
                             "edge probabilities must lie in [0, 1)"))
    asym = np.argwhere(q != q.T)
    if asym.size:
        i, j = (int(x) for x in asym[0])
        out.append(Violation("error", "q-symmetry",
                             f"edge_probs not symmetric at ({i},{j})", (i, j)))
    if params.r < 2:
        out.append(Violation("error", "r-range",
                             f"threshold r must be >= 2, got {params.r}"))
    if len(params.seeds) != k:
        out.append(Violation("error", "seeds-shape",
                             f"seeds must have length {k}"))
    else:
        for i, (a, n_i) in enumerate(zip(params.seeds, params.sizes)):
            if a < 0 or a > n_i:
                out.append(Violation("error", "seed-count",
                                     f"seed count exceeds community size at {i}: "
                                     f"a={a}, n={n_i}", (i,)))
    # weak assortativity: q_ij <= min(p_i, p_j) for i != j
    p = np.diag(q)
    for i in range(k):
        for j in range(i + 1, k):
            if q[i, j] > min(p[i], p[j]):
                out.append(Violation("warning", "assortativity",
                                     f"assortativity violated at ({i},{j}): "
                                     f"q={q[i, j]:g} > min(p)={min(p[i], p[j]):g}",
                                     (i, j)))
    # connectivity of the community-level graph (edges where q_ij > 0, i != j)
    if k >= 2:
        support = (q > 0.0) & ~np.eye(k, dtype=bool)
        seen = np.zeros(k, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.nonzero(support[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        if not seen.all():
            unreachable = tuple(int(i) for i in np.nonzero(~seen)[0])
            out.append(Violation("warning", "community-graph-disconnected",
                                 f"communities {unreachable} unreachable from 0 "
                                 "in the cross-edge support graph", unreachable))
    return out


def params_errors(params: SbmParams) -> list[Violation]:
    return [v for v in validate_params(params) if v.severity == "error"]


@dataclass
class SbmGraph:
    """A realized SBM graph in CSR form with community bookkeeping.

    indptr/indices hold both directions of each undirected edge with rows
    sorted; offsets[i]:offsets[i+1] is the global id range of community i
    and labels maps node -> community index.
    """

    indptr: np.ndarray
    indices: np.ndarray
    offsets: np.ndarray
    labels: np.ndarray
    params: SbmParams
    rng_seed: int

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def k(self) -> int:
        return len(self.offsets) - 1

    @property
    def num_edges(self) -> int:
        return int(len(self.indices)) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def community_of(self, v: int) -> int:
        return int(self.labels[v])

    def community_range(self, i: int) -> tuple[int, int]:
        return int(self.offsets[i]), int(self.offsets[i + 1])

    def edge_pairs(self) -> np.ndarray:
        """Undirected edges as a sorted (m, 2) array with u < v."""
        src = np.repeat(np.arange(self.n, dtype=np.int64),
                        np.diff(self.indptr))
        dst = self.indices.astype(np.int64)
        keep = src < dst
        pairs = np.stack([src[keep], dst[keep]], axis=1)
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        return pairs[order]


def _offsets(sizes: Sequence[int]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(np.asarray(sizes, dtype=np.int64))])


def _labels(sizes: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(sizes), dtype=np.int32),
                     np.asarray(sizes, dtype=np.int64))


def _bernoulli_positions(rng: np.random.Generator, n_pairs: int,
                         prob: float) -> np.ndarray:
    """Indices of successes of a Bernoulli(prob) process over range(n_pairs).

    Walks the sequence with geometric jumps drawn by inverse transform, in
    vectorized batches, so the work is O(number of successes).
    """
    if n_pairs <= 0 or prob <= 0.0:
        return np.empty(0, dtype=np.int64)
    log1mp = np.log1p(-prob)
    chunks: list[np.ndarray] = []
    pos = -1  # last success position
    while True:
        expected = (n_pairs - 1 - pos) * prob
        m = int(expected + 6.0 * np.sqrt(expected + 1.0) + 16.0)
        u = 1.0 - rng.random(m)  # in (0, 1]
        with np.errstate(over="ignore"):
            gaps_f = np.floor(np.log(u) / log1mp) + 1.0
        # any jump beyond the block is equivalent to landing just past it,
        # which also keeps the int64 cast safe for tiny probabilities
        gaps = np.minimum(gaps_f, float(n_pairs) + 1.0).astype(np.int64)
        new = pos + np.cumsum(gaps)
        inside = new[new < n_pairs]
        if inside.size:
            chunks.append(inside)
        if new[-1] >= n_pairs:
            break
        pos = int(new[-1])
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def _decode_triangle(m: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map lexicographic pair index to (u, v), u < v, over an n-node block."""
    two_n_minus_1 = 2.0 * n - 1.0
    u = np.floor((two_n_minus_1 -
                  np.sqrt(two_n_minus_1 * two_n_minus_1 - 8.0 * m)) / 2.0)
    u = u.astype(np.int64)
    np.clip(u, 0, n - 2, out=u)

    def base(uu):
        return uu * (n - 1) - (uu * (uu - 1)) // 2

    # float roundoff can land one row off; fix up exactly
    for _ in range(3):
        too_hi = base(u) > m
        if too_hi.any():
            u[too_hi] -= 1
        too_lo = base(u + 1) <= m
        if too_lo.any():
            u[too_lo] += 1
        if not (too_hi.any() or too_lo.any()):
            break
    v = u + 1 + (m - base(u))
    return u, v


def generate_sbm(params: SbmParams, seed: int,
                 max_expected_edges: float = 2.0e8) -> SbmGraph:
    """Sample one SBM graph; identical (params, seed) gives identical output.

    Each block gets its own substream keyed by (seed, block), so the block
    visit order is irrelevant.  Raises ResourceLimitError when the expected
    edge count exceeds ``max_expected_edges`` and ValueError on invalid
    parameters.
    """
    errs = params_errors(params)
    if errs:
        raise ValueError("invalid SBM parameters: "
                         + "; ".join(v.message for v in errs))
    expected = params.expected_edge_count()
    if expected > max_expected_edges:
        raise ResourceLimitError(
            f"expected edge count {expected:.3g} exceeds cap "
            f"{max_expected_edges:.3g}")

    k = params.k
    n = params.n
    offsets = _offsets(params.sizes)
    q = params.q
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    for i in range(k):
        n_i = params.sizes[i]
        rng = substream(seed, KIND_EDGES, i, i)
        pos = _bernoulli_positions(rng, n_i * (n_i - 1) // 2, q[i, i])
        if pos.size:
            uu, vv = _decode_triangle(pos, n_i)
            us.append(uu + offsets[i])
            vs.append(vv + offsets[i])
        for j in range(i + 1, k):
            n_j = params.sizes[j]
            rng = substream(seed, KIND_EDGES, i, j)
            pos = _bernoulli_positions(rng, n_i * n_j, q[i, j])
            if pos.size:
                us.append(pos // n_j + offsets[i])
                vs.append(pos % n_j + offsets[j])

    if us:
        src_half = np.concatenate(us)
        dst_half = np.concatenate(vs)
    else:
        src_half = np.empty(0, dtype=np.int64)
        dst_half = np.empty(0, dtype=np.int64)

    from . import _kernels

    degrees = (np.bincount(src_half, minlength=n)
               + np.bincount(dst_half, minlength=n))
    indptr = np.concatenate([[0], np.cumsum(degrees)]).astype(np.int64)
    indices = np.empty(int(indptr[-1]), dtype=np.int32)
    _kernels.csr_fill_undirected(src_half, dst_half, indptr, indices)

    return SbmGraph(indptr=indptr, indices=indices, offsets=offsets,
                    labels=_labels(params.sizes), params=params,
                    rng_seed=int(seed))


def from_edges(sizes: Sequence[int], r: int,
               edges: Iterable[tuple[int, int]],
               edge_probs: np.ndarray | None = None,
               seeds: Sequence[int] | None = None) -> SbmGraph:
    """Build an SbmGraph from an explicit undirected edge list (test helper)."""
    sizes = tuple(int(s) for s in sizes)
    k = len(sizes)
    n = sum(sizes)
    if edge_probs is None:
        edge_probs = np.zeros((k, k))
    if seeds is None:
        seeds = (0,) * k
    params = SbmParams(sizes=sizes, edge_probs=edge_probs, r=r, seeds=seeds)
    pairs = np.asarray(sorted({(min(u, v), max(u, v)) for u, v in edges}),
                       dtype=np.int64).reshape(-1, 2)
    if np.any(pairs[:, 0] == pairs[:, 1]) if pairs.size else False:
        raise ValueError("self-loops are not allowed")
    if pairs.size:
        src = np.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)
    order = np.argsort(src * np.int64(max(n, 1)) + dst, kind="stable")
    indices = dst[order].astype(np.int32)
    indptr = np.concatenate([[0],
                             np.cumsum(np.bincount(src, minlength=n))]
                            ).astype(np.int64)
    return SbmGraph(indptr=indptr, indices=indices, offsets=_offsets(sizes),
                    labels=_labels(sizes), params=params, rng_seed=0)


def check_graph_invariants(graph: SbmGraph) -> None:
    """Assert structural invariants; raises AssertionError on violation."""
    n = graph.n
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(graph.indptr))
    dst = graph.indices.astype(np.int64)
    assert not np.any(src == dst), "self-loop found"
    fwd = np.sort(src * n + dst)
    rev = np.sort(dst * n + src)
    assert np.array_equal(fwd, rev), "adjacency not symmetric"
    assert fwd.size == np.unique(fwd).size, "duplicate edge found"
    counts = np.bincount(graph.labels, minlength=graph.k)
    assert tuple(int(c) for c in counts) == graph.params.sizes, \
        "label counts do not match community sizes"


def select_seeds(graph: SbmGraph, counts: Sequence[int],
                 seed: int) -> np.ndarray:
    """Draw counts[i] distinct nodes uniformly from each community.

    Deterministic given the rng token; each community uses its own
    substream.  Returns a sorted array of global node ids.
    """
    chosen: list[np.ndarray] = []
    for i, a in enumerate(counts):
        a = int(a)
        lo, hi = graph.community_range(i)
        n_i = hi - lo
        if a < 0 or a > n_i:
            raise ValueError(f"seed count {a} outside [0, {n_i}] "
                             f"for community {i}")
        if a == 0:
            continue
        rng = substream(seed, KIND_SEEDS, i)
        chosen.append(np.sort(rng.choice(n_i, size=a, replace=False)) + lo)
    if not chosen:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chosen).astype(np.int64)


def save_graph(graph: SbmGraph, path: str) -> None:
    """Write the documented text format: header then sorted edge pairs.

    Header lines: magic, k, sizes, r, seed, one q row per community,
    edge count.  Loading the file reproduces the graph exactly.
    """
    pairs = graph.edge_pairs()
    with open(path, "w") as fh:
        fh.write(f"# {GRAPH_FORMAT_MAGIC}\n")
        fh.write(f"k {graph.k}\n")
        fh.write("sizes " + " ".join(str(s) for s in graph.params.sizes) + "\n")
        fh.write(f"r {graph.params.r}\n")
        fh.write(f"seed {graph.rng_seed}\n")
        for row in graph.params.edge_probs:
            fh.write("q " + " ".join(repr(x) for x in row) + "\n")
        fh.write("seeds " + " ".join(str(a) for a in graph.params.seeds) + "\n")
        fh.write(f"edges {len(pairs)}\n")
        for u, v in pairs:
            fh.write(f"{u} {v}\n")


def load_graph(path: str) -> SbmGraph:
    """Read a graph written by save_graph; the round trip is lossless."""
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != f"# {GRAPH_FORMAT_MAGIC}":
            raise ValueError(f"unrecognized graph file header: {magic!r}")
        k = int(fh.readline().split()[1])
        sizes = [int(x) for x in fh.readline().split()[1:]]
        r = int(fh.readline().split()[1])
        seed = int(fh.readline().split()[1])
        q = [[float(x) for x in fh.readline().split()[1:]] for _ in range(k)]
        seeds = [int(x) for x in fh.readline().split()[1:]]
        m = int(fh.readline().split()[1])
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else \
            np.empty((0, 2), dtype=np.int64)
    if len(data) != m:
        raise ValueError(f"edge count mismatch: header {m}, found {len(data)}")
    edges = [(int(u), int(v)) for u, v in data]
    g = from_edges(sizes, r, edges, edge_probs=np.asarray(q), seeds=seeds)
    g.rng_seed = seed
    return g
