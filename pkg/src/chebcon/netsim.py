"""Seeded sequences of time-varying directed round graphs.

Edge (i, j) means j receives from i at that round.  Self-loops are always
present: push-sum weights need every agent to keep a share of its own mass,
so generated graphs never drop them, and injected link failures only ever
remove inter-agent edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

KINDS = ("ring_plus_random", "static_ring", "custom")

# Salt separating the graph RNG stream from other streams seeded off the
# same master seed.
_GRAPH_STREAM = 0x67726170


@dataclass(frozen=True)
class RoundGraph:
    """One round's directed graph over agents 0..n-1."""

    n: int
    edges: frozenset

    def __post_init__(self):
        arr = np.array(sorted(self.edges), dtype=int)
        if arr.size == 0 or arr.min() < 0 or arr.max() >= self.n:
            raise ValueError(f"edges out of range for n={self.n}")
        loops = np.count_nonzero(arr[:, 0] == arr[:, 1])
        if loops != self.n:
            raise ValueError("every agent needs a self-loop")
        object.__setattr__(self, "_edge_array", arr)

    def out_degree(self, i: int) -> int:
        return int(self.out_degrees()[i])

    def out_degrees(self) -> np.ndarray:
        return self._out_degs

    def in_neighbors(self, i: int) -> list:
        return self._in_lists[i]

    @cached_property
    def _out_degs(self) -> np.ndarray:
        return np.bincount(self._edge_array[:, 0], minlength=self.n)

    @cached_property
    def _in_lists(self) -> tuple:
        arr = self._edge_array
        order = np.lexsort((arr[:, 0], arr[:, 1]))
        senders = arr[order, 0]
        splits = np.searchsorted(arr[order, 1], np.arange(1, self.n))
        return tuple(chunk.tolist() for chunk in np.split(senders, splits))

    @cached_property
    def _weights(self) -> np.ndarray:
        arr = self._edge_array
        a = np.zeros((self.n, self.n))
        a[arr[:, 1], arr[:, 0]] = 1.0 / self._out_degs[arr[:, 0]]
        return a


def _ring_edges(n: int) -> set:
    edges = {(i, i) for i in range(n)}
    if n > 1:
        edges |= {(i, (i + 1) % n) for i in range(n)}
    return edges


@dataclass(frozen=True)
class GraphSequence:
    """Deterministic generator of per-round graphs.

    kind "ring_plus_random": self-loop + fixed-cycle successor + one random
    out-neighbor per agent per round (drawn uniformly from the other agents,
    so it may coincide with the cycle successor).  kind "static_ring": the
    fixed cycle alone.  kind "custom": a caller-supplied schedule, cycled.

    Every non-self-loop edge is independently dropped with probability
    ``failure_rate``; weights are later derived from the post-failure graph,
    so mass conservation survives failures.  With failure_rate = 0 the
    generated sequences are 1-strongly-connected (the cycle is present every
    round); ``b_window`` records the connectivity window for callers that
    need it (custom schedules set their own).
    """

    n: int
    kind: str = "ring_plus_random"
    seed: int = 0
    failure_rate: float = 0.0
    b_window: int = 1
    schedule: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ValueError("need at least one agent")
        if not 0.0 <= self.failure_rate < 1.0:
            raise ValueError(f"failure_rate must lie in [0, 1), got {self.failure_rate}")
        if self.b_window < 1:
            raise ValueError("b_window must be a positive integer")
        if self.kind == "custom":
            if not self.schedule:
                raise ValueError("custom kind requires a nonempty schedule")
            object.__setattr__(
                self, "schedule", tuple(frozenset(map(tuple, e)) for e in self.schedule)
            )

    def graph(self, t: int) -> RoundGraph:
        return next_graph(self, t)


def next_graph(seq: GraphSequence, t: int) -> RoundGraph:
    """The round-``t`` graph of ``seq``; deterministic in (seed, t)."""
    return _next_graph_cached(seq, t)


@lru_cache(maxsize=4096)
def _next_graph_cached(seq: GraphSequence, t: int) -> RoundGraph:
    if t < 0:
        raise ValueError("round index must be >= 0")
    n = seq.n
    rng = None
    if seq.kind == "custom":
        base = set(seq.schedule[t % len(seq.schedule)])
        base |= {(i, i) for i in range(n)}
    elif seq.kind == "static_ring":
        base = _ring_edges(n)
    else:
        base = _ring_edges(n)
        if n > 1:
            rng = np.random.default_rng([seq.seed, t, _GRAPH_STREAM])
            picks = rng.integers(0, n - 1, size=n)
            for i in range(n):
                j = int(picks[i])
                if j >= i:  # uniform over V \ {i}
                    j += 1
                base.add((i, j))
    if seq.failure_rate > 0.0:
        if rng is None:
            rng = np.random.default_rng([seq.seed, t, _GRAPH_STREAM])
        ordered = sorted(base)
        draws = rng.random(len(ordered))
        base = {
            e for e, u in zip(ordered, draws)
            if e[0] == e[1] or u >= seq.failure_rate
        }
    return RoundGraph(n, frozenset(base))


def push_weights(g: RoundGraph) -> np.ndarray:
    """Column-stochastic weight matrix: A[i, j] = 1/outdeg(j) if j -> i."""
    return g._weights.copy()


def union_strongly_connected(graphs: Sequence[RoundGraph]) -> bool:
    """Whether the union of the given round graphs is strongly connected."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("graphs must share the same agent count")
    fwd = [set() for _ in range(n)]
    rev = [set() for _ in range(n)]
    for g in graphs:
        for i, j in g.edges:
            fwd[i].add(j)
            rev[j].add(i)

    def reaches_all(adj):
        seen = {0}
        stack = [0]
        while stack:
            for v in adj[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == n

    return reaches_all(fwd) and reaches_all(rev)


def window_strongly_connected(seq: GraphSequence, start: int, rounds: int) -> bool:
    """Check strong connectivity of one window's union graph."""
    return union_strongly_connected([seq.graph(t) for t in range(start, start + rounds)])


def dump_schedule(seq: GraphSequence, rounds: int, path) -> None:
    """Write one line per round, ``t: i->j, ...``, for auditing."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in range(rounds):
            g = seq.graph(t)
            edges = ", ".join(f"{i}->{j}" for i, j in sorted(g.edges))
            fh.write(f"{t}: {edges}\n")
