"""Kahn's algorithm with node priorities and optimal slicing of a topological order.

``slice_graph`` cuts a fixed topological order into at most k contiguous
blocks minimizing the max block cost, which sidesteps the acyclic-quotient
constraint entirely: every stars-and-bars segmentation of a topological order
has an acyclic quotient.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .graph import ComputationGraph, Partition, PlatformConfig, zero_peak
from .segment import SegmentCostStructure, init_dense


class CycleError(ValueError):
    """Raised when a graph fed to the topological sort contains a cycle."""


@dataclass(frozen=True)
class TopologicalOrder:
    perm: tuple[int, ...]       # perm[i] = node at position i (0-based)

    @property
    def inverse(self) -> tuple[int, ...]:
        inv = [0] * len(self.perm)
        for i, v in enumerate(self.perm):
            inv[v] = i
        return tuple(inv)


@dataclass(frozen=True)
class Segmentation:
    """Cut positions (1-based, cut after each position) and the achieved value."""

    cut_points: tuple[int, ...]
    value: float

    def to_partition(self, order: TopologicalOrder, k: int) -> Partition:
        n = len(order.perm)
        bounds = (0,) + self.cut_points + (n,)
        assignment = [0] * n
        for b in range(len(bounds) - 1):
            for i in range(bounds[b], bounds[b + 1]):
                assignment[order.perm[i]] = b + 1
        return Partition(k=k, assignment=tuple(assignment))


def kahn_with_priorities(g: ComputationGraph, x) -> TopologicalOrder:
    """Topological sort that always emits the max-priority available node.

    Ties on equal priority break toward the smaller node index, so the result
    is deterministic given (g, x) and invariant under strictly monotone
    transforms of x.
    """
    if len(x) != g.n:
        raise ValueError("priority vector length must equal the node count")
    indeg = [len(g.pred[v]) for v in range(g.n)]
    heap = [(-float(x[v]), v) for v in range(g.n) if indeg[v] == 0]
    heapq.heapify(heap)
    perm = []
    while heap:
        _, u = heapq.heappop(heap)
        perm.append(u)
        for v in g.succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, (-float(x[v]), v))
    if len(perm) != g.n:
        raise CycleError("graph contains a directed cycle")
    return TopologicalOrder(tuple(perm))


def slice_graph(g: ComputationGraph, cfg: PlatformConfig, k: int, order: TopologicalOrder,
                struct: SegmentCostStructure | None = None) -> Segmentation:
    """Optimal segmentation of ``order`` into at most k blocks.

    Ties among optimal segmentations break toward the fewest nonempty blocks,
    then the lexicographically smallest cut points.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = g.n
    if n == 0:
        return Segmentation((), 0.0)
    if struct is None:
        struct = init_dense(g, cfg, order.perm)
    q = struct.query_matrix()
    value = _dp_value(q, n, k)
    cuts = _reconstruct_cuts(q, n, k, value)
    return Segmentation(tuple(cuts), float(value))


_TRIL_CACHE: dict[int, np.ndarray] = {}


def slice_value(g: ComputationGraph, cfg: PlatformConfig, k: int,
                order: TopologicalOrder) -> float:
    """Value of the optimal segmentation without cut reconstruction.

    Identical to ``slice_graph(...).value`` but skips building the padded
    query matrix when overflow cannot occur, which is the search hot path.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = g.n
    if n == 0:
        return 0.0
    struct = init_dense(g, cfg, order.perm)
    if struct.mem_prefix[n] != 0.0 or cfg.peak_model is not zero_peak:
        return float(_dp_value(struct.query_matrix(), n, k))
    wp = struct.work_prefix
    body = wp[None, 1:] - wp[:-1, None]
    body += struct.io_table * (1.0 / cfg.bandwidth)
    dp = body[0].copy()
    if k == 1:
        return float(dp[-1])
    tril = _TRIL_CACHE.get(n)
    if tril is None:
        tril = np.tril(np.ones((n, n), dtype=bool))
        _TRIL_CACHE[n] = tril
    # qs[i][j] = cost of segment [i+2, j+1]; diagonal = empty segment
    qs = np.empty((n, n))
    qs[:n - 1] = body[1:]
    qs[tril] = np.inf
    np.fill_diagonal(qs, 0.0)
    buf = np.empty((n, n))
    for _ in range(2, k + 1):
        np.maximum(dp[:, None], qs, out=buf)
        dp = buf.min(axis=0)
    return float(dp[-1])


def _dp_value(q: np.ndarray, n: int, k: int) -> float:
    # dp[r] = optimal value for the first r positions in k' blocks
    dp = q[1, 1:n + 1].copy()                    # k' = 1
    if k == 1:
        return float(dp[n - 1])
    # qs[l-1][r-1] = cost of segment [l+1, r] (empty when l = r)
    qs = np.triu(q[2:n + 2, 1:n + 1])
    invalid = ~np.triu(np.ones((n, n), dtype=bool))
    qs[invalid] = np.inf
    for _ in range(2, k + 1):
        dp = np.min(np.maximum(dp[:, None], qs), axis=0)
    return float(dp[n - 1])


def _reconstruct_cuts(q: np.ndarray, n: int, k: int, value: float) -> list[int]:
    # minb[l] = fewest blocks covering positions [l, n] with every block <= value
    minb = np.full(n + 2, n + 1, dtype=np.int64)
    minb[n + 1] = 0
    for l in range(n, 0, -1):
        feasible = q[l, l:n + 1] <= value
        if feasible.any():
            minb[l] = 1 + np.min(minb[l + 1:n + 2][feasible])
    cuts = []
    l = 1
    remaining = int(minb[1])
    while l <= n:
        for r in range(l, n + 1):
            if q[l, r] <= value and minb[r + 1] <= remaining - 1:
                break
        if r < n:
            cuts.append(r)
        l = r + 1
        remaining -= 1
    return cuts


def decode(g: ComputationGraph, cfg: PlatformConfig, k: int,
           chromosome) -> tuple[TopologicalOrder, Segmentation]:
    """Sort-and-slice decoder: node priorities -> order -> optimal segmentation."""
    order = kahn_with_priorities(g, chromosome)
    return order, slice_graph(g, cfg, k, order)
