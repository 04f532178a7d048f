"""Computation graphs, the platform cost model, partitions, and the min-max objective.

Node identity is the integer index into ``ComputationGraph.nodes``; string ids
exist only for file I/O. Sizes are bytes, bandwidth is bytes per time unit, so
``size / bandwidth`` is already in the same units as ``work``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


class InfeasiblePartitionError(ValueError):
    """Raised when a partition's quotient graph contains a directed cycle."""


class GraphFormatError(ValueError):
    """Raised when a graph JSON file does not match the expected schema."""


def zero_peak(nodes: Sequence[int]) -> float:
    """Default peak-activation model: no activation memory is reserved."""
    return 0.0


@dataclass(frozen=True)
class NodeSpec:
    id: str
    work: float
    size_param: float = 0.0
    size_out: float = 0.0


@dataclass(frozen=True)
class PlatformConfig:
    """Target platform: interconnect bandwidth, fast-memory budget, peak model.

    ``peak_model`` maps an ordered tuple of node indices to the activation
    memory that must be reserved while that set executes. It is pluggable so
    segment costs stay correct for any model evaluable on node sets; the
    default reserves nothing.
    """

    bandwidth: float = 1.0
    memory: float = float("inf")
    peak_model: Callable[[Sequence[int]], float] = zero_peak

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.memory < 0:
            raise ValueError(f"memory must be nonnegative, got {self.memory}")


class ComputationGraph:
    """A DAG of ops with work / parameter-size / output-tensor-size weights.

    Each node produces exactly one output tensor; all of its out-edges carry
    that same tensor, so a tensor crossing a block boundary is charged once
    per boundary side no matter how many consumers it has.
    """

    def __init__(self, name: str, nodes: Sequence[NodeSpec],
                 edges: Iterable[tuple[int, int]]):
        self.name = name
        self.nodes = list(nodes)
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.n = len(self.nodes)
        self.m = len(self.edges)
        self.succ: list[list[int]] = [[] for _ in range(self.n)]
        self.pred: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            if 0 <= u < self.n and 0 <= v < self.n:
                self.succ[u].append(v)
                self.pred[v].append(u)
        self.work = [s.work for s in self.nodes]
        self.size_param = [s.size_param for s in self.nodes]
        self.size_out = [s.size_out for s in self.nodes]
        # array views shared by the numeric hot paths
        self.work_arr = np.asarray(self.work, dtype=np.float64)
        self.param_arr = np.asarray(self.size_param, dtype=np.float64)
        self.out_arr = np.asarray(self.size_out, dtype=np.float64)
        self.edge_arr = np.asarray(self.edges, dtype=np.int64).reshape(self.m, 2)

    def total_work(self) -> float:
        return sum(self.work)

    def producers(self) -> list[int]:
        """Nodes whose output tensor has at least one consumer."""
        return [v for v in range((self.n)) if self.succ[v]]

    def __repr__(self):
        return f"ComputationGraph({self.name!r}, n={self.n}, m={self.m})"


@dataclass(frozen=True)
class Partition:
    """Assignment of every node to a block index in [1, k]; blocks may be empty."""

    k: int
    assignment: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for v, b in enumerate(self.assignment):
            if not 1 <= b <= self.k:
                raise ValueError(f"node {v} assigned to block {b}, outside [1, {self.k}]")

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for v, b in enumerate(self.assignment):
            out[b - 1].append(v)
        return out


@dataclass(frozen=True)
class BlockCostBreakdown:
    input_io: float
    work: float
    overflow: float
    output_io: float

    @property
    def total(self) -> float:
        return self.input_io + self.work + self.overflow + self.output_io


def validate_graph(g: ComputationGraph) -> list[str]:
    """Return all invariant violations of ``g`` (empty list means valid)."""
    violations = []
    finite = lambda x: x == x and abs(x) != float("inf")
    for i, s in enumerate(g.nodes):
        for attr in ("work", "size_param", "size_out"):
            w = getattr(s, attr)
            if not finite(w) or w < 0:
                violations.append(f"node {i} ({s.id!r}): {attr}={w} is not a finite nonnegative real")
    seen = set()
    for u, v in g.edges:
        if not (0 <= u < g.n and 0 <= v < g.n):
            violations.append(f"edge ({u}, {v}): endpoint out of range [0, {g.n})")
            continue
        if u == v:
            violations.append(f"edge ({u}, {v}): self-loop")
        if (u, v) in seen:
            violations.append(f"edge ({u}, {v}): duplicate")
        seen.add((u, v))
    if g.n > 0 and not violations and not _is_dag(g.n, g.succ):
        violations.append("graph contains a directed cycle")
    return violations


def _is_dag(n: int, succ: Sequence[Sequence[int]]) -> bool:
    indeg = [0] * n
    for u in range(n):
        for v in succ[u]:
            indeg[v] += 1
    stack = [v for v in range(n) if indeg[v] == 0]
    emitted = 0
    while stack:
        u = stack.pop()
        emitted += 1
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return emitted == n


def io_cost(g: ComputationGraph, cfg: PlatformConfig,
            S: Iterable[int], T: Iterable[int]) -> float:
    """Time to move every tensor produced in ``S`` and consumed in ``T``.

    Each producer is counted once regardless of how many of its consumers
    lie in ``T``.
    """
    S, T = set(S), set(T)
    if S & T:
        raise ValueError("io_cost requires disjoint node sets")
    total = 0.0
    for u in S:
        if any(w in T for w in g.succ[u]):
            total += g.size_out[u]
    return total / cfg.bandwidth


def overflow_cost(g: ComputationGraph, cfg: PlatformConfig, S: Iterable[int]) -> float:
    """Time to stream the parameters that do not fit in fast memory."""
    S = tuple(sorted(set(S)))
    if not S:
        return 0.0
    spill = sum(g.size_param[v] for v in S) + cfg.peak_model(S) - cfg.memory
    return max(spill, 0.0) / cfg.bandwidth


def block_cost(g: ComputationGraph, cfg: PlatformConfig, S: Iterable[int]) -> BlockCostBreakdown:
    """Running time of one pipeline stage holding exactly the ops in ``S``."""
    S = set(S)
    rest = set(range(g.n)) - S
    return BlockCostBreakdown(
        input_io=io_cost(g, cfg, rest, S),
        work=sum(g.work[v] for v in S),
        overflow=overflow_cost(g, cfg, S),
        output_io=io_cost(g, cfg, S, rest),
    )


def quotient_is_acyclic(g: ComputationGraph, p: Partition) -> bool:
    """True iff the block-level graph induced by inter-block edges has no cycle."""
    if len(p.assignment) != g.n:
        raise ValueError("partition does not cover the graph")
    qedges = {(p.assignment[u], p.assignment[v])
              for u, v in g.edges if p.assignment[u] != p.assignment[v]}
    blocks = sorted(set(p.assignment))
    succ = {b: [] for b in blocks}
    for a, b in qedges:
        succ[a].append(b)
    indeg = {b: 0 for b in blocks}
    for a, b in qedges:
        indeg[b] += 1
    stack = [b for b in blocks if indeg[b] == 0]
    emitted = 0
    while stack:
        a = stack.pop()
        emitted += 1
        for b in succ[a]:
            indeg[b] -= 1
            if indeg[b] == 0:
                stack.append(b)
    return emitted == len(blocks)


def mtpp_objective(g: ComputationGraph, cfg: PlatformConfig, p: Partition) -> float:
    """Bottleneck stage time: max over blocks of the block cost (empty block = 0)."""
    if not quotient_is_acyclic(g, p):
        raise InfeasiblePartitionError("partition quotient graph has a cycle")
    best = 0.0
    for block in p.blocks():
        if block:
            best = max(best, block_cost(g, cfg, block).total)
    return best


# --- graph JSON schema -------------------------------------------------------

_GRAPH_KEYS = {"name", "bandwidth", "memory", "nodes", "edges"}
_NODE_KEYS = {"id", "work", "size_param", "size_out"}


def graph_from_json_dict(data: dict) -> tuple[ComputationGraph, PlatformConfig]:
    if not isinstance(data, dict):
        raise GraphFormatError("graph file must contain a JSON object")
    unknown = set(data) - _GRAPH_KEYS
    if unknown:
        raise GraphFormatError(f"unknown top-level fields: {sorted(unknown)}")
    missing = _GRAPH_KEYS - set(data)
    if missing:
        raise GraphFormatError(f"missing fields: {sorted(missing)}")
    nodes = []
    for i, nd in enumerate(data["nodes"]):
        unknown = set(nd) - _NODE_KEYS
        if unknown:
            raise GraphFormatError(f"node {i}: unknown fields {sorted(unknown)}")
        nodes.append(NodeSpec(id=str(nd["id"]), work=float(nd["work"]),
                              size_param=float(nd["size_param"]),
                              size_out=float(nd["size_out"])))
    edges = [(int(e[0]), int(e[1])) for e in data["edges"]]
    g = ComputationGraph(str(data["name"]), nodes, edges)
    cfg = PlatformConfig(bandwidth=float(data["bandwidth"]), memory=float(data["memory"]))
    violations = validate_graph(g)
    if violations:
        raise GraphFormatError("invalid graph: " + "; ".join(violations))
    return g, cfg


def graph_to_json_dict(g: ComputationGraph, cfg: PlatformConfig) -> dict:
    return {
        "name": g.name,
        "bandwidth": cfg.bandwidth,
        "memory": cfg.memory,
        "nodes": [{"id": s.id, "work": s.work, "size_param": s.size_param,
                   "size_out": s.size_out} for s in g.nodes],
        "edges": [list(e) for e in g.edges],
    }


def load_graph_json(path) -> tuple[ComputationGraph, PlatformConfig]:
    with open(path, encoding="utf-8") as f:
        return graph_from_json_dict(json.load(f))


def save_graph_json(g: ComputationGraph, cfg: PlatformConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(graph_to_json_dict(g, cfg), f, indent=2, sort_keys=True)
        f.write("\n")
