"""Synthetic computation graphs: benchmark-style corpora and oracle test DAGs.

All sampling runs on the counter-based Philox generator keyed on the seed, so
corpora are reproducible across platforms. Undirected base graphs are turned
into DAGs by orienting every edge along a uniformly random node permutation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import ComputationGraph, NodeSpec, PlatformConfig, save_graph_json

MODELS = ("erdos-renyi", "barabasi-albert", "watts-strogatz", "layered")

#: memory budget written into generated files; large enough that parameter
#: overflow never triggers (generated graphs carry no parameter weights).
DEFAULT_MEMORY = 1e18


@dataclass(frozen=True)
class GenParams:
    model: str = "erdos-renyi"
    n_range: tuple[int, int] = (50, 200)
    tensor_mean: float = 50.0
    tensor_std: float = 10.0
    work_noise_std: float = 0.1
    er_edge_prob: float | None = None       # default 2 ln(n) / n
    ba_attachment: int = 2
    ws_degree: int = 4
    ws_rewire_prob: float = 0.3
    layered_width: int = 8
    bandwidth: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        lo, hi = self.n_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad n_range {self.n_range}")
        if self.tensor_std < 0 or self.work_noise_std < 0:
            raise ValueError("std values must be >= 0")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & (2**64 - 1)))


def _base_edges(p: GenParams, n: int, rng: np.random.Generator) -> set[tuple[int, int]]:
    """Undirected edge set {(a, b) with a < b} from the chosen random model."""
    edges: set[tuple[int, int]] = set()
    if p.model == "erdos-renyi":
        prob = p.er_edge_prob if p.er_edge_prob is not None else min(1.0, 2 * math.log(n) / n)
        draws = rng.random((n, n))
        a_idx, b_idx = np.triu_indices(n, k=1)
        hit = draws[a_idx, b_idx] < prob
        edges.update(zip(a_idx[hit].tolist(), b_idx[hit].tolist()))
    elif p.model == "barabasi-albert":
        m0 = max(1, min(p.ba_attachment, n - 1))
        stubs = list(range(m0))      # attachment proportional to degree
        for v in range(m0, n):
            targets: set[int] = set()
            while len(targets) < min(m0, v):
                targets.add(int(stubs[rng.integers(0, len(stubs))]))
            for t in targets:
                edges.add((min(v, t), max(v, t)))
                stubs.extend((v, t))
    elif p.model == "watts-strogatz":
        d = max(2, min(p.ws_degree - p.ws_degree % 2, n - 1))
        for v in range(n):
            for off in range(1, d // 2 + 1):
                a, b = v, (v + off) % n
                if rng.random() < p.ws_rewire_prob:
                    b = int(rng.integers(0, n))
                    while b == a or (min(a, b), max(a, b)) in edges:
                        b = int(rng.integers(0, n))
                if a != b:
                    edges.add((min(a, b), max(a, b)))
    elif p.model == "layered":
        width = max(1, p.layered_width)
        layer = [int(i // width) for i in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                if layer[b] == layer[a] + 1 and rng.random() < 0.5:
                    edges.add((a, b))
    return edges


def generate_regal_like(p: GenParams) -> tuple[ComputationGraph, PlatformConfig]:
    """Sample one benchmark-style computation graph.

    Tensor sizes are N(tensor_mean, tensor_std) clamped to >= 1; node work is
    the sum of its (distinct-producer) input tensor sizes and its own output
    tensor size, plus a N(0, work_noise_std) fraction of the total tensor
    footprint, clamped to >= 0. Parameter sizes are zero: the source
    procedure does not specify them.
    """
    rng = _rng(p.seed)
    lo, hi = p.n_range
    n = int(rng.integers(lo, hi + 1))
    base = _base_edges(p, n, rng)
    perm = rng.permutation(n)
    pos = np.empty(n, dtype=np.int64)
    pos[perm] = np.arange(n)
    edges = sorted((a, b) if pos[a] < pos[b] else (b, a) for a, b in base)

    size_out = np.maximum(rng.normal(p.tensor_mean, p.tensor_std, size=n), 1.0)
    total = float(size_out.sum())
    noise = rng.normal(0.0, p.work_noise_std, size=n)
    preds: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        preds[v].add(u)
    nodes = []
    for v in range(n):
        io_sum = sum(size_out[u] for u in preds[v]) + size_out[v]
        work = max(io_sum + noise[v] * total, 0.0)
        nodes.append(NodeSpec(id=f"op{v}", work=float(work), size_param=0.0,
                              size_out=float(size_out[v])))
    g = ComputationGraph(f"{p.model}_n{n}_s{p.seed}", nodes, edges)
    return g, PlatformConfig(bandwidth=p.bandwidth, memory=DEFAULT_MEMORY)


def generate_small_random_dag(n: int, edge_prob: float, weight_ranges=None,
                              seed: int = 0,
                              name: str | None = None) -> ComputationGraph:
    """Small integer-weighted random DAG for exhaustive-oracle testing."""
    if n > 16:
        raise ValueError("oracle test graphs are capped at n = 16")
    ranges = {"work": (1, 10), "size_out": (0, 8), "size_param": (0, 0)}
    if weight_ranges:
        ranges.update(weight_ranges)
    rng = _rng(seed)
    perm = rng.permutation(n)
    pos = np.empty(n, dtype=np.int64)
    pos[perm] = np.arange(n)
    edges = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < edge_prob:
                edges.append((a, b) if pos[a] < pos[b] else (b, a))
    def draw(key):
        lo, hi = ranges[key]
        return float(rng.integers(lo, hi + 1))
    nodes = [NodeSpec(id=f"v{i}", work=draw("work"), size_param=draw("size_param"),
                      size_out=draw("size_out")) for i in range(n)]
    return ComputationGraph(name or f"rand_n{n}_s{seed}", nodes, sorted(edges))


def adversarial_pairing_graph(k: int, eps: float, bandwidth: float = 1.0,
                              with_edge: bool = True):
    """Worst-case instance for order slicing: k heavy ops pair with k light ops.

    The optimum pairs heavy node i with light node k+i (bottleneck 1), but the
    order (heavies, then lights reversed) forces the slicer to keep everything
    in a single block whenever the huge tensor on edge (0, k) may not be cut.
    Returns (graph, platform, adversarial order as node indices).
    """
    if k < 2 or not 0 < eps < 1:
        raise ValueError("need k >= 2 and eps in (0, 1)")
    nodes = [NodeSpec(id=f"heavy{i}", work=1.0 - eps,
                      size_out=10.0 * k * bandwidth if (with_edge and i == 0) else 0.0)
             for i in range(k)]
    nodes += [NodeSpec(id=f"light{i}", work=eps) for i in range(k)]
    edges = [(0, k)] if with_edge else []
    g = ComputationGraph(f"pairing_k{k}", nodes, edges)
    order = list(range(k)) + list(range(2 * k - 1, k - 1, -1))
    return g, PlatformConfig(bandwidth=bandwidth), order


def write_corpus(params: GenParams, count: int, out_dir,
                 prefix: str = "graph") -> list[dict]:
    """Write ``count`` graphs plus a ``manifest.csv`` of (file, n, m, seed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i in range(count):
        p = GenParams(**{**params.__dict__, "seed": params.seed + i})
        g, cfg = generate_regal_like(p)
        fname = f"{prefix}_{i:04d}.json"
        save_graph_json(g, cfg, out / fname)
        manifest.append({"file": fname, "n": g.n, "m": g.m, "seed": p.seed})
    with open(out / "manifest.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=["file", "n", "m", "seed"])
        w.writeheader()
        w.writerows(manifest)
    return manifest
