"""Lower-bound hierarchy for the min-max pipeline partitioning objective.

Four methods, each increasingly tight and increasingly expensive:

* ``simple``            -- combinatorial work bound, closed form.
* ``bottleneck``        -- three-superblock relaxation (model + oracle).
* ``bottleneck-guess``  -- one relaxation per guessed bottleneck position
                           (model per guess + oracle).
* ``exact``             -- exact block-assignment model / brute-force oracle.

Models are solver-agnostic containers emitted as LP text for external
solvers; the oracles exhaustively enumerate desk-scale instances. All models
ignore the parameter-overflow term: a fixed activation/parameter buffer is
assumed reserved, so the bounds stay valid whenever overflow is nonnegative.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .graph import ComputationGraph, Partition, PlatformConfig

METHODS = ("simple", "bottleneck", "bottleneck-guess", "exact")


class InstanceTooLargeError(ValueError):
    """Raised when an exhaustive oracle would exceed its enumeration guard."""


ENUMERATION_GUARD = 10**7


@dataclass(frozen=True)
class MipVariable:
    name: str
    kind: str                   # "binary" | "continuous"
    lower: float = 0.0
    upper: float = float("inf")


@dataclass(frozen=True)
class MipConstraint:
    name: str
    terms: tuple[tuple[float, str], ...]
    sense: str                  # "<=" | ">=" | "="
    rhs: float


@dataclass
class MipModel:
    name: str
    variables: list[MipVariable] = field(default_factory=list)
    constraints: list[MipConstraint] = field(default_factory=list)
    objective: tuple[tuple[float, str], ...] = ()

    def add_variable(self, name, kind, lower=0.0, upper=None):
        if upper is None:
            upper = 1.0 if kind == "binary" else float("inf")
        self.variables.append(MipVariable(name, kind, lower, upper))

    def add_constraint(self, name, terms, sense, rhs):
        terms = tuple((float(c), v) for c, v in terms if c != 0.0)
        if not terms:
            return  # fully substituted away; nothing to state
        self.constraints.append(MipConstraint(name, terms, sense, float(rhs)))

    def variable_names(self) -> set[str]:
        return {v.name for v in self.variables}


@dataclass(frozen=True)
class BoundCertificate:
    method: str
    value: float
    k: int
    graph: str
    source: str                 # "oracle" | "external-solver" | "formula"
    status: str | None = None
    detail: dict | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.value < 0:
            raise ValueError("lower bound values are nonnegative")


def simple_lower_bound(g: ComputationGraph, k: int) -> float:
    """Heaviest single op, or average work per block, whichever is larger."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if g.n == 0:
        return 0.0
    return max(max(g.work), sum(g.work) / k)


# --- model construction ------------------------------------------------------

def _yname(v: int, b: int) -> str:
    return f"y_v{v}_b{b}"


def _cname(u: int, b: int) -> str:
    return f"c_v{u}_b{b}"


class _Expr:
    """Tiny linear-expression accumulator with boundary substitution for y."""

    def __init__(self, k: int):
        self.k = k
        self.terms: dict[str, float] = {}
        self.const = 0.0

    def add_y(self, v: int, b: int, coef: float):
        if b <= 0:
            return
        if b >= self.k:
            self.const += coef
            return
        name = _yname(v, b)
        self.terms[name] = self.terms.get(name, 0.0) + coef

    def add(self, name: str, coef: float):
        self.terms[name] = self.terms.get(name, 0.0) + coef

    def items(self):
        return [(c, v) for v, c in self.terms.items()]


def build_exact_mip(g: ComputationGraph, cfg: PlatformConfig, k: int) -> MipModel:
    """Exact block-assignment model for the min-max objective.

    Binary y_{vb} means "v is assigned at or before block b"; boundary columns
    y_{v0} = 0 and y_{vk} = 1 are substituted out, as is the per-block
    indicator x_{vb} = y_{vb} - y_{v(b-1)}. Tensor-cut variables c are
    continuous: their lower-bound constraints force them to {0, 1} whenever
    the y are integral.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = MipModel(name=f"{g.name}_exact_k{k}")
    producers = g.producers()
    for v in range(g.n):
        for b in range(1, k):
            m.add_variable(_yname(v, b), "binary", 0.0, 1.0)
    for u in producers:
        for b in range(1, k + 1):
            m.add_variable(_cname(u, b), "continuous")
    for b in range(1, k + 1):
        m.add_variable(f"block_{b}", "continuous")
    m.add_variable("bottleneck", "continuous")
    m.objective = ((1.0, "bottleneck"),)

    for b in range(1, k + 1):
        m.add_constraint(f"bottleneck_ge_block_{b}",
                         [(1.0, "bottleneck"), (-1.0, f"block_{b}")], ">=", 0.0)
    inv_b = 1.0 / cfg.bandwidth
    for b in range(1, k + 1):
        e = _Expr(k)
        e.add(f"block_{b}", 1.0)
        for v in range(g.n):
            e.add_y(v, b, -g.work[v])
            e.add_y(v, b - 1, g.work[v])
        for u in producers:
            e.add(_cname(u, b), -g.size_out[u] * inv_b)
        m.add_constraint(f"block_cost_{b}", e.items(), "=", -e.const)
    for i, (u, v) in enumerate(g.edges):
        for b in range(1, k + 1):
            e = _Expr(k)
            e.add_y(u, b, 1.0)
            e.add_y(v, b, -1.0)
            m.add_constraint(f"dag_e{i}_b{b}", e.items(), ">=", -e.const)
    for i, (u, v) in enumerate(g.edges):
        for b in range(1, k + 1):
            e = _Expr(k)
            e.add(_cname(u, b), 1.0)
            e.add_y(u, b - 1, -1.0)
            e.add_y(v, b, -1.0)
            e.add_y(v, b - 1, 1.0)
            m.add_constraint(f"cut_in_e{i}_b{b}", e.items(), ">=", -1.0 - e.const)
    for i, (u, v) in enumerate(g.edges):
        for b in range(1, k + 1):
            e = _Expr(k)
            e.add(_cname(u, b), 1.0)
            e.add_y(u, b, -1.0)
            e.add_y(u, b - 1, 1.0)
            e.add_y(v, b, 1.0)
            m.add_constraint(f"cut_out_e{i}_b{b}", e.items(), ">=", -e.const)
    for v in range(g.n):
        for b in range(2, k):
            m.add_constraint(f"mono_v{v}_b{b}",
                             [(1.0, _yname(v, b)), (-1.0, _yname(v, b - 1))], ">=", 0.0)
    return m


def _three_superblock_core(m: MipModel, g: ComputationGraph, cfg: PlatformConfig,
                           blocks: tuple[int, ...], with_block_vars: tuple[int, ...]):
    """Shared constraint plumbing for the two relaxations (3 blocks, y_{v3} = 1)."""
    k3 = 3
    inv_b = 1.0 / cfg.bandwidth
    producers = g.producers()
    for b in with_block_vars:
        e = _Expr(k3)
        e.add(f"block_{b}", 1.0)
        for v in range(g.n):
            e.add_y(v, b, -g.work[v])
            e.add_y(v, b - 1, g.work[v])
        for u in producers:
            e.add(_cname(u, b), -g.size_out[u] * inv_b)
        m.add_constraint(f"block_cost_{b}", e.items(), "=", -e.const)
    for i, (u, v) in enumerate(g.edges):
        for b in (1, 2):
            e = _Expr(k3)
            e.add_y(u, b, 1.0)
            e.add_y(v, b, -1.0)
            m.add_constraint(f"dag_e{i}_b{b}", e.items(), ">=", -e.const)
    for i, (u, v) in enumerate(g.edges):
        for b in blocks:
            e = _Expr(k3)
            e.add(_cname(u, b), 1.0)
            e.add_y(u, b - 1, -1.0)
            e.add_y(v, b, -1.0)
            e.add_y(v, b - 1, 1.0)
            m.add_constraint(f"cut_in_e{i}_b{b}", e.items(), ">=", -1.0 - e.const)
    for i, (u, v) in enumerate(g.edges):
        for b in blocks:
            e = _Expr(k3)
            e.add(_cname(u, b), 1.0)
            e.add_y(u, b, -1.0)
            e.add_y(u, b - 1, 1.0)
            e.add_y(v, b, 1.0)
            m.add_constraint(f"cut_out_e{i}_b{b}", e.items(), ">=", -e.const)
    for v in range(g.n):
        m.add_constraint(f"mono_v{v}_b2",
                         [(1.0, _yname(v, 2)), (-1.0, _yname(v, 1))], ">=", 0.0)


def _work_floor_constraint(m: MipModel, g: ComputationGraph, L: float):
    e = _Expr(3)
    for v in range(g.n):
        e.add_y(v, 2, g.work[v])
        e.add_y(v, 1, -g.work[v])
    m.add_constraint("superblock2_work_floor", e.items(), ">=", L - e.const)


def build_bottleneck_mip(g: ComputationGraph, cfg: PlatformConfig, k: int) -> MipModel:
    """Three-superblock relaxation: model only the bottleneck block explicitly.

    Earlier blocks merge into superblock 1, later ones into superblock 3;
    those superblocks carry no cost, so the objective is just the middle
    block's cost, floored by the simple work bound.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = MipModel(name=f"{g.name}_bottleneck_k{k}")
    producers = g.producers()
    for v in range(g.n):
        for b in (1, 2):
            m.add_variable(_yname(v, b), "binary", 0.0, 1.0)
    for u in producers:
        m.add_variable(_cname(u, 2), "continuous")
    m.add_variable("block_2", "continuous")
    m.objective = ((1.0, "block_2"),)
    _three_superblock_core(m, g, cfg, blocks=(2,), with_block_vars=(2,))
    _work_floor_constraint(m, g, simple_lower_bound(g, k))
    return m


def build_guess_mip(g: ComputationGraph, cfg: PlatformConfig, k: int, j: int) -> MipModel:
    """Three-superblock relaxation under the guess "the bottleneck is block j".

    Superblocks 1 and 3 now carry their merged cost, averaged over the j-1
    (resp. k-j) blocks they stand for. Guessing j=1 (j=k) pins superblock 1
    (superblock 3) empty via variable bounds.
    """
    if not 1 <= j <= k:
        raise ValueError(f"guess j={j} outside [1, {k}]")
    m = MipModel(name=f"{g.name}_guess_k{k}_j{j}")
    producers = g.producers()
    for v in range(g.n):
        lower = 1.0 if j == k else 0.0      # j=k: nothing after the bottleneck
        upper = 0.0 if j == 1 else 1.0      # j=1: nothing before the bottleneck
        m.add_variable(_yname(v, 1), "binary", 0.0, upper)
        m.add_variable(_yname(v, 2), "binary", lower, 1.0)
    for u in producers:
        for b in (1, 2, 3):
            m.add_variable(_cname(u, b), "continuous")
    for b in (1, 2, 3):
        m.add_variable(f"block_{b}", "continuous")
    m.add_variable("bottleneck", "continuous")
    m.objective = ((1.0, "bottleneck"),)

    m.add_constraint("bottleneck_ge_block_2",
                     [(1.0, "bottleneck"), (-1.0, "block_2")], ">=", 0.0)
    if j > 1:
        m.add_constraint("bottleneck_ge_avg_block_1",
                         [(1.0, "bottleneck"), (-1.0 / (j - 1), "block_1")], ">=", 0.0)
    if j < k:
        m.add_constraint("bottleneck_ge_avg_block_3",
                         [(1.0, "bottleneck"), (-1.0 / (k - j), "block_3")], ">=", 0.0)
    _three_superblock_core(m, g, cfg, blocks=(1, 2, 3), with_block_vars=(1, 2, 3))
    _work_floor_constraint(m, g, simple_lower_bound(g, k))
    return m


# --- LP emission -------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x + 0.0:.12g}"    # +0.0 folds -0.0 into 0


def _fmt_terms(terms) -> str:
    parts = []
    for coef, var in sorted(terms, key=lambda t: t[1]):
        if coef == 0.0:
            continue
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {var}")
    return " ".join(parts)


def emit_lp(model: MipModel, destination) -> None:
    """Write the model as deterministic LP-format text.

    Terms are sorted by variable name and zero coefficients dropped, so equal
    models emit byte-identical files. ``destination`` is a path or a text
    file object.
    """
    lines = [f"\\ {model.name}", "Minimize", f" obj: {_fmt_terms(model.objective)}",
             "Subject To"]
    for c in model.constraints:
        lines.append(f" {c.name}: {_fmt_terms(c.terms)} {c.sense} {_fmt(c.rhs)}")
    bounds = []
    for v in model.variables:
        default_lower, default_upper = (0.0, 1.0) if v.kind == "binary" else (0.0, float("inf"))
        if (v.lower, v.upper) == (default_lower, default_upper):
            continue
        if v.lower == v.upper:
            bounds.append(f" {v.name} = {_fmt(v.lower)}")
        else:
            bounds.append(f" {_fmt(v.lower)} <= {v.name} <= {_fmt(v.upper)}")
    if bounds:
        lines.append("Bounds")
        lines.extend(bounds)
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binary")
        lines.extend(f" {name}" for name in binaries)
    lines.append("End")
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as f:
            f.write(text)


# --- exhaustive oracles ------------------------------------------------------

def _monotone_labelings(g: ComputationGraph, k: int, allowed=None):
    """Yield all edge-monotone block labelings (canonical acyclic-quotient forms).

    Every partition with an acyclic quotient can be renumbered so block
    indices are non-decreasing along edges, without changing the objective,
    so enumerating these labelings covers the whole feasible space.
    """
    from .slicing import kahn_with_priorities
    order = kahn_with_priorities(g, [0.0] * g.n).perm
    labels = [0] * g.n
    choices = list(range(1, k + 1)) if allowed is None else sorted(allowed)

    def rec(i):
        if i == len(order):
            yield labels
            return
        v = order[i]
        floor = max((labels[u] for u in g.pred[v]), default=choices[0])
        for b in choices:
            if b < floor:
                continue
            labels[v] = b
            yield from rec(i + 1)
        labels[v] = 0

    yield from rec(0)


def _labeling_block_costs(g: ComputationGraph, cfg: PlatformConfig,
                          labels, k: int, with_overflow: bool) -> list[float]:
    """Per-block cost under tensor-cut semantics (index 0 of the result unused)."""
    work = [0.0] * (k + 1)
    param = [0.0] * (k + 1)
    io_in = [0.0] * (k + 1)
    io_out = [0.0] * (k + 1)
    for v in range(g.n):
        work[labels[v]] += g.work[v]
        param[labels[v]] += g.size_param[v]
    for u in range(g.n):
        if not g.succ[u]:
            continue
        bu = labels[u]
        targets = {labels[v] for v in g.succ[u]}
        targets.discard(bu)
        if targets:
            io_out[bu] += g.size_out[u]
            for b in targets:
                io_in[b] += g.size_out[u]
    inv_b = 1.0 / cfg.bandwidth
    costs = [0.0] * (k + 1)
    for b in range(1, k + 1):
        costs[b] = work[b] + (io_in[b] + io_out[b]) * inv_b
        if with_overflow:
            members = tuple(v for v in range(g.n) if labels[v] == b)
            if members:
                peak = cfg.peak_model(members)
                costs[b] += max(param[b] + peak - cfg.memory, 0.0) * inv_b
    return costs


def solve_small_exact(g: ComputationGraph, cfg: PlatformConfig,
                      k: int) -> tuple[float, Partition]:
    """Brute-force optimum over all acyclic-quotient partitions into <= k blocks."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k ** g.n > ENUMERATION_GUARD:
        raise InstanceTooLargeError(f"k^n = {k}^{g.n} exceeds the enumeration guard")
    best = float("inf")
    witness = None
    for labels in _monotone_labelings(g, k):
        costs = _labeling_block_costs(g, cfg, labels, k, with_overflow=True)
        value = max(costs)
        if value < best:
            best = value
            witness = tuple(labels)
    return best, Partition(k=k, assignment=witness)


def _superblock_guard(g: ComputationGraph):
    if 3 ** g.n > ENUMERATION_GUARD:
        raise InstanceTooLargeError(f"3^n = 3^{g.n} exceeds the enumeration guard")


def solve_bottleneck_oracle(g: ComputationGraph, cfg: PlatformConfig, k: int) -> BoundCertificate:
    """Exhaustive optimum of the three-superblock relaxation."""
    _superblock_guard(g)
    L = simple_lower_bound(g, k)
    eps = 1e-12 * max(1.0, abs(L))
    best = float("inf")
    for labels in _monotone_labelings(g, 3):
        costs = _labeling_block_costs(g, cfg, labels, 3, with_overflow=False)
        work2 = sum(g.work[v] for v in range(g.n) if labels[v] == 2)
        if work2 + eps >= L:
            best = min(best, costs[2])
    return BoundCertificate("bottleneck", best, k, g.name, source="oracle")


def solve_guess_oracle(g: ComputationGraph, cfg: PlatformConfig, k: int) -> BoundCertificate:
    """Exhaustive min over guessed bottleneck positions of the per-guess optimum."""
    _superblock_guard(g)
    L = simple_lower_bound(g, k)
    eps = 1e-12 * max(1.0, abs(L))
    per_j = {}
    for j in range(1, k + 1):
        allowed = {2}
        if j > 1:
            allowed.add(1)
        if j < k:
            allowed.add(3)
        lb_j = float("inf")
        for labels in _monotone_labelings(g, 3, allowed=allowed):
            work2 = sum(g.work[v] for v in range(g.n) if labels[v] == 2)
            if work2 + eps < L:
                continue
            costs = _labeling_block_costs(g, cfg, labels, 3, with_overflow=False)
            value = costs[2]
            if j > 1:
                value = max(value, costs[1] / (j - 1))
            if j < k:
                value = max(value, costs[3] / (k - j))
            lb_j = min(lb_j, value)
        per_j[j] = lb_j
    best = min(per_j.values())
    return BoundCertificate("bottleneck-guess", best, k, g.name, source="oracle",
                            detail={"per_guess": per_j})


# --- desk-scale model optimizer ---------------------------------------------

def optimize_model_by_enumeration(model: MipModel) -> float:
    """Minimize a model of this module's shape by enumerating its binaries.

    Assumes the structure shared by all three builders: binary variables are
    independent except through variable-free-of-continuous constraints, and
    every continuous variable is pushed down by the objective, so it sits at
    the max of its lower bounds ("c_" first, then "block_", then
    "bottleneck"). This is the per-model optimum, not a relaxation.
    """
    binaries = [v for v in model.variables if v.kind == "binary"]
    if 2 ** len(binaries) > ENUMERATION_GUARD:
        raise InstanceTooLargeError(f"2^{len(binaries)} exceeds the enumeration guard")
    bin_names = [v.name for v in binaries]
    bin_index = {name: i for i, name in enumerate(bin_names)}
    cont_names = [v.name for v in model.variables if v.kind == "continuous"]
    cont_set = set(cont_names)

    # constraints among binaries only, watched by their deepest variable
    binary_only = [[] for _ in bin_names]
    mixed = []
    for c in model.constraints:
        vars_in = [v for _, v in c.terms]
        if all(v in bin_index for v in vars_in):
            depth = max(bin_index[v] for v in vars_in)
            binary_only[depth].append(c)
        else:
            mixed.append(c)

    def cont_rank(name):
        return (0 if name.startswith("c_") else 1 if name.startswith("block_") else 2, name)

    resolve_order = sorted(cont_names, key=cont_rank)
    by_var: dict[str, list[MipConstraint]] = {v: [] for v in cont_names}
    for c in mixed:
        target = max((v for _, v in c.terms if v in cont_set), key=cont_rank)
        by_var[target].append(c)

    fixed_lo = {v.name: v.lower for v in binaries}
    fixed_hi = {v.name: v.upper for v in binaries}
    assignment = [0.0] * len(bin_names)
    best = [float("inf")]

    def feasible_at(depth):
        for c in binary_only[depth]:
            lhs = sum(coef * assignment[bin_index[v]] for coef, v in c.terms)
            if c.sense == ">=" and lhs < c.rhs - 1e-9:
                return False
            if c.sense == "<=" and lhs > c.rhs + 1e-9:
                return False
            if c.sense == "=" and abs(lhs - c.rhs) > 1e-9:
                return False
        return True

    def leaf_value():
        values = {name: assignment[i] for name, i in bin_index.items()}
        for name in resolve_order:
            lb = 0.0
            pinned = None
            for c in by_var[name]:
                coef = next(cf for cf, v in c.terms if v == name)
                rest = sum(cf * values[v] for cf, v in c.terms if v != name)
                bound = (c.rhs - rest) / coef
                if c.sense == "=":
                    pinned = bound
                elif c.sense == ">=" and coef > 0:
                    lb = max(lb, bound)
                elif c.sense == "<=" and coef < 0:
                    lb = max(lb, bound)
            values[name] = pinned if pinned is not None else lb
        return sum(coef * values[v] for coef, v in model.objective)

    def rec(depth):
        if depth == len(bin_names):
            best[0] = min(best[0], leaf_value())
            return
        name = bin_names[depth]
        choices = sorted({fixed_lo[name], fixed_hi[name]})
        for val in choices:
            assignment[depth] = val
            if feasible_at(depth):
                rec(depth + 1)

    rec(0)
    return best[0]


# --- certificate CSV ---------------------------------------------------------

CSV_HEADER = ["graph", "k", "method", "bound", "status"]


def export_bounds_csv(certs, destination) -> None:
    rows = [CSV_HEADER] + [[c.graph, c.k, c.method, _fmt(c.value), c.status or c.source]
                           for c in certs]
    if hasattr(destination, "write"):
        w = csv.writer(destination)
        w.writerows(rows)
    else:
        with open(destination, "w", newline="", encoding="utf-8") as f:
            csv.writer(f).writerows(rows)


def import_external_bounds(path) -> tuple[list[BoundCertificate], list[tuple[int, str]]]:
    """Parse a bounds CSV into certificates.

    Returns (certificates, rejected) where rejected holds (line number,
    reason) for rows violating the certificate invariants. Unknown method
    strings are a file-level error and raise.
    """
    certs = []
    rejected = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header {','.join(CSV_HEADER)}")
        if [h.strip() for h in header] != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                rejected.append((lineno, f"expected 5 columns, got {len(row)}"))
                continue
            graph, k_str, method, bound_str, status = (s.strip() for s in row)
            if method not in METHODS:
                raise ValueError(f"{path}:{lineno}: unknown method {method!r}")
            try:
                k = int(k_str)
                bound = float(bound_str)
            except ValueError:
                rejected.append((lineno, "k or bound is not numeric"))
                continue
            if bound < 0:
                rejected.append((lineno, f"negative bound {bound}"))
                continue
            certs.append(BoundCertificate(method, bound, k, graph,
                                          source="external-solver", status=status))
    return certs, rejected
