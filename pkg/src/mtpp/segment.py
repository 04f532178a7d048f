"""O(1) cost queries for contiguous slices of a topological order.

Two constructions of the same table: a cubic-time reference (``init_naive``)
and the fast path (``init_fast``) that applies rectangle updates to a 2D
Fenwick tree and then materializes it densely.

The io table stores raw bytes; division by bandwidth happens at query time so
integer inputs stay exactly representable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ComputationGraph, PlatformConfig, zero_peak


class Fenwick2D:
    """2D Fenwick tree in range-update / point-query mode.

    ``range_update`` adds x to every cell of a rectangle in O(log^2 n);
    ``point_read`` recovers a cell value. ``to_dense`` materializes every cell
    in amortized O(n^2) via two prefix-sum passes over the internal array.
    """

    def __init__(self, n: int):
        self.n = n
        # Corner updates touch index n+1, so the internal domain is n+1 wide.
        self._size = n + 1
        self.tree = np.zeros((self._size + 1, self._size + 1))

    def _point_add(self, i: int, j: int, x: float) -> None:
        size, tree = self._size, self.tree
        while i <= size:
            jj = j
            row = tree[i]
            while jj <= size:
                row[jj] += x
                jj += jj & -jj
            i += i & -i

    def range_update(self, i1: int, j1: int, i2: int, j2: int, x: float) -> None:
        if not (1 <= i1 <= i2 <= self.n and 1 <= j1 <= j2 <= self.n):
            raise ValueError(f"rectangle ({i1},{j1})..({i2},{j2}) out of range for n={self.n}")
        self._point_add(i1, j1, x)
        self._point_add(i1, j2 + 1, -x)
        self._point_add(i2 + 1, j1, -x)
        self._point_add(i2 + 1, j2 + 1, x)

    def point_read(self, i: int, j: int) -> float:
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise ValueError(f"point ({i},{j}) out of range for n={self.n}")
        total = 0.0
        tree = self.tree
        while i > 0:
            jj = j
            row = tree[i]
            while jj > 0:
                total += row[jj]
                jj -= jj & -jj
            i -= i & -i
        return total

    def to_dense(self) -> np.ndarray:
        """All point values as an n x n array (row/col 1 of the tree maps to [0,0])."""
        a = self.tree.copy()
        # prefix[i] = tree[i] + prefix[i - lsb(i)], applied along each axis
        for i in range(1, self._size + 1):
            p = i - (i & -i)
            if p > 0:
                a[i, :] += a[p, :]
        for j in range(1, self._size + 1):
            p = j - (j & -j)
            if p > 0:
                a[:, j] += a[:, p]
        return a[1:self.n + 1, 1:self.n + 1]


@dataclass
class SegmentCostStructure:
    """Precomputed prefix sums and io table for one (graph, order) pair.

    ``io_table[l-1][r-1]`` holds the summed byte size of tensors cut by the
    segment at 1-based positions [l, r] of the order. Entries with l > r are
    written by the Fenwick construction but are never queried.
    """

    graph: ComputationGraph
    cfg: PlatformConfig
    order: tuple[int, ...]          # order[i] = node at 1-based position i+1
    work_prefix: np.ndarray         # length n+1
    mem_prefix: np.ndarray          # length n+1
    io_table: np.ndarray            # n x n, raw bytes

    @property
    def n(self) -> int:
        return len(self.order)

    def query(self, l: int, r: int) -> float:
        """Cost of the block {v_pi(l), ..., v_pi(r)}; l = r+1 is the empty block."""
        n = self.n
        if l == r + 1 and 1 <= l <= n + 1:
            return 0.0
        if not (1 <= l <= r <= n):
            raise ValueError(f"segment [{l}, {r}] out of range for n={n}")
        work = self.work_prefix[r] - self.work_prefix[l - 1]
        mem = self.mem_prefix[r] - self.mem_prefix[l - 1]
        peak = self.cfg.peak_model(self.order[l - 1:r])
        overflow = max(mem + peak - self.cfg.memory, 0.0) / self.cfg.bandwidth
        return work + overflow + self.io_table[l - 1, r - 1] / self.cfg.bandwidth

    def query_matrix(self) -> np.ndarray:
        """Q of shape (n+2, n+2) with Q[l][r] = query(l, r), Q[r+1][r] = 0.

        With the default zero peak model this is fully vectorized; a custom
        peak model degrades it to one model call per segment.
        """
        n = self.n
        q = np.zeros((n + 2, n + 2))
        if n == 0:
            return q
        wp, mp = self.work_prefix, self.mem_prefix
        work = wp[None, 1:] - wp[:-1, None]                 # [l-1][r-1], shape (n, n)
        mem = mp[None, 1:] - mp[:-1, None]
        if self.cfg.peak_model is not zero_peak:
            for l in range(1, n + 1):
                for r in range(l, n + 1):
                    mem[l - 1, r - 1] += self.cfg.peak_model(self.order[l - 1:r])
        over = np.maximum(mem - self.cfg.memory, 0.0) / self.cfg.bandwidth
        body = work + over + self.io_table / self.cfg.bandwidth
        q[1:n + 1, 1:n + 1] = np.triu(body)                 # l > r stays 0 (empty block)
        return q


def _check_topological(g: ComputationGraph, order) -> np.ndarray:
    if hasattr(order, "perm"):
        order = order.perm
    arr = np.asarray(order, dtype=np.int64)
    n = g.n
    if arr.shape != (n,) or (n > 0 and (arr.min() < 0 or arr.max() >= n or
                                        np.bincount(arr, minlength=n).max() > 1)):
        raise ValueError("order is not a permutation of the node indices")
    pos = np.empty(n, dtype=np.int64)
    pos[arr] = np.arange(1, n + 1)
    if g.m and not (pos[g.edge_arr[:, 0]] < pos[g.edge_arr[:, 1]]).all():
        bad = np.flatnonzero(pos[g.edge_arr[:, 0]] >= pos[g.edge_arr[:, 1]])[0]
        u, v = g.edges[bad]
        raise ValueError(f"order is not topological: edge ({u}, {v}) goes backwards")
    return pos


def _prefixes(g: ComputationGraph, order):
    arr = np.asarray(order, dtype=np.int64)
    wp = np.zeros(g.n + 1)
    mp = np.zeros(g.n + 1)
    np.cumsum(g.work_arr[arr], out=wp[1:])
    np.cumsum(g.param_arr[arr], out=mp[1:])
    return wp, mp


def _cut_intervals(pos: np.ndarray, u: int, succ: list[int]) -> tuple[list[tuple[int, int]], int, int]:
    """1-based position intervals whose segments do NOT cut u's tensor."""
    s = sorted({int(pos[u])} | {int(pos[w]) for w in succ})
    # u precedes its consumers in any topological order
    assert s[0] == pos[u], "non-topological order slipped past validation"
    return s, s[0], s[-1]


def init_naive(g: ComputationGraph, cfg: PlatformConfig, order) -> SegmentCostStructure:
    """Cubic-time reference construction of the segment cost structure."""
    if hasattr(order, "perm"):
        order = order.perm
    pos = _check_topological(g, order)
    order = tuple(int(v) for v in order)
    n = g.n
    wp, mp = _prefixes(g, order)
    total = float(sum(g.size_out))
    io = np.full((n, n), total)
    for u in range(n):
        so = g.size_out[u]
        s, first, last = _cut_intervals(pos, u, g.succ[u])
        gaps = [(1, first - 1)]
        gaps += [(s[i] + 1, s[i + 1] - 1) for i in range(len(s) - 1)]
        gaps += [(last + 1, n)]
        for a, b in gaps:
            for l in range(a, b + 1):
                io[l - 1, l - 1:b] -= so
        # segments containing every element of {u} ∪ N+(u)
        io[0:first, last - 1:n] -= so
    return SegmentCostStructure(g, cfg, order, wp, mp, io)


def init_fast(g: ComputationGraph, cfg: PlatformConfig, order) -> SegmentCostStructure:
    """Fenwick-tree construction; identical query results to ``init_naive``."""
    if hasattr(order, "perm"):
        order = order.perm
    pos = _check_topological(g, order)
    order = tuple(int(v) for v in order)
    n = g.n
    wp, mp = _prefixes(g, order)
    fw = Fenwick2D(n)
    total = float(sum(g.size_out))
    if n > 0 and total != 0.0:
        fw.range_update(1, 1, n, n, total)
    for u in range(n):
        so = g.size_out[u]
        if so == 0.0:
            continue
        s, first, last = _cut_intervals(pos, u, g.succ[u])
        gaps = [(1, first - 1)]
        gaps += [(s[i] + 1, s[i + 1] - 1) for i in range(len(s) - 1)]
        gaps += [(last + 1, n)]
        for a, b in gaps:
            if a <= b:
                # square covers the l <= r triangle plus never-queried cells
                fw.range_update(a, a, b, b, -so)
        fw.range_update(1, last, first, n, -so)
    return SegmentCostStructure(g, cfg, order, wp, mp, fw.to_dense())


def init_dense(g: ComputationGraph, cfg: PlatformConfig, order) -> SegmentCostStructure:
    """Same rectangle updates as ``init_fast``, applied to a plain 2D
    difference array and materialized with two cumulative sums.

    Worse asymptotics for point queries than the Fenwick tree but much lower
    constant factors when the whole table is needed anyway, which is what the
    search hot path does. Results are identical to ``init_fast``.
    """
    if hasattr(order, "perm"):
        order = order.perm
    pos = _check_topological(g, order)
    order = tuple(int(v) for v in order)
    n = g.n
    wp, mp = _prefixes(g, order)
    diff = np.zeros((n + 2, n + 2))
    so_arr = g.out_arr
    total = float(so_arr.sum())
    if n > 0 and total != 0.0:
        diff[1, 1] += total
        diff[n + 1, 1] -= total
        diff[1, n + 1] -= total
        diff[n + 1, n + 1] += total
    # one event per producer occurrence: the producer itself plus each of its
    # consumers, sorted by (producer, position); runs per producer reproduce
    # the sorted position list of init_fast's per-node loop
    edge_arr = g.edge_arr
    owner = np.concatenate([np.arange(n, dtype=np.int64), edge_arr[:, 0]])
    evpos = np.concatenate([pos, pos[edge_arr[:, 1]]])
    keep = so_arr[owner] != 0.0
    owner, evpos = owner[keep], evpos[keep]
    srt = np.lexsort((evpos, owner))
    owner, evpos = owner[srt], evpos[srt]
    same = np.empty(len(owner), dtype=bool)
    same[0:1] = False
    same[1:] = owner[1:] == owner[:-1]
    w = so_arr[owner]

    starts, ends, vals = [], [], []
    # interior gaps between consecutive events of the same producer
    prev = np.roll(evpos, 1)
    a, b = prev + 1, evpos - 1
    mask = same & (a <= b)
    starts.append(a[mask]); ends.append(b[mask]); vals.append(-w[mask])
    # leading gap [1, first-1]: first event is the producer (topological order)
    is_first = ~same
    a, b = np.ones(is_first.sum(), dtype=np.int64), evpos[is_first] - 1
    mask = a <= b
    starts.append(a[mask]); ends.append(b[mask]); vals.append(-w[is_first][mask])
    # trailing gap [last+1, n] and the containing rectangle [1,first]x[last,n]
    is_last = np.empty(len(owner), dtype=bool)
    is_last[:-1] = ~same[1:]
    is_last[-1:] = True
    first_pos, last_pos = evpos[is_first], evpos[is_last]
    a, b = last_pos + 1, np.full(is_last.sum(), n, dtype=np.int64)
    mask = a <= b
    starts.append(a[mask]); ends.append(b[mask]); vals.append(-w[is_last][mask])

    sa = np.concatenate(starts)
    sb = np.concatenate(ends)
    sv = np.concatenate(vals)
    np.add.at(diff, (sa, sa), sv)
    np.add.at(diff, (sb + 1, sa), -sv)
    np.add.at(diff, (sa, sb + 1), -sv)
    np.add.at(diff, (sb + 1, sb + 1), sv)
    wl = w[is_last]
    np.add.at(diff, (np.ones(len(first_pos), dtype=np.int64), last_pos), -wl)
    np.add.at(diff, (first_pos + 1, last_pos), wl)
    np.add.at(diff, (np.ones(len(first_pos), dtype=np.int64),
                     np.full(len(first_pos), n + 1, dtype=np.int64)), wl)
    np.add.at(diff, (first_pos + 1,
                     np.full(len(first_pos), n + 1, dtype=np.int64)), -wl)
    io = np.cumsum(np.cumsum(diff, axis=0), axis=1)[1:n + 1, 1:n + 1]
    return SegmentCostStructure(g, cfg, order, wp, mp, io)
