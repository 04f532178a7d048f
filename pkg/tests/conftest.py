"""Shared oracles for the test suite.

These helpers deliberately avoid the library's optimized code paths so that
tests compare two independent routes to the same answer.
"""

from __future__ import annotations

import itertools

from mtpp import block_cost


def all_topological_orders(g):
    """Every topological order of a small graph, by filtered permutation."""
    for p in itertools.permutations(range(g.n)):
        pos = {v: i for i, v in enumerate(p)}
        if all(pos[u] < pos[v] for u, v in g.edges):
            yield p


def brute_slice_value(g, cfg, k, order):
    """Min over all ≤k contiguous segmentations of max block cost, via
    direct per-slice block_cost evaluation."""
    n = g.n
    best = float("inf")
    for blocks in range(1, min(k, n) + 1):
        for cuts in itertools.combinations(range(1, n), blocks - 1):
            borders = (0,) + cuts + (n,)
            value = max(
                block_cost(g, cfg, order[a:b]).total
                for a, b in zip(borders, borders[1:]))
            best = min(best, value)
    return best


def brute_mtpp_opt(g, cfg, k):
    """Min mtpp_objective over ALL assignments with acyclic quotient.

    Independent of solve_small_exact's monotone-labeling enumeration: tries
    every function V -> [k] and keeps the feasible ones.
    """
    from mtpp import InfeasiblePartitionError, Partition, mtpp_objective
    best = float("inf")
    for assign in itertools.product(range(1, k + 1), repeat=g.n):
        try:
            best = min(best, mtpp_objective(g, cfg, Partition(k, assign)))
        except InfeasiblePartitionError:
            continue
    return best
