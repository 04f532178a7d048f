import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtpp import (ComputationGraph, Fenwick2D, NodeSpec, PlatformConfig,
                  block_cost, init_fast, init_naive)
from mtpp.datagen import generate_small_random_dag
from mtpp.slicing import kahn_with_priorities


def identity_order(g):
    return kahn_with_priorities(g, [-i for i in range(g.n)]).perm


class TestFenwick2D:
    def test_full_square_update(self):
        fw = Fenwick2D(4)
        fw.range_update(1, 1, 4, 4, 5.0)
        assert all(fw.point_read(i, j) == 5.0
                   for i in range(1, 5) for j in range(1, 5))

    def test_overlapping_rectangles_add(self):
        fw = Fenwick2D(5)
        fw.range_update(1, 1, 3, 3, 3.0)
        fw.range_update(2, 2, 5, 5, 4.0)
        assert fw.point_read(2, 2) == 7.0
        assert fw.point_read(1, 1) == 3.0
        assert fw.point_read(5, 5) == 4.0

    def test_invalid_rectangle_rejected(self):
        fw = Fenwick2D(3)
        with pytest.raises(ValueError):
            fw.range_update(2, 1, 1, 1, 1.0)
        with pytest.raises(ValueError):
            fw.range_update(1, 1, 4, 1, 1.0)

    def test_random_rectangles_match_dense_oracle(self):
        n = 12
        rng = np.random.Generator(np.random.Philox(key=42))
        fw = Fenwick2D(n)
        dense = np.zeros((n, n))
        for _ in range(100):
            i1, i2 = sorted(rng.integers(1, n + 1, size=2))
            j1, j2 = sorted(rng.integers(1, n + 1, size=2))
            x = float(rng.integers(-9, 10))
            fw.range_update(i1, j1, i2, j2, x)
            dense[i1 - 1:i2, j1 - 1:j2] += x
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                assert fw.point_read(i, j) == dense[i - 1, j - 1]
        assert np.array_equal(fw.to_dense(), dense)

    def test_to_dense_matches_point_reads(self):
        fw = Fenwick2D(7)
        fw.range_update(2, 3, 6, 7, 1.5)
        fw.range_update(1, 1, 7, 7, -0.5)
        d = fw.to_dense()
        for i in range(1, 8):
            for j in range(1, 8):
                assert d[i - 1, j - 1] == fw.point_read(i, j)


class TestInitIoTable:
    def test_single_node(self):
        g = ComputationGraph("g", [NodeSpec("a", 1.0, size_out=3.0)], [])
        s = init_naive(g, PlatformConfig(), (0,))
        assert s.io_table[0, 0] == 0.0

    def test_two_node_chain_by_hand(self):
        g = ComputationGraph("g", [NodeSpec("a", 1, size_out=4.0),
                                   NodeSpec("b", 1)], [(0, 1)])
        s = init_naive(g, PlatformConfig(), (0, 1))
        assert s.io_table[0, 0] == 4.0       # {a} alone: tensor leaves
        assert s.io_table[1, 1] == 4.0       # {b} alone: tensor enters
        assert s.io_table[0, 1] == 0.0       # both inside: no cut

    def test_shared_tensor_counted_once(self):
        # u feeds v and w; a segment holding u alone pays the tensor once
        g = ComputationGraph("g", [NodeSpec("u", 1, size_out=5.0),
                                   NodeSpec("v", 1), NodeSpec("w", 1)],
                             [(0, 1), (0, 2)])
        s = init_naive(g, PlatformConfig(), (0, 1, 2))
        assert s.io_table[0, 0] == 5.0

    def test_empty_edge_set_all_zero(self):
        g = ComputationGraph("g", [NodeSpec(f"n{i}", 1.0, size_out=2.0)
                                   for i in range(5)], [])
        s = init_naive(g, PlatformConfig(), tuple(range(5)))
        assert np.all(np.triu(s.io_table) == 0.0)

    def test_interleaved_star_fast_matches_naive(self):
        g = ComputationGraph("g", [NodeSpec("u", 1, size_out=3.0)]
                             + [NodeSpec(f"c{i}", 1) for i in range(3)]
                             + [NodeSpec("x", 1)],
                             [(0, 1), (0, 2), (0, 3)])
        order = (0, 1, 4, 2, 3)
        a, b = init_naive(g, PlatformConfig(), order), init_fast(g, PlatformConfig(), order)
        assert np.array_equal(np.triu(a.io_table), np.triu(b.io_table))

    def test_non_topological_order_rejected(self):
        g = ComputationGraph("g", [NodeSpec("a", 1), NodeSpec("b", 1)], [(0, 1)])
        with pytest.raises(ValueError):
            init_naive(g, PlatformConfig(), (1, 0))
        with pytest.raises(ValueError):
            init_fast(g, PlatformConfig(), (1, 0))

    @given(st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_fast_equals_naive(self, seed):
        g = generate_small_random_dag(min(16, 6 + seed % 11), 0.35, seed=seed)
        order = identity_order(g)
        a = init_naive(g, PlatformConfig(), order)
        b = init_fast(g, PlatformConfig(), order)
        assert np.array_equal(np.triu(a.io_table), np.triu(b.io_table))


class TestQuery:
    def test_whole_order_equals_block_cost(self):
        g = generate_small_random_dag(9, 0.4, seed=11)
        s = init_fast(g, PlatformConfig(), identity_order(g))
        assert s.query(1, g.n) == pytest.approx(block_cost(g, PlatformConfig(), range(g.n)).total)

    def test_empty_segment_is_zero(self):
        g = generate_small_random_dag(5, 0.4, seed=2)
        s = init_fast(g, PlatformConfig(), identity_order(g))
        for r in range(g.n):
            assert s.query(r + 1, r) == 0.0

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_query_matches_block_cost_on_slices(self, seed):
        g = generate_small_random_dag(8, 0.4, seed=seed)
        cfg = PlatformConfig(bandwidth=2.0)
        order = identity_order(g)
        s = init_fast(g, cfg, order)
        q = s.query_matrix()
        for l in range(1, g.n + 1):
            for r in range(l, g.n + 1):
                expect = block_cost(g, cfg, order[l - 1:r]).total
                assert s.query(l, r) == pytest.approx(expect, abs=1e-12)
                assert q[l, r] == s.query(l, r)

    def test_overflow_included_in_query(self):
        nodes = [NodeSpec("a", 1.0, size_param=80.0),
                 NodeSpec("b", 1.0, size_param=80.0)]
        g = ComputationGraph("g", nodes, [(0, 1)])
        cfg = PlatformConfig(bandwidth=10.0, memory=100.0)
        s = init_fast(g, cfg, (0, 1))
        # both nodes in one block: params 160 > 100 -> (60)/10 = 6 overflow
        assert s.query(1, 2) == pytest.approx(2.0 + 6.0)
        assert s.query(1, 1) == pytest.approx(1.0)


def _timed_init(n, repeats=3):
    g = generate_small_random_dag_big(n)
    order = tuple(range(n))
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        init_fast(g, PlatformConfig(), order)
        best = min(best, time.perf_counter() - t0)
    return best


def generate_small_random_dag_big(n):
    # edges oriented low -> high so the identity order is topological
    rng = np.random.Generator(np.random.Philox(key=7))
    edges = []
    for a in range(n):
        for b in rng.integers(a + 1, n, size=3) if a < n - 1 else []:
            if b > a:
                edges.append((a, int(b)))
    nodes = [NodeSpec(f"n{i}", 1.0, size_out=float(rng.integers(1, 9)))
             for i in range(n)]
    return ComputationGraph("big", nodes, sorted(set(edges)))


def test_init_fast_scales_subcubically():
    t256 = _timed_init(256)
    t512 = _timed_init(512)
    assert t512 < 5.0 * max(t256, 1e-4)
