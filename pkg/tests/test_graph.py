import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtpp import (ComputationGraph, GraphFormatError, InfeasiblePartitionError,
                  NodeSpec, Partition, PlatformConfig, block_cost, io_cost,
                  load_graph_json, mtpp_objective, overflow_cost,
                  quotient_is_acyclic, save_graph_json, validate_graph)
from mtpp.datagen import generate_small_random_dag
from mtpp.graph import graph_from_json_dict, graph_to_json_dict


def chain(works, size_outs):
    nodes = [NodeSpec(f"n{i}", w, size_out=s)
             for i, (w, s) in enumerate(zip(works, size_outs))]
    return ComputationGraph("chain", nodes, [(i, i + 1) for i in range(len(works) - 1)])


class TestValidateGraph:
    def test_single_node_is_valid(self):
        g = ComputationGraph("g", [NodeSpec("a", 1.0)], [])
        assert validate_graph(g) == []

    def test_two_cycle_reported(self):
        g = ComputationGraph("g", [NodeSpec("a", 1), NodeSpec("b", 1)],
                             [(0, 1), (1, 0)])
        assert any("cycle" in v for v in validate_graph(g))

    def test_edge_index_out_of_range(self):
        g = ComputationGraph("g", [NodeSpec("a", 1), NodeSpec("b", 1)], [(0, 5)])
        assert any("range" in v for v in validate_graph(g))

    def test_negative_work_reported(self):
        g = ComputationGraph("g", [NodeSpec("a", -1.0)], [])
        assert validate_graph(g)


class TestIoCost:
    def test_shared_tensor_counted_once(self):
        # a feeds both v and w: the tensor crosses the cut once, not twice
        nodes = [NodeSpec(x, 1.0, size_out=1.0) for x in "ab"]
        nodes += [NodeSpec(x, 1.0) for x in "vw"]
        g = ComputationGraph("g", nodes, [(0, 2), (0, 3), (1, 2)])
        cfg = PlatformConfig(bandwidth=1.0)
        assert io_cost(g, cfg, {0, 1}, {2, 3}) == 2.0

    def test_empty_side_is_zero(self):
        g = chain([1, 1], [1, 1])
        cfg = PlatformConfig()
        assert io_cost(g, cfg, set(), {0, 1}) == 0.0
        assert io_cost(g, cfg, {0, 1}, set()) == 0.0

    def test_no_direct_edge_means_zero(self):
        g = chain([1, 1, 1], [5, 1, 0])
        assert io_cost(g, PlatformConfig(bandwidth=2.0), {0}, {2}) == 0.0

    def test_overlapping_sides_rejected(self):
        g = chain([1, 1], [1, 1])
        with pytest.raises(ValueError):
            io_cost(g, PlatformConfig(), {0}, {0, 1})


class TestOverflowCost:
    def test_under_budget_clamps_to_zero(self):
        g = ComputationGraph("g", [NodeSpec("a", 1, size_param=10)], [])
        cfg = PlatformConfig(bandwidth=1.0, memory=100.0)
        assert overflow_cost(g, cfg, {0}) == 0.0

    def test_over_budget_scaled_by_bandwidth(self):
        g = ComputationGraph("g", [NodeSpec("a", 1, size_param=150)], [])
        cfg = PlatformConfig(bandwidth=10.0, memory=100.0)
        assert overflow_cost(g, cfg, {0}) == 5.0

    def test_empty_block_is_zero(self):
        g = chain([1], [0])
        assert overflow_cost(g, PlatformConfig(memory=0.0), set()) == 0.0


class TestBlockCost:
    def test_whole_graph_is_total_work(self):
        g = generate_small_random_dag(8, 0.4, seed=3)
        bc = block_cost(g, PlatformConfig(), range(g.n))
        assert bc.total == pytest.approx(sum(g.work))
        assert bc.input_io == bc.output_io == 0.0

    def test_empty_block_is_zero(self):
        g = chain([1, 2], [4, 6])
        assert block_cost(g, PlatformConfig(), set()).total == 0.0

    def test_two_node_path_by_hand(self):
        g = chain([1, 2], [4, 6])
        bc = block_cost(g, PlatformConfig(bandwidth=2.0), {0})
        assert (bc.input_io, bc.work, bc.output_io) == (0.0, 1.0, 2.0)
        assert bc.total == 3.0


class TestQuotientAcyclic:
    def test_single_block(self):
        g = generate_small_random_dag(6, 0.5, seed=0)
        assert quotient_is_acyclic(g, Partition(1, (1,) * g.n))

    def test_two_blocks_with_back_and_forth_edges(self):
        # edges run both block1 -> block2 and block2 -> block1
        g = ComputationGraph("g", [NodeSpec(x, 1) for x in "abc"],
                             [(0, 1), (1, 2)])
        assert not quotient_is_acyclic(g, Partition(2, (1, 2, 1)))

    def test_chain_split_around_middle(self):
        g = chain([1, 1, 1], [0, 0, 0])
        assert not quotient_is_acyclic(g, Partition(2, (1, 2, 1)))


class TestMtppObjective:
    def test_single_block_is_total_work(self):
        g = generate_small_random_dag(7, 0.4, seed=5)
        v = mtpp_objective(g, PlatformConfig(), Partition(1, (1,) * g.n))
        assert v == pytest.approx(sum(g.work))

    def test_unit_chain_three_blocks(self):
        g = chain([1, 1, 1], [0, 0, 0])
        v = mtpp_objective(g, PlatformConfig(), Partition(3, (1, 2, 3)))
        assert v == 1.0

    def test_cyclic_quotient_raises(self):
        g = chain([1, 1, 1], [0, 0, 0])
        with pytest.raises(InfeasiblePartitionError):
            mtpp_objective(g, PlatformConfig(), Partition(2, (1, 2, 1)))

    @given(st.integers(0, 10_000), st.integers(2, 4))
    @settings(max_examples=60, deadline=None)
    def test_work_is_partitioned_exactly(self, seed, k):
        g = generate_small_random_dag(7, 0.4, seed=seed)
        cfg = PlatformConfig()
        assign = tuple(sorted((seed * 31 + i * 7) % k + 1 for i in range(g.n)))
        # sorted labels along 0..n-1 need not be topological; fall back
        p = Partition(k, assign)
        if not quotient_is_acyclic(g, p):
            p = Partition(k, (1,) * g.n)
        works = sum(block_cost(g, cfg, b).work for b in p.blocks())
        assert works == pytest.approx(sum(g.work))


class TestJsonSchema:
    def doc(self):
        return {
            "name": "t",
            "bandwidth": 2.0,
            "memory": 100.0,
            "nodes": [{"id": "a", "work": 1.0, "size_param": 0.0, "size_out": 4.0},
                      {"id": "b", "work": 2.0, "size_param": 0.0, "size_out": 0.0}],
            "edges": [[0, 1]],
        }

    def test_round_trip(self, tmp_path):
        g, cfg = graph_from_json_dict(self.doc())
        path = tmp_path / "g.json"
        save_graph_json(g, cfg, path)
        g2, cfg2 = load_graph_json(path)
        assert graph_to_json_dict(g, cfg) == graph_to_json_dict(g2, cfg2)

    def test_unknown_top_level_field_rejected(self):
        d = self.doc()
        d["extra"] = 1
        with pytest.raises(GraphFormatError):
            graph_from_json_dict(d)

    def test_unknown_node_field_rejected(self):
        d = self.doc()
        d["nodes"][0]["flops"] = 1
        with pytest.raises(GraphFormatError):
            graph_from_json_dict(d)

    def test_missing_required_field_rejected(self):
        d = self.doc()
        del d["nodes"]
        with pytest.raises(GraphFormatError):
            graph_from_json_dict(d)

    def test_save_is_valid_json(self, tmp_path):
        g, cfg = graph_from_json_dict(self.doc())
        path = tmp_path / "g.json"
        save_graph_json(g, cfg, path)
        json.loads(path.read_text())


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_io_cost_bounded_by_total_tensor_size(seed):
    g = generate_small_random_dag(8, 0.5, seed=seed)
    cfg = PlatformConfig(bandwidth=1.0)
    S = {v for v in range(g.n) if (seed >> v) & 1}
    T = set(range(g.n)) - S
    assert io_cost(g, cfg, S, T) <= sum(g.size_out) + 1e-12


def test_platform_config_validation():
    with pytest.raises(ValueError):
        PlatformConfig(bandwidth=0.0)
    with pytest.raises(ValueError):
        PlatformConfig(memory=-1.0)
    assert math.isinf(PlatformConfig().memory)
