import numpy as np
import pytest

from routecf.core import HORIZON, ProblemKind, evaluate_route, is_feasible
from routecf.datagen import (
    GenConfig,
    gen_actual_route_dataset,
    gen_cf_route_dataset,
    gen_cvrp_instance,
    gen_instance,
    gen_pctsp_instance,
    gen_pctsptw_instance,
    gen_tsptw_instance,
    load_jsonl,
    sample_cf_question,
    save_jsonl,
)
from routecf.solver import SolverConfig


def cfg(kind, n=8, samples=5, **kw):
    return GenConfig(kind=kind, n_nodes=n, n_samples=samples, **kw)


class TestTsptwGen:
    def test_generating_tour_feasible(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            inst = gen_tsptw_instance(cfg(ProblemKind.TSPTW, n=10), rng)
            # some full tour must be feasible: windows were sampled around one
            found = False
            from routecf.solver import solve
            r = solve(inst, config=SolverConfig())
            ok, _ = is_feasible(inst, r)
            found = ok
            assert found

    def test_window_width_bounded(self):
        rng = np.random.default_rng(1)
        c = cfg(ProblemKind.TSPTW, n=12)
        inst = gen_tsptw_instance(c, rng)
        for node in inst.nodes[1:]:
            e, l = node.time_window
            assert l - e <= c.effective_t_max + 1e-12

    def test_determinism(self):
        c = cfg(ProblemKind.TSPTW, n=9)
        a = gen_tsptw_instance(c, np.random.default_rng(1234))
        b = gen_tsptw_instance(c, np.random.default_rng(1234))
        assert a == b


class TestPctspGen:
    def test_bounds(self):
        rng = np.random.default_rng(2)
        c = cfg(ProblemKind.PCTSP, n=20)
        inst = gen_pctsp_instance(c, rng)
        for node in inst.nodes[1:]:
            assert 0 <= node.prize <= 4 / 20
            assert 0 <= node.penalty <= 3 * 2 / 20
        assert inst.min_total_prize == 1.0

    def test_feasible_subset_exists(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            inst = gen_pctsp_instance(cfg(ProblemKind.PCTSP, n=20), rng)
            assert sum(n.prize or 0 for n in inst.nodes) >= 1.0

    def test_k_scale_at_50(self):
        c = cfg(ProblemKind.PCTSP, n=50)
        assert c.effective_k == 3.0
        rng = np.random.default_rng(4)
        inst = gen_pctsp_instance(c, rng)
        for node in inst.nodes[1:]:
            assert node.penalty <= 3 * 3 / 50


class TestPctsptwGen:
    def test_both_feature_sets_present(self):
        rng = np.random.default_rng(5)
        inst = gen_pctsptw_instance(cfg(ProblemKind.PCTSPTW, n=10), rng)
        for node in inst.nodes[1:]:
            assert node.time_window is not None
            assert node.prize is not None and node.penalty is not None

    def test_t_max_50_at_n50(self):
        assert cfg(ProblemKind.PCTSPTW, n=50).effective_t_max == 50.0
        assert cfg(ProblemKind.PCTSPTW, n=20).effective_t_max == 10.0


class TestCvrpGen:
    def test_demands_and_capacity(self):
        rng = np.random.default_rng(6)
        c = cfg(ProblemKind.CVRP, n=20)
        inst = gen_cvrp_instance(c, rng)
        assert inst.capacity == 20
        for node in inst.nodes[1:]:
            assert 1 <= node.demand <= 9
        assert sum(n.demand or 0 for n in inst.nodes) > 20  # multi-segment forced

    def test_capacity_40_at_n50(self):
        assert cfg(ProblemKind.CVRP, n=50).capacity == 40


class TestActualDataset:
    def test_exact_count_and_alignment(self):
        ds = gen_actual_route_dataset(cfg(ProblemKind.TSPTW, n=7, samples=6))
        assert len(ds.samples) == 6
        for s in ds.samples:
            assert len(s.labels) == len(s.route.edges)
            ok, _ = is_feasible(s.instance, s.route)
            assert ok

    def test_deterministic(self):
        c = cfg(ProblemKind.TSPTW, n=6, samples=3)
        a = gen_actual_route_dataset(c)
        b = gen_actual_route_dataset(c)
        assert [s.route.order for s in a.samples] == [s.route.order for s in b.samples]
        assert [[l.class_id for l in s.labels] for s in a.samples] == \
               [[l.class_id for l in s.labels] for s in b.samples]

    def test_split_fractions(self):
        ds = gen_actual_route_dataset(cfg(ProblemKind.TSPTW, n=6, samples=10))
        train, val, test = ds.split((0.8, 0.1, 0.1))
        assert len(train) == 8 and len(val) == 1 and len(test) == 1


class TestCfDataset:
    def test_contract(self):
        c = cfg(ProblemKind.TSPTW, n=7, samples=8)
        actual = gen_actual_route_dataset(c)
        cf = gen_cf_route_dataset(actual, c)
        by_id = {s.sample_id: s for s in actual.samples}
        assert len(cf.samples) > 0
        for s in cf.samples:
            a = by_id[s.sample_id]
            t = s.t_ex
            assert s.route.edges[:t - 1] == a.route.edges[:t - 1]
            assert s.route.edges[t - 1] == s.cf_edge
            assert s.cf_edge != a.route.edges[t - 1]
            assert len(s.labels) == len(s.route.edges)

    def test_no_alternative_skipped(self):
        # 2-node instance has no CF alternative anywhere
        rng = np.random.default_rng(9)
        from routecf.core import Node, VrpInstance
        from routecf.solver import solve
        inst = VrpInstance(kind=ProblemKind.TSP, nodes=(
            Node(index=0, coords=(0, 0)), Node(index=1, coords=(1, 0))))
        r = solve(inst, config=SolverConfig())
        assert sample_cf_question(r, rng, inst.n_nodes) is None


class TestJsonl:
    def test_round_trip(self, tmp_path):
        ds = gen_actual_route_dataset(cfg(ProblemKind.TSPTW, n=6, samples=3))
        path = tmp_path / "d.jsonl"
        save_jsonl(ds.samples, path)
        rows = load_jsonl(path)
        assert len(rows) == 3
        assert rows[0]["labels"] == [l.class_id for l in ds.samples[0].labels]
        assert rows[0]["route"]["order"] == list(ds.samples[0].route.order)
