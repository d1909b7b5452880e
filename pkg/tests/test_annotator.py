import numpy as np
import pytest

from routecf.annotator import (
    BUILTIN_PLANS,
    ComparisonPlan,
    annotate_dataset,
    annotate_route,
    make_solver,
    plan_for,
    strip_instance,
)
from routecf.core import HORIZON, Node, ProblemKind, VrpInstance, evaluate_route
from routecf.solver import SolverConfig, solve

from conftest import make_nodes
from test_solver import random_tsptw

EXACT = make_solver(SolverConfig(engine="exact"))
HEUR = make_solver(SolverConfig(engine="heuristic"))


def loose_tsptw(coords):
    """TSPTW whose windows never bind: optimal route matches the TSP route."""
    nodes = make_nodes(coords, time_window=[(0.0, HORIZON)] * len(coords))
    return VrpInstance(kind=ProblemKind.TSPTW, nodes=nodes)


class TestPlans:
    def test_builtin_class_counts(self):
        assert plan_for(ProblemKind.TSPTW).n_classes == 2
        assert plan_for(ProblemKind.PCTSP).n_classes == 2
        assert plan_for(ProblemKind.CVRP).n_classes == 2
        assert plan_for(ProblemKind.PCTSPTW).n_classes == 3

    def test_strip_drops_fields(self):
        nodes = make_nodes([(0, 0), (1, 0)], time_window=[(0, HORIZON), (1, 5)],
                           prize=[None, 0.5], penalty=[None, 0.2])
        inst = VrpInstance(kind=ProblemKind.PCTSPTW, nodes=nodes, min_total_prize=0.4)
        tsp = strip_instance(inst, ProblemKind.TSP)
        assert tsp.kind is ProblemKind.TSP
        assert all(n.time_window is None and n.prize is None for n in tsp.nodes)
        tw = strip_instance(inst, ProblemKind.TSPTW)
        assert tw.nodes[1].time_window == (1, 5)
        assert tw.nodes[1].prize is None and tw.min_total_prize is None


class TestAnnotateRoute:
    def test_identical_routes_all_zero(self):
        coords = [(0, 0), (1, 0), (1, 1), (0, 1)]
        inst = loose_tsptw(coords)
        route = solve(inst, config=SolverConfig(engine="exact"))
        labels = annotate_route(route, inst, EXACT)
        assert [l.class_id for l in labels] == [0] * len(route.edges)

    def test_tight_window_forces_detour_label(self):
        # TSP-optimal sweeps the near cluster first, but the far node closes
        # at exactly its direct travel time, so it must be rushed first.
        coords = [(0, 0), (0.1, 0.3), (0.2, 0.3), (1, 0)]
        windows = [(0, HORIZON), (0, HORIZON), (0, HORIZON), (0, 1.0)]
        nodes = make_nodes(coords, time_window=windows)
        inst = VrpInstance(kind=ProblemKind.TSPTW, nodes=nodes)
        route = solve(inst, config=SolverConfig(engine="exact"))
        labels = annotate_route(route, inst, EXACT)
        assert route.order[1] == 3  # must rush to the closing node
        assert labels[0].class_name == "time_window"

    def test_degenerate_self_plan_all_zero(self):
        rng = np.random.default_rng(3)
        inst = random_tsptw(6, rng)
        route = solve(inst, config=SolverConfig(engine="exact"))
        self_plan = ComparisonPlan(ProblemKind.TSPTW, (ProblemKind.TSPTW,),
                                   ("route_length", "time_window"))
        labels = annotate_route(route, inst, EXACT, self_plan)
        assert all(l.class_id == 0 for l in labels)

    def test_label_domain(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            inst = random_tsptw(6, rng)
            route = solve(inst, config=SolverConfig())
            labels = annotate_route(route, inst, HEUR)
            assert all(0 <= l.class_id < 2 for l in labels)
            assert len(labels) == len(route.edges)

    def test_exact_annotation_repeatable(self):
        rng = np.random.default_rng(21)
        inst = random_tsptw(6, rng)
        route = solve(inst, config=SolverConfig(engine="exact"))
        a = annotate_route(route, inst, EXACT)
        b = annotate_route(route, inst, EXACT)
        assert a == b


class TestAnnotateDataset:
    def test_empty_dataset(self):
        labeled, stats = annotate_dataset([], EXACT)
        assert labeled == [] and stats["n_samples"] == 0

    def test_counting_identity(self):
        rng = np.random.default_rng(9)
        samples = []
        for _ in range(10):
            inst = random_tsptw(6, rng)
            samples.append((inst, solve(inst, config=SolverConfig())))
        labeled, stats = annotate_dataset(samples, HEUR)
        for t, counter in stats["step_class_counts"].items():
            reaching = sum(1 for _, route, _ in labeled if len(route.edges) > t)
            assert sum(counter.values()) == reaching

    def test_early_step_time_window_majority(self):
        # step-wise imbalance: time_window dominates early steps more than late
        rng = np.random.default_rng(1234)
        samples = []
        for _ in range(60):
            inst = random_tsptw(8, rng)
            samples.append((inst, solve(inst, config=SolverConfig())))
        _, stats = annotate_dataset(samples, HEUR)
        counts = stats["step_class_counts"]
        def tw_frac(t):
            c = counts[t]
            return c[1] / max(sum(c.values()), 1)
        early = np.mean([tw_frac(t) for t in (0, 1, 2)])
        late = np.mean([tw_frac(t) for t in sorted(counts)[-3:]])
        assert early > late
