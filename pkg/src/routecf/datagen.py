"""Synthetic instance, route and label generation.

Instances follow the published sampling recipes for each problem family:
TSPTW windows are drawn around the arrival times of a random generating tour
(so a feasible tour exists by construction), PCTSP prizes/penalties scale
with 1/N, CVRP demands are uniform integers with an N-dependent capacity.
Counterfactual-route datasets resample one edge of each actual route and
re-solve with the prefix fixed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .annotator import ComparisonPlan, annotate_route, make_solver, plan_for
from .core import (
    DEPOT,
    HORIZON,
    EdgeIntention,
    Node,
    ProblemKind,
    Route,
    VrpInstance,
    evaluate_route,
    instance_from_dict,
    instance_to_dict,
    is_feasible,
)
from .solver import FixedPrefix, SolverConfig, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenConfig:
    kind: ProblemKind
    n_nodes: int = 20
    n_samples: int = 100
    t_max: Optional[float] = None  # default 10; 50 for PCTSPTW at N=50
    penalty_scale_k: Optional[float] = None  # default 2 for N=20, 3 for N=50
    rng_seed: int = 1234
    solver: SolverConfig = field(default_factory=SolverConfig)
    annotation_solver: Optional[SolverConfig] = None
    split: tuple[float, float, float] = (0.9, 0.05, 0.05)

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be >= 2")

    @property
    def effective_t_max(self) -> float:
        if self.t_max is not None:
            return self.t_max
        if self.kind is ProblemKind.PCTSPTW and self.n_nodes >= 50:
            return 50.0
        return 10.0

    @property
    def effective_k(self) -> float:
        if self.penalty_scale_k is not None:
            return self.penalty_scale_k
        return 3.0 if self.n_nodes >= 50 else 2.0

    @property
    def capacity(self) -> int:
        return 40 if self.n_nodes >= 50 else 20


def _tw_fields(config: GenConfig, coords: np.ndarray, rng: np.random.Generator):
    """Windows sampled around arrival times of a random generating tour."""
    n = config.n_nodes
    t_max = config.effective_t_max
    perm = [0] + [int(x) for x in rng.permutation(np.arange(1, n))]
    arrivals = {DEPOT: 0.0}
    t = 0.0
    for a, b in zip(perm[:-1], perm[1:]):
        t += float(np.linalg.norm(coords[a] - coords[b]))
        arrivals[b] = t
    windows: list[tuple[float, float]] = [(0.0, HORIZON)]
    for i in range(1, n):
        ta = arrivals[i]
        e = float(rng.uniform(max(0.0, ta - t_max / 2), ta))
        l = float(rng.uniform(ta, ta + t_max / 2))
        windows.append((e, l))
    return windows


def _prize_fields(config: GenConfig, rng: np.random.Generator):
    n = config.n_nodes
    k = config.effective_k
    prizes = [None] + [float(rng.uniform(0, 4 / n)) for _ in range(n - 1)]
    penalties = [None] + [float(rng.uniform(0, 3 * k / n)) for _ in range(n - 1)]
    return prizes, penalties


def gen_tsptw_instance(config: GenConfig, rng: np.random.Generator) -> VrpInstance:
    coords = rng.random((config.n_nodes, 2))
    windows = _tw_fields(config, coords, rng)
    nodes = tuple(Node(index=i, coords=tuple(coords[i].tolist()),
                       time_window=windows[i])
                  for i in range(config.n_nodes))
    return VrpInstance(kind=ProblemKind.TSPTW, nodes=nodes)


def gen_pctsp_instance(config: GenConfig, rng: np.random.Generator) -> VrpInstance:
    while True:
        coords = rng.random((config.n_nodes, 2))
        prizes, penalties = _prize_fields(config, rng)
        if sum(p or 0.0 for p in prizes) < 1.0:
            continue  # min prize unreachable; resample (rare: expected total is 2)
        nodes = tuple(Node(index=i, coords=tuple(coords[i].tolist()),
                           prize=prizes[i], penalty=penalties[i])
                      for i in range(config.n_nodes))
        return VrpInstance(kind=ProblemKind.PCTSP, nodes=nodes, min_total_prize=1.0)


def gen_pctsptw_instance(config: GenConfig, rng: np.random.Generator) -> VrpInstance:
    while True:
        coords = rng.random((config.n_nodes, 2))
        windows = _tw_fields(config, coords, rng)
        prizes, penalties = _prize_fields(config, rng)
        if sum(p or 0.0 for p in prizes) < 1.0:
            continue
        nodes = tuple(Node(index=i, coords=tuple(coords[i].tolist()),
                           time_window=windows[i],
                           prize=prizes[i], penalty=penalties[i])
                      for i in range(config.n_nodes))
        return VrpInstance(kind=ProblemKind.PCTSPTW, nodes=nodes, min_total_prize=1.0)


def gen_cvrp_instance(config: GenConfig, rng: np.random.Generator) -> VrpInstance:
    coords = rng.random((config.n_nodes, 2))
    demands = [None] + [int(rng.integers(1, 10)) for _ in range(config.n_nodes - 1)]
    nodes = tuple(Node(index=i, coords=tuple(coords[i].tolist()), demand=demands[i])
                  for i in range(config.n_nodes))
    return VrpInstance(kind=ProblemKind.CVRP, nodes=nodes, capacity=config.capacity)


_GENERATORS = {
    ProblemKind.TSPTW: gen_tsptw_instance,
    ProblemKind.PCTSP: gen_pctsp_instance,
    ProblemKind.PCTSPTW: gen_pctsptw_instance,
    ProblemKind.CVRP: gen_cvrp_instance,
}


def gen_instance(config: GenConfig, rng: np.random.Generator) -> VrpInstance:
    try:
        gen = _GENERATORS[config.kind]
    except KeyError:
        raise ValueError(f"no generator for kind {config.kind.value}")
    return gen(config, rng)


@dataclass(frozen=True)
class Sample:
    sample_id: int
    instance: VrpInstance
    route: Route
    labels: tuple[EdgeIntention, ...]
    # set only for counterfactual samples
    t_ex: Optional[int] = None
    cf_edge: Optional[tuple[int, int]] = None

    def as_dict(self) -> dict:
        out = {
            "sample_id": self.sample_id,
            "instance": instance_to_dict(self.instance),
            "route": self.route.as_dict(),
            "labels": [l.class_id for l in self.labels],
            "class_names": sorted({l.class_name for l in self.labels}),
        }
        if self.t_ex is not None:
            out["t_ex"] = self.t_ex
            out["cf_edge"] = list(self.cf_edge)
        return out


@dataclass(frozen=True)
class Dataset:
    kind: ProblemKind
    plan: ComparisonPlan
    samples: tuple[Sample, ...]

    def split(self, fractions: tuple[float, float, float]):
        n = len(self.samples)
        n_train = int(n * fractions[0])
        n_val = int(n * fractions[1])
        return (self.samples[:n_train],
                self.samples[n_train:n_train + n_val],
                self.samples[n_train + n_val:])


def gen_actual_route_dataset(config: GenConfig) -> Dataset:
    """Generate instances, solve each with the heuristic engine, annotate, and
    keep only feasible routes; resamples until n_samples are emitted."""
    plan = plan_for(config.kind)
    ann_cfg = config.annotation_solver or config.solver
    solver = make_solver(ann_cfg)
    samples: list[Sample] = []
    attempts = 0
    rng = np.random.default_rng(config.rng_seed)
    while len(samples) < config.n_samples:
        attempts += 1
        if attempts > 20 * config.n_samples + 100:
            raise RuntimeError("too many rejected instances; check generator config")
        instance = gen_instance(config, rng)
        route = solve(instance, config=config.solver)
        ok, codes = is_feasible(instance, route)
        if not ok:
            log.debug("instance rejected (%s); resampling", codes)
            continue
        labels = tuple(annotate_route(route, instance, solver, plan))
        samples.append(Sample(sample_id=len(samples), instance=instance,
                              route=route, labels=labels))
    return Dataset(kind=config.kind, plan=plan, samples=tuple(samples))


def sample_cf_question(route: Route, rng: np.random.Generator,
                       n_nodes: int) -> Optional[tuple[int, tuple[int, int]]]:
    """Uniformly draw (t_ex, cf_edge) from the valid alternatives of a route.

    t_ex is 1-based; cf heads are nodes not yet visited before the step.
    Returns None when no step has a feasible alternative."""
    candidates = []
    for t in range(1, len(route.edges) + 1):
        tail, head = route.edges[t - 1]
        before = set(route.order[:t])
        alts = [v for v in range(1, n_nodes)
                if v != head and v != tail and v not in before]
        for v in alts:
            candidates.append((t, (tail, v)))
    if not candidates:
        return None
    # uniform over steps first, then over alternatives at the step
    steps = sorted({t for t, _ in candidates})
    t = int(rng.choice(steps))
    alts = [e for tt, e in candidates if tt == t]
    return t, alts[int(rng.integers(len(alts)))]


def gen_cf_route_dataset(actual: Dataset, config: GenConfig) -> Dataset:
    """Counterfactual companion dataset: per actual sample, pick a CF edge
    uniformly, re-solve with the prefix fixed, annotate."""
    ann_cfg = config.annotation_solver or config.solver
    solver = make_solver(ann_cfg)
    rng = np.random.default_rng(config.rng_seed + 1)
    samples: list[Sample] = []
    for s in actual.samples:
        drawn = sample_cf_question(s.route, rng, s.instance.n_nodes)
        if drawn is None:
            log.warning("sample %d has no CF alternative; skipped", s.sample_id)
            continue
        t_ex, cf_edge = drawn
        prefix = FixedPrefix(s.route.edges[:t_ex - 1] + (cf_edge,))
        cf_route = solve(s.instance, prefix=prefix, config=config.solver)
        labels = tuple(annotate_route(cf_route, s.instance, solver, actual.plan))
        samples.append(Sample(sample_id=s.sample_id, instance=s.instance,
                              route=cf_route, labels=labels,
                              t_ex=t_ex, cf_edge=cf_edge))
    return Dataset(kind=actual.kind, plan=actual.plan, samples=tuple(samples))


def save_jsonl(samples, path):
    with open(path, "w") as fh:
        for s in samples:
            fh.write(json.dumps(s.as_dict()) + "\n")


def load_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
