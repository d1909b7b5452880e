"""Rule-based edge intention labeling.

Every edge of a route is labeled by re-solving simplified problems with the
preceding edges fixed and checking whether the simplified route takes the
same edge at that step. The first matching simplified problem (in plan order)
names the intention; no match falls through to the last class.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .core import (
    EdgeIntention,
    Node,
    ProblemKind,
    Route,
    VrpError,
    VrpInstance,
)
from .solver import FixedPrefix, SolverConfig, solve

log = logging.getLogger(__name__)

CLASS_ROUTE_LENGTH = "route_length"
CLASS_TIME_WINDOW = "time_window"
CLASS_PRIZE_PENALTY = "prize_penalty"
CLASS_CAPACITY = "capacity"


@dataclass(frozen=True)
class ComparisonPlan:
    primary_kind: ProblemKind
    compared_kinds: tuple[ProblemKind, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.compared_kinds) != len(self.class_names) - 1:
            raise VrpError("plan needs exactly C-1 compared kinds")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


BUILTIN_PLANS: dict[ProblemKind, ComparisonPlan] = {
    ProblemKind.TSPTW: ComparisonPlan(
        ProblemKind.TSPTW, (ProblemKind.TSP,),
        (CLASS_ROUTE_LENGTH, CLASS_TIME_WINDOW)),
    ProblemKind.PCTSP: ComparisonPlan(
        ProblemKind.PCTSP, (ProblemKind.TSP,),
        (CLASS_ROUTE_LENGTH, CLASS_PRIZE_PENALTY)),
    ProblemKind.PCTSPTW: ComparisonPlan(
        ProblemKind.PCTSPTW, (ProblemKind.TSP, ProblemKind.TSPTW),
        (CLASS_ROUTE_LENGTH, CLASS_TIME_WINDOW, CLASS_PRIZE_PENALTY)),
    ProblemKind.CVRP: ComparisonPlan(
        ProblemKind.CVRP, (ProblemKind.TSP,),
        (CLASS_ROUTE_LENGTH, CLASS_CAPACITY)),
}


def plan_for(kind: ProblemKind) -> ComparisonPlan:
    try:
        return BUILTIN_PLANS[kind]
    except KeyError:
        raise VrpError(f"no built-in comparison plan for {kind.value}")


def strip_instance(instance: VrpInstance, target_kind: ProblemKind) -> VrpInstance:
    """Derive a simplified-problem instance by dropping the fields the target
    kind ignores. Coordinates and the distance matrix are never resampled."""
    keep_tw = target_kind.has_time_windows
    keep_prize = target_kind.has_prizes
    keep_cap = target_kind.has_capacity
    nodes = tuple(
        Node(
            index=n.index,
            coords=n.coords,
            time_window=n.time_window if keep_tw else None,
            prize=n.prize if keep_prize else None,
            penalty=n.penalty if keep_prize else None,
            demand=n.demand if keep_cap else None,
            stay_duration=n.stay_duration if keep_tw else None,
            label=n.label,
            remarks=n.remarks,
        )
        for n in instance.nodes
    )
    return VrpInstance(
        kind=target_kind,
        nodes=nodes,
        capacity=instance.capacity if keep_cap else None,
        min_total_prize=instance.min_total_prize if keep_prize else None,
        distance=instance.distance,
    )


SolveFn = Callable[[VrpInstance, ProblemKind, FixedPrefix], Route]


def make_solver(config: SolverConfig) -> SolveFn:
    def fn(instance, kind, prefix):
        return solve(instance, kind, prefix, config)
    return fn


def annotate_route(route: Route, instance: VrpInstance, solver: SolveFn,
                   plan: Optional[ComparisonPlan] = None) -> list[EdgeIntention]:
    """Label each edge by comparing against simplified-problem re-solves.

    Edge equality is ordered-pair equality of (tail, head). Solver failures on
    a compared problem fall through to the last class with a warning.
    """
    plan = plan or plan_for(instance.kind)
    compared = [(c, strip_instance(instance, k))
                for c, k in enumerate(plan.compared_kinds)]
    labels: list[EdgeIntention] = []
    fallback = plan.n_classes - 1
    for t, edge in enumerate(route.edges):
        prefix = FixedPrefix(route.edges[:t])
        label = fallback
        for c, sub in compared:
            try:
                other = solver(sub, sub.kind, prefix)
            except VrpError as exc:
                log.warning("compared solve failed at step %d (%s): %s",
                            t, sub.kind.value, exc)
                continue
            if len(other.edges) > t and other.edges[t] == edge:
                label = c
                break
        labels.append(EdgeIntention(class_id=label, class_name=plan.class_names[label]))
    return labels


def annotate_dataset(samples: Sequence[tuple[VrpInstance, Route]],
                     solver: SolveFn,
                     plan: Optional[ComparisonPlan] = None,
                     on_error: str = "skip"):
    """Annotate (instance, route) pairs; returns (labeled samples, stats).

    stats["step_class_counts"][t] is a Counter of class ids at step t, for
    step-wise imbalance reports.
    """
    labeled = []
    step_counts: dict[int, Counter] = {}
    for i, (instance, route) in enumerate(samples):
        try:
            labels = annotate_route(route, instance, solver, plan)
        except VrpError as exc:
            if on_error != "skip":
                raise
            log.warning("sample %d skipped: %s", i, exc)
            continue
        labeled.append((instance, route, labels))
        for t, lab in enumerate(labels):
            step_counts.setdefault(t, Counter())[lab.class_id] += 1
    stats = {"n_samples": len(labeled), "step_class_counts": step_counts}
    return labeled, stats
