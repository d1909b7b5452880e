"""Problem definitions, instances, routes and state propagation.

Covers five routing variants (TSP, TSPTW, PCTSP, PCTSPTW, CVRP) with a single
instance/route representation. State propagation follows the edge-influence
view of a route: traversing an edge updates a per-kind global state (route
length, travel clock, collected prize/penalty, remaining capacity).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

DEPOT = 0

# JSON-safe stand-in for an unbounded depot closing time.
HORIZON = 1e9


class ProblemKind(str, enum.Enum):
    TSP = "tsp"
    TSPTW = "tsptw"
    PCTSP = "pctsp"
    PCTSPTW = "pctsptw"
    CVRP = "cvrp"

    @property
    def has_time_windows(self) -> bool:
        return self in (ProblemKind.TSPTW, ProblemKind.PCTSPTW)

    @property
    def has_prizes(self) -> bool:
        return self in (ProblemKind.PCTSP, ProblemKind.PCTSPTW)

    @property
    def has_capacity(self) -> bool:
        return self is ProblemKind.CVRP

    @property
    def optional_visits(self) -> bool:
        """Whether skipping nodes is legal (prize-collecting variants)."""
        return self.has_prizes


class VrpError(ValueError):
    """Invalid instance, route, or operation argument."""


@dataclass(frozen=True)
class Node:
    index: int
    coords: tuple[float, float]
    time_window: Optional[tuple[float, float]] = None
    prize: Optional[float] = None
    penalty: Optional[float] = None
    demand: Optional[int] = None
    stay_duration: Optional[float] = None
    label: Optional[str] = None
    remarks: Optional[str] = None

    def __post_init__(self):
        if self.time_window is not None:
            e, l = self.time_window
            if e > l:
                raise VrpError(f"node {self.index}: earliest {e} > latest {l}")
        for name in ("prize", "penalty", "stay_duration"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise VrpError(f"node {self.index}: negative {name}")
        if self.demand is not None and self.demand < 0:
            raise VrpError(f"node {self.index}: negative demand")


@dataclass(frozen=True)
class VrpInstance:
    kind: ProblemKind
    nodes: tuple[Node, ...]
    capacity: Optional[int] = None
    min_total_prize: Optional[float] = None
    distance: object = "euclidean"  # "euclidean" or an N x N matrix

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 2:
            raise VrpError("instance needs at least 2 nodes")
        for i, n in enumerate(self.nodes):
            if n.index != i:
                raise VrpError(f"node at position {i} has index {n.index}")
        if self.kind.has_capacity and (self.capacity is None or self.capacity <= 0):
            raise VrpError("CVRP requires a positive capacity")
        if self.kind.has_prizes and (self.min_total_prize is None or self.min_total_prize <= 0):
            raise VrpError(f"{self.kind.value} requires min_total_prize > 0")
        if self.kind.has_time_windows:
            for n in self.nodes[1:]:
                if n.time_window is None:
                    raise VrpError(f"{self.kind.value}: node {n.index} lacks a time window")
        if not isinstance(self.distance, str):
            m = np.asarray(self.distance, dtype=float)
            if m.shape != (len(self.nodes), len(self.nodes)):
                raise VrpError("distance matrix shape mismatch")
            if np.any(np.diag(m) != 0.0):
                raise VrpError("distance matrix diagonal must be zero")
            if np.any(m < 0):
                raise VrpError("distance matrix must be non-negative")
            object.__setattr__(self, "distance", tuple(map(tuple, m.tolist())))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        if isinstance(self.distance, str):
            xy = np.array([n.coords for n in self.nodes], dtype=float)
            diff = xy[:, None, :] - xy[None, :, :]
            return np.sqrt((diff * diff).sum(axis=-1))
        return np.asarray(self.distance, dtype=float)

    def time_window_of(self, i: int) -> tuple[float, float]:
        tw = self.nodes[i].time_window
        if tw is None:
            return (0.0, HORIZON)
        return tw

    def stay_of(self, i: int) -> float:
        return self.nodes[i].stay_duration or 0.0

    def total_prize(self) -> float:
        return sum(n.prize or 0.0 for n in self.nodes)

    def total_penalty(self) -> float:
        return sum(n.penalty or 0.0 for n in self.nodes)


def distance(instance: VrpInstance, i: int, j: int) -> float:
    """Distance between nodes i and j (matrix lookup or Euclidean)."""
    n = instance.n_nodes
    if not (0 <= i < n and 0 <= j < n):
        raise VrpError(f"node index out of range: ({i}, {j})")
    return float(instance.distance_matrix[i, j])


@dataclass(frozen=True)
class GlobalState:
    """Accumulated quantities upon arrival at a node.

    Only the components relevant to the instance kind are populated;
    irrelevant components are None.
    """

    route_length: float = 0.0
    travel_time: Optional[float] = None
    accumulated_prize: Optional[float] = None
    accumulated_penalty_avoided: Optional[float] = None
    remaining_capacity: Optional[int] = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def initial_state(instance: VrpInstance) -> GlobalState:
    kind = instance.kind
    return GlobalState(
        route_length=0.0,
        travel_time=0.0 if kind.has_time_windows else None,
        accumulated_prize=0.0 if kind.has_prizes else None,
        accumulated_penalty_avoided=0.0 if kind.has_prizes else None,
        remaining_capacity=instance.capacity if kind.has_capacity else None,
    )


def step_state(instance: VrpInstance, state: GlobalState, frm: int, to: int) -> GlobalState:
    """Propagate the global state over the edge (frm, to).

    Travel clock semantics: depart `frm` after its stay duration, then travel;
    arriving before the window opens waits until the opening time.
    """
    d = distance(instance, frm, to)
    kind = instance.kind
    new = {"route_length": state.route_length + d}
    if kind.has_time_windows:
        arrival = state.travel_time + instance.stay_of(frm) + d
        earliest, _ = instance.time_window_of(to)
        new["travel_time"] = max(arrival, earliest)
    if kind.has_prizes:
        prize = state.accumulated_prize
        pen = state.accumulated_penalty_avoided
        if to != DEPOT:
            prize += instance.nodes[to].prize or 0.0
            pen += instance.nodes[to].penalty or 0.0
        new["accumulated_prize"] = prize
        new["accumulated_penalty_avoided"] = pen
    if kind.has_capacity:
        if to == DEPOT:
            new["remaining_capacity"] = instance.capacity
        else:
            new["remaining_capacity"] = state.remaining_capacity - (instance.nodes[to].demand or 0)
    return GlobalState(**new)


def step_violations(instance: VrpInstance, state: GlobalState, frm: int, to: int) -> list[str]:
    """Constraint violations triggered by traversing (frm, to) from `state`."""
    out = []
    kind = instance.kind
    if kind.has_time_windows:
        d = distance(instance, frm, to)
        arrival = state.travel_time + instance.stay_of(frm) + d
        _, latest = instance.time_window_of(to)
        if arrival > latest:
            out.append("time_window")
    if kind.has_capacity and to != DEPOT:
        if state.remaining_capacity - (instance.nodes[to].demand or 0) < 0:
            out.append("capacity")
    return out


@dataclass(frozen=True)
class Violation:
    step: int  # edge index (0-based); -1 for route-level violations
    code: str
    node: Optional[int] = None

    def as_dict(self) -> dict:
        return {"step": self.step, "code": self.code, "node": self.node}


@dataclass(frozen=True)
class Route:
    """A visiting order plus the derived state trajectory.

    states[k] is the global state upon arrival at order[k]; states[0] is the
    departure state (zero accumulators / full capacity). skipped lists nodes a
    best-effort solver could not serve.
    """

    order: tuple[int, ...]
    states: tuple[GlobalState, ...]
    violations: tuple[Violation, ...] = ()
    skipped: tuple[int, ...] = ()

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.order[:-1], self.order[1:]))

    @property
    def visited_set(self) -> frozenset[int]:
        return frozenset(self.order)

    @property
    def route_length(self) -> float:
        return self.states[-1].route_length

    def as_dict(self) -> dict:
        return {
            "order": list(self.order),
            "states": [s.as_dict() for s in self.states],
            "violations": [v.as_dict() for v in self.violations],
            "skipped": list(self.skipped),
        }


@dataclass(frozen=True)
class EdgeIntention:
    class_id: int
    class_name: str

    def as_dict(self) -> dict:
        return {"class_id": self.class_id, "class_name": self.class_name}


def evaluate_route(instance: VrpInstance, order: Sequence[int],
                   skipped: Sequence[int] = ()) -> Route:
    """Materialize the state trajectory of a visiting order, flagging per-step
    constraint violations."""
    order = tuple(order)
    if not order:
        raise VrpError("empty order")
    if order[0] != DEPOT:
        raise VrpError("route must start at the depot")
    n = instance.n_nodes
    seen: set[int] = set()
    for pos, idx in enumerate(order):
        if not (0 <= idx < n):
            raise VrpError(f"node index out of range: {idx}")
        if idx == DEPOT:
            if not instance.kind.has_capacity and 0 < pos < len(order) - 1:
                raise VrpError("interior depot visit only allowed for CVRP")
            continue
        if idx in seen:
            raise VrpError(f"node {idx} visited twice")
        seen.add(idx)

    states = [initial_state(instance)]
    violations: list[Violation] = []
    for t, (a, b) in enumerate(zip(order[:-1], order[1:])):
        for code in step_violations(instance, states[-1], a, b):
            violations.append(Violation(step=t, code=code, node=b))
        states.append(step_state(instance, states[-1], a, b))
    for idx in skipped:
        violations.append(Violation(step=-1, code="skipped", node=idx))
    return Route(order=order, states=tuple(states),
                 violations=tuple(violations), skipped=tuple(skipped))


def unvisited_penalty(instance: VrpInstance, route: Route) -> float:
    if not instance.kind.has_prizes:
        return 0.0
    return sum(n.penalty or 0.0 for n in instance.nodes
               if n.index != DEPOT and n.index not in route.visited_set)


def objective(instance: VrpInstance, route: Route, kind: Optional[ProblemKind] = None) -> float:
    """Scalar objective of an (already evaluated) route.

    Time-window kinds score accumulated travel time (waits and stays
    included); prize-collecting kinds add penalties of unvisited nodes.
    Infeasible routes still score; feasibility is reported separately.
    """
    kind = kind or instance.kind
    final = route.states[-1]
    if kind.has_time_windows:
        base = final.travel_time
    else:
        base = final.route_length
    if kind.has_prizes:
        base += unvisited_penalty(instance, route)
    return float(base)


def required_nodes(instance: VrpInstance, kind: Optional[ProblemKind] = None) -> frozenset[int]:
    """Non-depot nodes a feasible route must visit (empty requirement for
    prize-collecting kinds, where the visit subset is free)."""
    kind = kind or instance.kind
    if kind.optional_visits:
        return frozenset()
    return frozenset(range(1, instance.n_nodes))


def is_feasible(instance: VrpInstance, route: Route,
                kind: Optional[ProblemKind] = None) -> tuple[bool, list[str]]:
    """Check all kind-specific constraints; returns (ok, violation codes)."""
    kind = kind or instance.kind
    codes: list[str] = []
    if any(v.code == "time_window" for v in route.violations):
        codes.append("time_window")
    if any(v.code == "capacity" for v in route.violations):
        codes.append("capacity")
    if route.order[-1] != DEPOT:
        codes.append("open_route")
    missing = required_nodes(instance, kind) - route.visited_set
    if missing:
        codes.append("unvisited")
    if kind.has_prizes and instance.min_total_prize is not None:
        if route.states[-1].accumulated_prize < instance.min_total_prize - 1e-12:
            codes.append("min_prize")
    return (not codes, codes)


# ---------------------------------------------------------------------------
# JSON schema (version 1)

SCHEMA_VERSION = 1


def instance_to_dict(instance: VrpInstance) -> dict:
    nodes = []
    for n in instance.nodes:
        d: dict = {"coords": list(n.coords)}
        if n.time_window is not None:
            d["time_window"] = list(n.time_window)
        for key in ("prize", "penalty", "demand", "stay_duration", "label", "remarks"):
            v = getattr(n, key)
            if v is not None:
                d[key] = v
        nodes.append(d)
    out = {"version": SCHEMA_VERSION, "kind": instance.kind.value, "nodes": nodes}
    if instance.capacity is not None:
        out["capacity"] = instance.capacity
    if instance.min_total_prize is not None:
        out["min_total_prize"] = instance.min_total_prize
    if not isinstance(instance.distance, str):
        out["distance_matrix"] = [list(row) for row in instance.distance]
    return out


def instance_from_dict(data: dict) -> VrpInstance:
    try:
        kind = ProblemKind(data["kind"].lower())
    except (KeyError, ValueError) as exc:
        raise VrpError(f"bad or missing kind: {data.get('kind')!r}") from exc
    nodes = []
    for i, nd in enumerate(data.get("nodes", [])):
        if "coords" not in nd or len(nd["coords"]) != 2:
            raise VrpError(f"node {i}: coords must be a pair")
        nodes.append(Node(
            index=i,
            coords=tuple(float(c) for c in nd["coords"]),
            time_window=tuple(nd["time_window"]) if nd.get("time_window") is not None else None,
            prize=nd.get("prize"),
            penalty=nd.get("penalty"),
            demand=nd.get("demand"),
            stay_duration=nd.get("stay_duration"),
            label=nd.get("label"),
            remarks=nd.get("remarks"),
        ))
    return VrpInstance(
        kind=kind,
        nodes=tuple(nodes),
        capacity=data.get("capacity"),
        min_total_prize=data.get("min_total_prize"),
        distance=data.get("distance_matrix", "euclidean"),
    )


def route_from_dict(instance: VrpInstance, data: dict) -> Route:
    return evaluate_route(instance, data["order"], skipped=data.get("skipped", ()))
