"""Feature extraction for the edge classifier.

Per-kind node features and per-step state vectors, scaled to roughly [0, 1]:
coordinates are already unit-square, times are divided by the instance's
largest closing time, prizes/penalties by their instance totals, demand and
capacity by the capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import core
from ..core import GlobalState, ProblemKind, Route, VrpError, VrpInstance

NODE_FEATURE_DIM = {
    ProblemKind.TSPTW: 4,    # x, y, open, close
    ProblemKind.PCTSP: 4,    # x, y, prize, penalty
    ProblemKind.PCTSPTW: 6,  # x, y, prize, penalty, open, close
    ProblemKind.CVRP: 3,     # x, y, demand
}

DEPOT_FEATURE_DIM = {
    ProblemKind.TSPTW: 4,    # x, y, open, close
    ProblemKind.PCTSP: 2,
    ProblemKind.PCTSPTW: 4,
    ProblemKind.CVRP: 2,
}

STATE_DIM = {
    ProblemKind.TSPTW: 1,    # travel time
    ProblemKind.PCTSP: 2,    # prize, penalty avoided
    ProblemKind.PCTSPTW: 3,  # prize, penalty avoided, travel time
    ProblemKind.CVRP: 1,     # remaining capacity
}


@dataclass(frozen=True)
class FeatureScales:
    time: float = 1.0
    prize: float = 1.0
    penalty: float = 1.0
    capacity: float = 1.0


def feature_scales(instance: VrpInstance) -> FeatureScales:
    kind = instance.kind
    time = 1.0
    if kind.has_time_windows:
        closes = [n.time_window[1] for n in instance.nodes[1:]]
        time = max(max(closes), 1e-9)
    prize = max(instance.total_prize(), 1e-9) if kind.has_prizes else 1.0
    penalty = max(instance.total_penalty(), 1e-9) if kind.has_prizes else 1.0
    cap = float(instance.capacity) if kind.has_capacity else 1.0
    return FeatureScales(time=time, prize=prize, penalty=penalty, capacity=cap)


def node_features(instance: VrpInstance) -> tuple[np.ndarray, np.ndarray]:
    """Returns (depot_features (D',), node_features (N-1, D))."""
    kind = instance.kind
    if kind not in NODE_FEATURE_DIM:
        raise VrpError(f"unsupported kind for the classifier: {kind.value}")
    sc = feature_scales(instance)

    def tw(node):
        e, l = instance.time_window_of(node.index)
        # the depot sentinel close is unbounded; clamp to the scale
        return [e / sc.time, min(l, sc.time) / sc.time]

    rows = []
    for n in instance.nodes[1:]:
        row = [n.coords[0], n.coords[1]]
        if kind.has_prizes:
            row += [(n.prize or 0.0) / sc.prize, (n.penalty or 0.0) / sc.penalty]
        if kind.has_time_windows:
            row += tw(n)
        if kind.has_capacity:
            row += [(n.demand or 0) / sc.capacity]
        rows.append(row)
    depot = instance.nodes[0]
    drow = [depot.coords[0], depot.coords[1]]
    if kind.has_time_windows:
        drow += tw(depot)
    return (np.asarray(drow, dtype=np.float64),
            np.asarray(rows, dtype=np.float64))


def state_vector(instance: VrpInstance, state: GlobalState,
                 scales: FeatureScales | None = None) -> np.ndarray:
    kind = instance.kind
    sc = scales or feature_scales(instance)
    if kind is ProblemKind.TSPTW:
        vals = [state.travel_time / sc.time]
    elif kind is ProblemKind.PCTSP:
        vals = [state.accumulated_prize / sc.prize,
                state.accumulated_penalty_avoided / sc.penalty]
    elif kind is ProblemKind.PCTSPTW:
        vals = [state.accumulated_prize / sc.prize,
                state.accumulated_penalty_avoided / sc.penalty,
                state.travel_time / sc.time]
    elif kind is ProblemKind.CVRP:
        vals = [state.remaining_capacity / sc.capacity]
    else:
        raise VrpError(f"unsupported kind for the classifier: {kind.value}")
    return np.asarray(vals, dtype=np.float64)


@dataclass(frozen=True)
class EncodedSample:
    """Arrays ready for the model: one route over one instance."""

    depot_features: np.ndarray   # (D',)
    node_features: np.ndarray    # (N-1, D)
    order: np.ndarray            # (T,) int
    states: np.ndarray           # (T-1, D_st), state on arrival at the edge tail
    labels: np.ndarray | None    # (T-1,) int or None at inference


def featurize(instance: VrpInstance, route: Route, labels=None) -> EncodedSample:
    depot, nodes = node_features(instance)
    sc = feature_scales(instance)
    states = np.stack([state_vector(instance, route.states[t], sc)
                       for t in range(len(route.edges))])
    lab = None
    if labels is not None:
        lab = np.asarray([getattr(l, "class_id", l) for l in labels], dtype=np.int64)
        if len(lab) != len(route.edges):
            raise VrpError("label array does not align with route edges")
    return EncodedSample(
        depot_features=depot,
        node_features=nodes,
        order=np.asarray(route.order, dtype=np.int64),
        states=states,
        labels=lab,
    )
