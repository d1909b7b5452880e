"""Route generation honoring a fixed edge prefix.

Two engines share one contract: the returned route starts with exactly the
prefix edges and the remainder optimizes the requested kind's objective.
When hard constraints strand nodes, both engines fall back to best-effort
semantics: maximize the number of feasibly visited nodes first, then minimize
the objective (ties broken by lexicographically smallest order).

- heuristic: greedy nearest-feasible construction + 2-opt / or-opt local
  search (plus insert/remove moves for prize-collecting kinds).
- exact: exhaustive depth-first search with branch-and-bound pruning, capped
  at a configurable number of free nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    DEPOT,
    GlobalState,
    ProblemKind,
    Route,
    VrpError,
    VrpInstance,
    distance,
    evaluate_route,
    initial_state,
    objective,
    required_nodes,
    step_state,
    step_violations,
)


class InfeasiblePrefixError(VrpError):
    """The fixed prefix is structurally invalid (broken chain, repeats)."""


class InstanceTooLargeError(VrpError):
    """Exact engine refused: too many free nodes."""


@dataclass(frozen=True)
class FixedPrefix:
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        if not self.edges:
            return
        if self.edges[0][0] != DEPOT:
            raise InfeasiblePrefixError("prefix must start at the depot")
        seen = set()
        for k, (a, b) in enumerate(self.edges):
            if k > 0 and a != self.edges[k - 1][1]:
                raise InfeasiblePrefixError(f"prefix edges do not chain at position {k}")
            if b != DEPOT:
                if b in seen:
                    raise InfeasiblePrefixError(f"node {b} repeated in prefix")
                seen.add(b)

    @property
    def order(self) -> tuple[int, ...]:
        if not self.edges:
            return (DEPOT,)
        return (DEPOT,) + tuple(b for _, b in self.edges)

    @classmethod
    def from_order(cls, order) -> "FixedPrefix":
        order = tuple(order)
        return cls(tuple(zip(order[:-1], order[1:])))


@dataclass(frozen=True)
class SolverConfig:
    engine: str = "heuristic"  # "heuristic" | "exact"
    local_search_iterations: int = 4000
    restarts: int = 6
    time_limit: Optional[float] = None
    rng_seed: int = 1234
    exact_max_nodes: int = 12


def _route_score(instance: VrpInstance, kind: ProblemKind, route: Route):
    """Lexicographic score minimized by the solver.

    (stranded required nodes + constraint violations, min-prize shortfall
    indicator, objective, order). Tie-break on order keeps results stable.
    """
    stranded = len(required_nodes(instance, kind) - route.visited_set)
    hard = sum(1 for v in route.violations if v.code in ("time_window", "capacity"))
    prize_gap = 0
    if kind.has_prizes and instance.min_total_prize is not None:
        if route.states[-1].accumulated_prize < instance.min_total_prize - 1e-12:
            prize_gap = 1
    return (stranded + hard, prize_gap, objective(instance, route, kind), route.order)


def _evaluate_prefix(instance: VrpInstance, kind: ProblemKind,
                     prefix: FixedPrefix) -> tuple[list[int], GlobalState, set[int]]:
    """Walk the prefix, returning (order so far, state at tip, visited set).

    Constraint violations inside the prefix are tolerated (the route will
    carry flags); structural problems raise InfeasiblePrefixError.
    """
    order = [DEPOT]
    state = initial_state(instance)
    visited = {DEPOT}
    n = instance.n_nodes
    for a, b in prefix.edges:
        if not (0 <= b < n):
            raise InfeasiblePrefixError(f"prefix node {b} out of range")
        state = step_state(instance, state, a, b)
        order.append(b)
        visited.add(b)
    return order, state, visited


def construct_initial(instance: VrpInstance, kind: ProblemKind,
                      prefix: FixedPrefix, rng_seed: int = 1234) -> Route:
    """Greedy nearest-feasible-neighbor completion from the prefix tip.

    Time-window kinds filter candidates by "arrival within the closing time";
    prize-collecting kinds greedily add by (prize - marginal length) until the
    minimum prize is met; CVRP returns to the depot when capacity blocks all
    remaining nodes. Ties broken by lowest node index.
    """
    order, state, visited = _evaluate_prefix(instance, kind, prefix)
    remaining = set(range(1, instance.n_nodes)) - visited
    skipped: list[int] = []

    def feasible_next(cur: int, cand: int, st: GlobalState) -> bool:
        return not step_violations(instance, st, cur, cand)

    if kind.optional_visits:
        # Collect prize greedily by (prize - marginal detour) until the
        # minimum total prize is reached.
        target = instance.min_total_prize or 0.0
        while remaining and (state.accumulated_prize or 0.0) < target - 1e-12:
            cur = order[-1]
            best = None
            for c in sorted(remaining):
                if kind.has_time_windows and not feasible_next(cur, c, state):
                    continue
                gain = (instance.nodes[c].prize or 0.0) - distance(instance, cur, c)
                if best is None or gain > best[0] + 1e-15:
                    best = (gain, c)
            if best is None:
                break
            c = best[1]
            state = step_state(instance, state, order[-1], c)
            order.append(c)
            remaining.discard(c)
    else:
        while remaining:
            cur = order[-1]
            cands = [c for c in sorted(remaining) if feasible_next(cur, c, state)]
            if not cands:
                if kind.has_capacity and cur != DEPOT:
                    # capacity exhausted: return to the depot and retry
                    state = step_state(instance, state, cur, DEPOT)
                    order.append(DEPOT)
                    continue
                skipped.extend(sorted(remaining))
                remaining.clear()
                break
            c = min(cands, key=lambda c: (distance(instance, cur, c), c))
            state = step_state(instance, state, cur, c)
            order.append(c)
            remaining.discard(c)

    if order[-1] != DEPOT or len(order) == 1:
        order.append(DEPOT)
    return evaluate_route(instance, order, skipped=tuple(skipped))


def _candidate_orders_2opt(order: list[int], lock: int):
    """2-opt: reverse order[i:j]; only positions after the locked prefix."""
    n = len(order)
    for i in range(max(lock, 1), n - 2):
        for j in range(i + 2, n):
            if j - i >= n - 1:
                continue
            yield order[:i] + order[i:j][::-1] + order[j:]


def _candidate_orders_oropt(order: list[int], lock: int):
    """Or-opt: relocate segments of length 1-3 within the free suffix."""
    n = len(order)
    for seg in (1, 2, 3):
        for i in range(max(lock, 1), n - 1 - seg + 1):
            # segments may contain interior depot returns (CVRP giant tour)
            segment = order[i:i + seg]
            rest = order[:i] + order[i + seg:]
            for k in range(max(lock, 1), len(rest)):
                if k == i:
                    continue
                cand = rest[:k] + segment + rest[k:]
                if cand != order:
                    yield cand


def _valid_order(order: list[int], kind: ProblemKind) -> bool:
    if order[0] != DEPOT or order[-1] != DEPOT:
        return False
    interior = order[1:-1]
    if DEPOT in interior:
        if not kind.has_capacity:
            return False
        # no consecutive depot visits
        for a, b in zip(order[:-1], order[1:]):
            if a == DEPOT and b == DEPOT:
                return False
    seen = set()
    for x in interior:
        if x == DEPOT:
            continue
        if x in seen:
            return False
        seen.add(x)
    return True


def local_search(instance: VrpInstance, kind: ProblemKind, route: Route,
                 prefix: FixedPrefix, config: SolverConfig) -> Route:
    """2-opt + or-opt restricted to the suffix after the prefix; prize kinds
    also try insert/remove-node moves. First-improvement, strictly improving
    lexicographic score; stops at a local optimum or the iteration limit."""
    lock = len(prefix.edges) + 1  # positions [0, lock) are frozen
    best = route
    best_score = _route_score(instance, kind, best)
    iters = 0
    improved = True
    while improved and iters < config.local_search_iterations:
        improved = False
        order = list(best.order)
        moves = [_candidate_orders_2opt(order, lock), _candidate_orders_oropt(order, lock)]
        # insert moves can repair stranded nodes for any kind; removal is only
        # legal where visits are optional
        moves.append(_insert_remove_moves(instance, order, lock,
                                          allow_remove=kind.optional_visits))
        for gen in moves:
            for cand in gen:
                iters += 1
                if iters >= config.local_search_iterations:
                    break
                if not _valid_order(cand, kind):
                    continue
                still_skipped = tuple(i for i in best.skipped if i not in cand)
                cand_route = evaluate_route(instance, cand, skipped=still_skipped)
                score = _route_score(instance, kind, cand_route)
                if score[:3] < best_score[:3]:
                    best, best_score = cand_route, score
                    improved = True
                    break
            if improved or iters >= config.local_search_iterations:
                break
    return best


def _insert_remove_moves(instance: VrpInstance, order: list[int], lock: int,
                         allow_remove: bool = True):
    visited = set(order)
    outside = [i for i in range(1, instance.n_nodes) if i not in visited]
    for c in outside:
        for k in range(max(lock, 1), len(order)):
            yield order[:k] + [c] + order[k:]
    if allow_remove:
        for k in range(max(lock, 1), len(order) - 1):
            if order[k] != DEPOT:
                yield order[:k] + order[k + 1:]


def solve_exact(instance: VrpInstance, kind: ProblemKind,
                prefix: FixedPrefix = FixedPrefix(),
                config: SolverConfig = SolverConfig()) -> Route:
    """Globally optimal completion by exhaustive DFS with objective pruning.

    Minimizes the lexicographic score of _route_score; among ties, the
    depth-first visit order (ascending node index) guarantees the
    lexicographically smallest order wins.
    """
    order0, state0, visited0 = _evaluate_prefix(instance, kind, prefix)
    free = [i for i in range(1, instance.n_nodes) if i not in visited0]
    if len(free) > config.exact_max_nodes:
        raise InstanceTooLargeError(
            f"instance_too_large: {len(free)} free nodes > cap {config.exact_max_nodes}")

    required = required_nodes(instance, kind)
    best: dict = {"score": None, "route": None}

    def finish(order: list[int], state: GlobalState):
        o = list(order)
        if o[-1] != DEPOT or len(o) == 1:
            o.append(DEPOT)
        missing = tuple(sorted(i for i in free if i not in o and i in required))
        route = evaluate_route(instance, o, skipped=missing)
        score = _route_score(instance, kind, route)
        if best["score"] is None or score < best["score"]:
            best["score"] = score
            best["route"] = route

    def dfs(order: list[int], state: GlobalState, remaining: set[int]):
        cur = order[-1]
        # Objective pruning, only sound against a fully feasible incumbent:
        # the accumulated scalar never decreases and penalties are >= 0.
        if best["score"] is not None and best["score"][0] == 0 and best["score"][1] == 0:
            obj_now = state.travel_time if kind.has_time_windows else state.route_length
            if obj_now >= best["score"][2] - 1e-12:
                return
        if not remaining:
            finish(order, state)
            return
        moved = False
        can_stop = kind.optional_visits
        for c in sorted(remaining):
            if step_violations(instance, state, cur, c):
                continue
            moved = True
            ns = step_state(instance, state, cur, c)
            order.append(c)
            remaining.discard(c)
            dfs(order, ns, remaining)
            remaining.add(c)
            order.pop()
        if kind.has_capacity and cur != DEPOT and remaining:
            ns = step_state(instance, state, cur, DEPOT)
            order.append(DEPOT)
            dfs(order, ns, remaining)
            order.pop()
            moved = True
        if can_stop or not moved:
            finish(order, state)

    dfs(order0, state0, set(free))
    return best["route"]


def solve(instance: VrpInstance, kind: Optional[ProblemKind] = None,
          prefix: FixedPrefix = FixedPrefix(),
          config: SolverConfig = SolverConfig()) -> Route:
    """Solver entry point: route honoring the prefix, per the configured engine.

    Deterministic given (instance, kind, prefix, config).
    """
    kind = kind or instance.kind
    prefix = prefix if prefix is not None else FixedPrefix()
    if config.engine == "exact":
        return solve_exact(instance, kind, prefix, config)
    if config.engine != "heuristic":
        raise VrpError(f"unknown engine: {config.engine}")
    start = construct_initial(instance, kind, prefix, config.rng_seed)
    best = local_search(instance, kind, start, prefix, config)
    best_score = _route_score(instance, kind, best)

    starts: list[Route] = []
    if kind.has_time_windows:
        starts.append(_construct_by_deadline(instance, kind, prefix))
    # seeded multi-start: shuffle the free suffix and re-descend
    import random as _random

    rng = _random.Random(config.rng_seed)
    base_order = list(start.order)
    lock = len(prefix.edges) + 1
    for _ in range(max(config.restarts - 1, 0)):
        suffix = [x for x in base_order[lock:-1]]
        rng.shuffle(suffix)
        cand_order = base_order[:lock] + suffix + [DEPOT]
        if len(cand_order) >= 2 and _valid_order(cand_order, kind):
            starts.append(evaluate_route(instance, cand_order, skipped=start.skipped))
    for cand in starts:
        cand = local_search(instance, kind, cand, prefix, config)
        score = _route_score(instance, kind, cand)
        if score[:3] < best_score[:3]:
            best, best_score = cand, score
    return best


def _construct_by_deadline(instance: VrpInstance, kind: ProblemKind,
                           prefix: FixedPrefix) -> Route:
    """Earliest-closing-time-first construction for time-window kinds."""
    order, state, visited = _evaluate_prefix(instance, kind, prefix)
    remaining = set(range(1, instance.n_nodes)) - visited
    skipped: list[int] = []
    while remaining:
        cur = order[-1]
        cands = [c for c in sorted(remaining)
                 if not step_violations(instance, state, cur, c)]
        if not cands:
            skipped.extend(sorted(remaining))
            break
        c = min(cands, key=lambda c: (instance.time_window_of(c)[1], c))
        state = step_state(instance, state, cur, c)
        order.append(c)
        remaining.discard(c)
    if order[-1] != DEPOT or len(order) == 1:
        order.append(DEPOT)
    return evaluate_route(instance, order, skipped=tuple(skipped))
