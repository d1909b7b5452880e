"""Solve a small time-window instance with both engines and walk the state
trajectory of the result.

Run: python3 demos/solve_and_inspect.py
"""

import numpy as np

from routecf import (
    FixedPrefix,
    Node,
    ProblemKind,
    SolverConfig,
    VrpInstance,
    is_feasible,
    objective,
    solve,
)


def build_instance(n=8, seed=3):
    rng = np.random.default_rng(seed)
    coords = rng.random((n, 2))
    # windows wide enough that a full tour exists, tight enough to matter
    nodes = [Node(index=0, coords=tuple(coords[0]), time_window=(0.0, 1e9))]
    for i in range(1, n):
        center = rng.uniform(0.5, 4.0)
        nodes.append(Node(index=i, coords=tuple(coords[i]),
                          time_window=(max(0.0, center - 2.0), center + 2.0)))
    return VrpInstance(kind=ProblemKind.TSPTW, nodes=tuple(nodes))


def show(instance, route, title):
    ok, codes = is_feasible(instance, route)
    print(f"\n{title}")
    print(f"  order: {route.order}")
    print(f"  objective (travel time): {objective(instance, route):.4f}")
    print(f"  feasible: {ok}{'' if ok else ' ' + str(codes)}")
    for k, node in enumerate(route.order):
        s = route.states[k]
        print(f"  arrive node {node}: t={s.travel_time:.3f} "
              f"length={s.route_length:.3f}")


def main():
    instance = build_instance()

    heur = solve(instance, config=SolverConfig(rng_seed=1234))
    show(instance, heur, "heuristic route")

    exact = solve(instance, config=SolverConfig(engine="exact"))
    show(instance, exact, "exact route (branch and bound)")

    gap = objective(instance, heur) - objective(instance, exact)
    print(f"\nheuristic gap over exact: {gap:.6f}")

    # force the first edge somewhere else and watch the cost move
    forced = next(i for i in range(1, instance.n_nodes)
                  if i != exact.order[1])
    pinned = solve(instance, prefix=FixedPrefix(((0, forced),)),
                   config=SolverConfig(engine="exact"))
    show(instance, pinned, f"exact route forced to start 0 -> {forced}")


if __name__ == "__main__":
    main()
