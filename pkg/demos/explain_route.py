"""Ask a why-not question about a day-trip route and read the counterfactual
explanation: what changes if the route had taken the edge you preferred?

Run: python3 demos/explain_route.py
"""

from routecf import (
    SolverConfig,
    WhyNotQuestion,
    explain,
    load_demo_instance,
    solve,
)


def name(instance, i):
    return instance.nodes[i].label or f"node {i}"


def main():
    instance = load_demo_instance()
    print("destinations:")
    for node in instance.nodes:
        e, l = node.time_window
        print(f"  {node.index}: {node.label}  open {e:.2f}-{l:.2f}  "
              f"stay {node.stay_duration:.1f}h  ({node.remarks})")

    route = solve(instance, config=SolverConfig(rng_seed=1234))
    print("\nplanned route:")
    for t, (a, b) in enumerate(route.edges, start=1):
        arr = route.states[t].travel_time
        print(f"  step {t}: {name(instance, a)} -> {name(instance, b)} "
              f"(arrive {arr:.2f})")

    # question the second edge: why its head rather than some other open stop?
    t_ex = 2
    tail, head = route.edges[t_ex - 1]
    alt = next(i for i in range(1, instance.n_nodes)
               if i != head and i not in route.order[:t_ex])
    question = WhyNotQuestion(actual_route=route, t_ex=t_ex,
                              cf_edge=(tail, alt))
    print(f"\nwhy {name(instance, head)} after {name(instance, tail)}, "
          f"not {name(instance, alt)}?")

    bundle = explain(instance, question, solver_config=SolverConfig(rng_seed=1234))
    print("\ncounterfactual route:", bundle.cf_route.order)
    print("\ncomparison (cf - actual):")
    for key, delta in bundle.comparison.items():
        print(f"  {key}: {delta:+.4f}")
    print("\nexplanation:\n" + bundle.text)


if __name__ == "__main__":
    main()
