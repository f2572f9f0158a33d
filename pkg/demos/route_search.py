"""Compare the exact planners over the layered routing graph.

For a fixed visiting order the joint CH choice is a shortest path through
one candidate node per cluster. This script runs the A* search and the
dynamic program on the same instance, checks that they agree, and (small
cases only) sweeps every visiting order by brute force to show how far the
fixed order sits from the global optimum.
"""

import argparse
import time

from uavwsn import (
    EnergyParams,
    Tour,
    astar_select_chs,
    brute_force_solve,
    dp_select_chs,
    generate,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=5, help="number of clusters")
    ap.add_argument("--n", type=int, default=3, help="candidate nodes per cluster")
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    params = EnergyParams()
    inst = generate(k=args.k, n=args.n, seed=args.seed)
    tour = Tour(tuple(range(args.k + 1)))   # visit clusters in label order

    t0 = time.perf_counter()
    a = astar_select_chs(params, inst, tour)
    t_astar = time.perf_counter() - t0

    t0 = time.perf_counter()
    d = dp_select_chs(params, inst, tour)
    t_dp = time.perf_counter() - t0

    print(f"instance: k={args.k} clusters, n={args.n} candidates each, order {tour.order}")
    print(f"A* chs={a.ch_choices}  energy={a.energy_j:.6f} J  ({t_astar * 1e3:.2f} ms)")
    print(f"DP chs={d.ch_choices}  energy={d.energy_j:.6f} J  ({t_dp * 1e3:.2f} ms)")
    assert a.ch_choices == d.ch_choices
    assert abs(a.energy_j - d.energy_j) <= 1e-9 * d.energy_j
    print("the two planners agree")

    if args.k <= 5:   # k! grows fast; keep the sweep interactive
        t0 = time.perf_counter()
        b = brute_force_solve(params, inst)
        t_brute = time.perf_counter() - t0
        print(f"brute force tour={b.tour.order} chs={b.ch_choices} "
              f"energy={b.energy_j:.6f} J  ({t_brute * 1e3:.1f} ms)")
        gap = (a.energy_j - b.energy_j) / b.energy_j
        print(f"label order is {gap * 100:.2f}% above the best visiting order")
    else:
        print("(k too large for brute force, skipping the order sweep)")


if __name__ == "__main__":
    main()
