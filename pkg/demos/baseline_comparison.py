"""Pit the classical solvers against the exact optimum on small instances.

Nearest-neighbour greedily chains cluster centroids, the random baseline
just shuffles, and the genetic algorithm evolves visiting orders and CH
picks jointly. Because the instances are small enough to brute force, we
can report true optimality gaps.
"""

import argparse

import numpy as np

from uavwsn import (
    EnergyParams,
    GaConfig,
    brute_force_solve,
    generate,
    solve_genetic,
    solve_nearest_neighbor,
    solve_random,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--instances", type=int, default=6)
    args = ap.parse_args()

    params = EnergyParams()
    cfg = GaConfig(population_size=80, generations=80, mutation_rate=0.01)

    gaps = {"nn": [], "random": [], "ga": []}
    print(f"{'seed':>4} {'optimal':>10} {'nn':>10} {'random':>10} {'ga':>10}")
    for seed in range(args.instances):
        inst = generate(args.k, args.n, seed=seed)
        opt = brute_force_solve(params, inst)
        nn = solve_nearest_neighbor(params, inst)
        rnd = solve_random(params, inst, rng=np.random.default_rng(seed))
        ga = solve_genetic(params, inst, cfg, rng=np.random.default_rng(seed))

        print(f"{seed:>4} {opt.energy_j:10.1f} {nn.energy_j:10.1f} "
              f"{rnd.energy_j:10.1f} {ga.energy_j:10.1f}")
        for name, sol in (("nn", nn), ("random", rnd), ("ga", ga)):
            gaps[name].append((sol.energy_j - opt.energy_j) / opt.energy_j)

    print()
    for name in ("nn", "random", "ga"):
        g = np.asarray(gaps[name])
        print(f"{name:<7} mean gap {g.mean() * 100:6.2f}%   worst {g.max() * 100:6.2f}%   "
              f"optimal on {int((g < 1e-9).sum())}/{args.instances}")


if __name__ == "__main__":
    main()
