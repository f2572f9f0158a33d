"""Classical solvers to benchmark the learned policy against.

All of them pick the visiting order by their own logic and then delegate
cluster-head selection to the layered-graph machinery (or, for the genetic
solver, evolve CH genes jointly with the order).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .energy import EnergyParams
from .instances import Instance, Tour
from .routing import TourCostModel, dp_select_chs
from .solution import Solution, solution_from_choice


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 150
    generations: int = 200
    mutation_rate: float = 0.005
    elitism_count: int = 1
    tournament_size: int = 2

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError(
                f"population_size must be >= 2, got {self.population_size}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError(
                f"mutation_rate must lie in [0, 1], got {self.mutation_rate}")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError(
                f"elitism_count must lie in [0, population_size), "
                f"got {self.elitism_count}")
        if self.tournament_size < 1:
            raise ValueError(
                f"tournament_size must be >= 1, got {self.tournament_size}")


def _order_to_tour(order) -> Tour:
    return Tour((0,) + tuple(int(c) + 1 for c in order))


def solve_nearest_neighbor(params: EnergyParams, instance: Instance) -> Solution:
    """Visit the nearest unvisited centroid next; CHs picked optimally after."""
    centroids = instance.centroids()
    remaining = list(range(instance.k))
    current = instance.start
    order = []
    while remaining:
        d = np.hypot(centroids[remaining, 0] - current[0],
                     centroids[remaining, 1] - current[1])
        pick = remaining[int(np.argmin(d))]
        order.append(pick)
        remaining.remove(pick)
        current = centroids[pick]
    sol = dp_select_chs(params, instance, _order_to_tour(order))
    return dataclasses.replace(sol, solver="nn")


def solve_random(params: EnergyParams, instance: Instance, rng=None) -> Solution:
    """Uniformly random visiting order; CHs picked optimally after.

    A control baseline: any solver worth running should beat it.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    order = rng.permutation(instance.k)
    sol = dp_select_chs(params, instance, _order_to_tour(order))
    return dataclasses.replace(sol, solver="random")


def _order_crossover(rng, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Keep a random slice of parent a, fill the rest in parent b's order."""
    k = a.shape[0]
    i, j = sorted(int(x) for x in rng.integers(0, k, size=2))
    child = np.full(k, -1, dtype=np.int64)
    child[i:j + 1] = a[i:j + 1]
    used = set(child[i:j + 1].tolist())
    fill = iter(x for x in b.tolist() if x not in used)
    for pos in range(k):
        if child[pos] < 0:
            child[pos] = next(fill)
    return child


def solve_genetic(params: EnergyParams, instance: Instance,
                  config: GaConfig | None = None, rng=None,
                  return_history: bool = False):
    """Evolve (visiting order, CH picks) jointly.

    Chromosome = one permutation of the clusters plus one CH gene per
    cluster.  Tournament selection, order crossover on the permutation,
    uniform crossover on the CH genes, per-position swap/reset mutation,
    and elitism.  The best individual ever seen is returned, so the result
    never degrades with more generations.

    With return_history=True also returns the best-so-far energy after the
    initial population and after each generation.
    """
    config = config or GaConfig()
    if rng is None:
        rng = np.random.default_rng(0)
    cm = TourCostModel(params, instance)
    k = instance.k
    sizes = np.array(instance.cluster_sizes())

    perms = [rng.permutation(k) for _ in range(config.population_size)]
    chs = [rng.integers(0, sizes) for _ in range(config.population_size)]
    energies = np.array([cm.energy_of(p, c) for p, c in zip(perms, chs)])

    best_idx = int(np.argmin(energies))
    best_energy = float(energies[best_idx])
    best_perm = perms[best_idx].copy()
    best_chs = chs[best_idx].copy()
    history = [best_energy]

    def tournament() -> int:
        contenders = rng.integers(0, config.population_size,
                                  size=config.tournament_size)
        return int(contenders[int(np.argmin(energies[contenders]))])

    for _ in range(config.generations):
        ranked = np.argsort(energies, kind="stable")
        new_perms = [perms[i].copy() for i in ranked[:config.elitism_count]]
        new_chs = [chs[i].copy() for i in ranked[:config.elitism_count]]
        new_energies = [float(energies[i]) for i in ranked[:config.elitism_count]]
        while len(new_perms) < config.population_size:
            pa, pb = tournament(), tournament()
            child_perm = _order_crossover(rng, perms[pa], perms[pb])
            take_a = rng.random(k) < 0.5
            child_chs = np.where(take_a, chs[pa], chs[pb])
            for pos in np.nonzero(rng.random(k) < config.mutation_rate)[0]:
                other = int(rng.integers(0, k))
                child_perm[[pos, other]] = child_perm[[other, pos]]
            for pos in np.nonzero(rng.random(k) < config.mutation_rate)[0]:
                child_chs[pos] = rng.integers(0, sizes[pos])
            energy = cm.energy_of(child_perm, child_chs)
            if energy < best_energy:
                best_energy = energy
                best_perm = child_perm.copy()
                best_chs = child_chs.copy()
            new_perms.append(child_perm)
            new_chs.append(child_chs)
            new_energies.append(energy)
        perms, chs = new_perms, new_chs
        energies = np.array(new_energies)
        history.append(best_energy)

    solution = solution_from_choice(params, instance, _order_to_tour(best_perm),
                                    [int(c) for c in best_chs], solver="ga")
    return (solution, history) if return_history else solution
