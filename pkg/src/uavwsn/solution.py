"""Common result type returned by every solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import EnergyBreakdown, EnergyParams, evaluate_solution
from .instances import Instance, Tour


@dataclass(frozen=True)
class Solution:
    """A visiting order, one cluster-head index per cluster, and its scored energy."""

    tour: Tour
    ch_choices: tuple[int, ...]
    breakdown: EnergyBreakdown
    solver: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ch_choices", tuple(int(c) for c in self.ch_choices))

    @property
    def energy_j(self) -> float:
        return self.breakdown.total_j

    def polyline(self, instance: Instance) -> np.ndarray:
        """(K+2, 2) waypoints of the closed flight path, start first and last."""
        pts = [instance.start]
        for cluster_id in self.tour.visited_clusters():
            pts.append(instance.clusters[cluster_id][self.ch_choices[cluster_id]])
        pts.append(instance.start)
        return np.asarray(pts)

    def to_dict(self) -> dict:
        b = self.breakdown
        return {
            "solver": self.solver,
            "tour": list(self.tour.order),
            "ch_choices": list(self.ch_choices),
            "energy_j": b.total_j,
            "e_ground_j": b.ground_j,
            "e_uav_j": b.uav_j,
            "e_hover_j": b.hover_j,
            "e_flight_j": b.flight_j,
            "tour_length_m": b.tour_length_m,
        }


def solution_from_choice(params: EnergyParams, instance: Instance, tour,
                         ch_choices, solver: str = "") -> Solution:
    """Build a Solution by rescoring (tour, chs) with the reference evaluator."""
    if not isinstance(tour, Tour):
        tour = Tour(tuple(tour))
    breakdown = evaluate_solution(params, instance, tour, ch_choices)
    return Solution(tour=tour, ch_choices=tuple(ch_choices),
                    breakdown=breakdown, solver=solver)
