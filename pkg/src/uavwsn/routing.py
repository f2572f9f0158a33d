"""Cluster-head selection for a fixed visiting order, plus exhaustive search.

The choice of one cluster head per cluster under a fixed visiting order is a
shortest-path problem on a layered graph: layer 0 is the start point, layer i
holds the candidate nodes of the i-th visited cluster, and a final one-node
layer is a copy of the start to close the tour.  Every edge goes from one
layer to the next.  Two independent solvers are provided (A* and dynamic
programming) so each can check the other, plus a guarded brute force over
visiting orders and CH combinations for small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .energy import (
    EnergyParams,
    cluster_ground_energy_j,
    evaluate_solution,
    flight_energy_j,
    hover_energy_j,
    hover_power_w,
    move_power_w,
)
from .instances import Instance, Tour
from .solution import Solution, solution_from_choice

MAX_BRUTE_CLUSTERS = 8
MAX_BRUTE_COMBOS = 1_000_000

# a node is (layer, index within layer)
Node = tuple[int, int]


class SizeLimitError(ValueError):
    """Raised when an instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class LayeredGraph:
    """Layered tour graph for one (instance, visiting order) pair.

    points[i] is the (n_i, 2) coordinate array of layer i; cluster_ids[i] is
    the cluster feeding layer i, or None for the two start layers.
    """

    points: tuple[np.ndarray, ...]
    cluster_ids: tuple[int | None, ...]

    @property
    def n_layers(self) -> int:
        return len(self.points)

    def layer_size(self, layer: int) -> int:
        return self.points[layer].shape[0]

    def point(self, node: Node) -> np.ndarray:
        return self.points[node[0]][node[1]]


def build_layered_graph(instance: Instance, tour: Tour) -> LayeredGraph:
    if not isinstance(tour, Tour):
        tour = Tour(tuple(tour))
    if tour.k != instance.k:
        raise ValueError(f"tour visits {tour.k} clusters, instance has {instance.k}")
    points = [instance.start[None, :]]
    cluster_ids: list[int | None] = [None]
    for cluster_id in tour.visited_clusters():
        points.append(instance.clusters[cluster_id])
        cluster_ids.append(cluster_id)
    points.append(instance.start[None, :])
    cluster_ids.append(None)
    return LayeredGraph(points=tuple(points), cluster_ids=tuple(cluster_ids))


def edge_cost(params: EnergyParams, graph: LayeredGraph,
              from_node: Node, to_node: Node) -> float:
    """Weighted energy of one hop, charging each visit exactly once.

    Flying into a cluster node pays the weighted flight leg plus that node's
    full service cost (hover above it, and the cluster's ground energy with it
    as CH).  The hop into the final layer is flight only: the tour is closed
    but nothing is serviced at the landing point.
    """
    li, ii = from_node
    lj, jj = to_node
    if lj != li + 1:
        raise ValueError(f"edges connect adjacent layers only, got {li} -> {lj}")
    if not (0 <= ii < graph.layer_size(li)) or not (0 <= jj < graph.layer_size(lj)):
        raise ValueError(f"node out of range: {from_node} -> {to_node}")
    p = graph.points[li][ii]
    q = graph.points[lj][jj]
    d = math.hypot(p[0] - q[0], p[1] - q[1])
    w = params.omega
    flight = flight_energy_j(params, d)
    if lj == graph.n_layers - 1:
        return (1.0 - w) * flight
    cluster = graph.points[lj]
    ground = cluster_ground_energy_j(params, cluster, jj)
    hover = hover_energy_j(params, (cluster.shape[0] - 1) * params.msg_bits)
    return (1.0 - w) * (flight + hover) + w * ground


def heuristic(params: EnergyParams, graph: LayeredGraph, node: Node) -> float:
    """Lower bound on remaining cost: weighted flight along the straight line home.

    Every remaining leg is at least the straight-line distance to the final
    layer at pure flight cost, and all other charges are non-negative, so this
    never overestimates; it is also consistent across edges.
    """
    p = graph.point(node)
    end = graph.points[-1][0]
    d = math.hypot(p[0] - end[0], p[1] - end[1])
    return (1.0 - params.omega) * flight_energy_j(params, d)


class TourCostModel:
    """Per-instance cost tables shared across many candidate tours.

    Search and population solvers score thousands of visiting orders of one
    instance.  The per-node ground energies, per-cluster hover energies and
    the per-meter flight cost depend only on the instance, so they are
    computed once here.  Values agree with the reference evaluator to float
    rounding.
    """

    def __init__(self, params: EnergyParams, instance: Instance):
        if params.v_uav_ms <= 0:
            raise ValueError("v_uav_ms must be > 0 to fly a tour")
        self.params = params
        self.instance = instance
        self.omega = params.omega
        self.flight_j_per_m = (
            hover_power_w(params) + move_power_w(params)) / params.v_uav_ms
        self.ground = [
            np.array([cluster_ground_energy_j(params, c, j) for j in range(c.shape[0])])
            for c in instance.clusters
        ]
        self.hover = np.array([
            hover_energy_j(params, (c.shape[0] - 1) * params.msg_bits)
            for c in instance.clusters
        ])
        self.hover_sum = float(self.hover.sum())
        self.static = [
            (1.0 - self.omega) * self.hover[k] + self.omega * self.ground[k]
            for k in range(instance.k)
        ]

    def energy_of(self, order, chs) -> float:
        """Objective value of a visiting order (cluster ids) and CH picks.

        Fast path for inner loops; the returned value tracks
        evaluate_solution to within float rounding.
        """
        inst = self.instance
        pts = np.empty((len(order) + 2, 2))
        pts[0] = inst.start
        pts[-1] = inst.start
        for i, k in enumerate(order):
            pts[i + 1] = inst.clusters[k][chs[k]]
        length = float(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1])).sum())
        ground = 0.0
        for k in range(inst.k):
            ground += float(self.ground[k][chs[k]])
        uav = self.hover_sum + self.flight_j_per_m * length
        return self.omega * ground + (1.0 - self.omega) * uav


def _search_tables(cm: TourCostModel, tour: Tour):
    """Per-layer point, static-cost and heuristic arrays for one tour."""
    order = tour.visited_clusters()
    start = cm.instance.start
    pts = [start[None, :]]
    static = [np.zeros(1)]
    for k in order:
        pts.append(cm.instance.clusters[k])
        static.append(cm.static[k])
    pts.append(start[None, :])
    static.append(np.zeros(1))
    cf = (1.0 - cm.omega) * cm.flight_j_per_m
    h = [cf * np.hypot(p[:, 0] - start[0], p[:, 1] - start[1]) for p in pts]
    return order, pts, static, h, cf


def _check_tour(instance: Instance, tour) -> Tour:
    if not isinstance(tour, Tour):
        tour = Tour(tuple(tour))
    if tour.k != instance.k:
        raise ValueError(f"tour visits {tour.k} clusters, instance has {instance.k}")
    return tour


def astar_select_chs(params: EnergyParams, instance: Instance, tour,
                     cost_model: TourCostModel | None = None) -> Solution:
    """Optimal CH per cluster for a fixed visiting order, via A*.

    Classic open/closed-list A* with an admissible, consistent heuristic.
    The open list is scanned for the lowest f; ties break toward lower g,
    then earlier insertion.  A cheaper route into a closed node reopens it.
    Pass a prebuilt TourCostModel when scoring many tours of one instance.
    """
    tour = _check_tour(instance, tour)
    cm = cost_model if cost_model is not None else TourCostModel(params, instance)
    order, pts, static, h, cf = _search_tables(cm, tour)
    n_layers = len(pts)
    start: Node = (0, 0)
    goal: Node = (n_layers - 1, 0)
    seq = itertools.count()
    # node -> (g, f, parent, insertion seq)
    open_set: dict[Node, tuple] = {start: (0.0, float(h[0][0]), None, next(seq))}
    closed: dict[Node, tuple] = {}
    while open_set:
        node, entry = min(open_set.items(),
                          key=lambda kv: (kv[1][1], kv[1][0], kv[1][3]))
        del open_set[node]
        g, _, parent, _ = entry
        if node == goal:
            chs = [0] * instance.k
            cur = parent
            while cur is not None:
                li, jj = cur
                if 1 <= li <= len(order):
                    chs[order[li - 1]] = jj
                cur = closed[cur][1]
            return solution_from_choice(params, instance, tour, chs, solver="astar")
        closed[node] = (g, parent)
        li, ii = node
        p = pts[li][ii]
        nxt = pts[li + 1]
        g2_all = g + cf * np.hypot(nxt[:, 0] - p[0], nxt[:, 1] - p[1]) + static[li + 1]
        h_next = h[li + 1]
        for j in range(nxt.shape[0]):
            m = (li + 1, j)
            g2 = float(g2_all[j])
            if m in open_set:
                if g2 < open_set[m][0]:
                    open_set[m] = (g2, g2 + h_next[j], node, next(seq))
            elif m in closed:
                if g2 < closed[m][0]:
                    del closed[m]
                    open_set[m] = (g2, g2 + h_next[j], node, next(seq))
            else:
                open_set[m] = (g2, g2 + h_next[j], node, next(seq))
    raise RuntimeError("open list exhausted before reaching the final layer")


def dp_select_chs(params: EnergyParams, instance: Instance, tour,
                  cost_model: TourCostModel | None = None) -> Solution:
    """Same optimum as astar_select_chs, by layer-by-layer dynamic programming.

    Independent implementation kept deliberately different from A* so the two
    can cross-check each other.  Ties resolve to the lowest node index.
    """
    tour = _check_tour(instance, tour)
    cm = cost_model if cost_model is not None else TourCostModel(params, instance)
    order, pts, static, _, cf = _search_tables(cm, tour)
    n_layers = len(pts)
    best = np.zeros(1)
    parents = []
    for i in range(1, n_layers):
        d = np.hypot(pts[i - 1][:, None, 0] - pts[i][None, :, 0],
                     pts[i - 1][:, None, 1] - pts[i][None, :, 1])
        cost = best[:, None] + cf * d + static[i][None, :]
        parent = np.argmin(cost, axis=0)
        best = cost[parent, np.arange(cost.shape[1])]
        parents.append(parent)
    idx = [0] * n_layers
    for i in range(n_layers - 1, 0, -1):
        idx[i - 1] = int(parents[i - 1][idx[i]])
    chs = [0] * instance.k
    for layer in range(1, n_layers - 1):
        chs[order[layer - 1]] = idx[layer]
    return solution_from_choice(params, instance, tour, chs, solver="dp")


def brute_force_solve(params: EnergyParams, instance: Instance) -> Solution:
    """Global optimum by enumerating every visiting order and CH combination.

    Every candidate is scored with the reference evaluator, independent of
    the layered-graph machinery.  Ties resolve to the lexicographically
    smallest (tour, ch_choices).  Refuses instances beyond 8 clusters or
    1e6 CH combinations.
    """
    k = instance.k
    if k > MAX_BRUTE_CLUSTERS:
        raise SizeLimitError(
            f"brute force handles at most {MAX_BRUTE_CLUSTERS} clusters, got {k}")
    combos = math.prod(instance.cluster_sizes())
    if combos > MAX_BRUTE_COMBOS:
        raise SizeLimitError(
            f"brute force handles at most {MAX_BRUTE_COMBOS} CH combinations, "
            f"got {combos}")
    best = None
    best_energy = math.inf
    ch_ranges = [range(n) for n in instance.cluster_sizes()]
    for perm in itertools.permutations(range(1, k + 1)):
        tour = Tour((0,) + perm)
        for chs in itertools.product(*ch_ranges):
            bd = evaluate_solution(params, instance, tour, chs)
            if bd.total_j < best_energy:
                best_energy = bd.total_j
                best = (tour, chs, bd)
    tour, chs, bd = best
    return Solution(tour=tour, ch_choices=chs, breakdown=bd, solver="brute")
