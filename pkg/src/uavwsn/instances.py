"""Problem instances: a square field, a fixed start point, and clustered sensor nodes.

An instance is immutable once built.  Coordinates are meters.  The JSON file
format is versioned so stored instances stay readable as the code evolves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class InstanceFormatError(ValueError):
    """Raised when an instance file is missing fields or malformed."""


@dataclass(frozen=True)
class Instance:
    """A data-collection scenario: start point plus K clusters of sensor nodes.

    Attributes:
        area_m: side length of the square field; all coordinates lie in
            [0, area_m] x [0, area_m].
        start: (2,) array, where the collector launches and lands.
        clusters: tuple of (n_k, 2) arrays, one per cluster.
        seed: generator seed the instance was drawn with, or None if built
            by hand.
    """

    area_m: float
    start: np.ndarray
    clusters: tuple[np.ndarray, ...]
    seed: int | None = None

    def __post_init__(self):
        if not (np.isfinite(self.area_m) and self.area_m > 0):
            raise ValueError(f"area_m must be positive and finite, got {self.area_m}")
        if len(self.clusters) < 1:
            raise ValueError("instance needs at least one cluster")
        start = np.asarray(self.start, dtype=np.float64)
        if start.shape != (2,) or not np.all(np.isfinite(start)):
            raise ValueError("start must be a finite (x, y) pair")
        if np.any(start < 0) or np.any(start > self.area_m):
            raise ValueError("start lies outside the field")
        clusters = []
        for i, c in enumerate(self.clusters):
            c = np.asarray(c, dtype=np.float64)
            if c.ndim != 2 or c.shape[1] != 2 or c.shape[0] < 1:
                raise ValueError(f"cluster {i} must be a nonempty (n, 2) array")
            if not np.all(np.isfinite(c)):
                raise ValueError(f"cluster {i} contains non-finite coordinates")
            if np.any(c < 0) or np.any(c > self.area_m):
                raise ValueError(f"cluster {i} has nodes outside the field")
            clusters.append(c)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "clusters", tuple(clusters))

    @property
    def k(self) -> int:
        """Number of clusters."""
        return len(self.clusters)

    def cluster_sizes(self) -> tuple[int, ...]:
        return tuple(c.shape[0] for c in self.clusters)

    def centroids(self) -> np.ndarray:
        """(K, 2) array of cluster means."""
        return np.array([c.mean(axis=0) for c in self.clusters])

    def items(self) -> np.ndarray:
        """(K+1, 2) array: row 0 is the start point, row k is centroid k-1."""
        return np.vstack([self.start[None, :], self.centroids()])

    def normalized_items(self) -> np.ndarray:
        """items() scaled by 1/area_m so every coordinate is in [0, 1]."""
        return self.items() / self.area_m


@dataclass(frozen=True)
class Tour:
    """A visiting order over items: starts at item 0, then each cluster once.

    Item k (k >= 1) refers to cluster k-1.  The return to the start is
    implicit and not stored.
    """

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(x) for x in self.order)
        object.__setattr__(self, "order", order)
        if len(order) < 2:
            raise ValueError("tour must visit at least one cluster")
        if order[0] != 0:
            raise ValueError(f"tour must begin at item 0, got {order[0]}")
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"tour is not a permutation of 0..{len(order) - 1}: {order}")

    @property
    def k(self) -> int:
        """Number of clusters visited."""
        return len(self.order) - 1

    def visited_clusters(self) -> tuple[int, ...]:
        """Cluster indices (0-based) in visit order."""
        return tuple(i - 1 for i in self.order[1:])


def generate(k: int, n: int, area_m: float = 2000.0, std_m: float = 30.0,
             seed: int | None = 0) -> Instance:
    """Draw a random instance: uniform cluster centers, Gaussian nodes around each.

    Nodes are clamped to the field, so a center near the boundary piles its
    nodes on the edge rather than leaking outside.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not std_m > 0:
        raise ValueError(f"std_m must be > 0, got {std_m}")
    if not area_m > 0:
        raise ValueError(f"area_m must be > 0, got {area_m}")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, area_m, size=(k, 2))
    clusters = []
    for center in centers:
        pts = rng.normal(loc=center, scale=std_m, size=(n, 2))
        np.clip(pts, 0.0, area_m, out=pts)
        clusters.append(pts)
    return Instance(area_m=float(area_m), start=np.zeros(2),
                    clusters=tuple(clusters), seed=seed)


def save(instance: Instance, path: str | Path) -> None:
    """Write an instance to a JSON file (version 1 layout)."""
    doc = {
        "version": 1,
        "area_m": instance.area_m,
        "seed": instance.seed,
        "start": [float(instance.start[0]), float(instance.start[1])],
        "clusters": [{"nodes": c.tolist()} for c in instance.clusters],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _require(doc: dict, field: str, path):
    if field not in doc:
        raise InstanceFormatError(f"{path}: missing field '{field}'")
    return doc[field]


def load(path: str | Path) -> Instance:
    """Read an instance JSON file, validating every field.

    Raises InstanceFormatError naming the offending field; never returns a
    partially-built instance.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InstanceFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top level must be an object")
    version = _require(doc, "version", path)
    if version != 1:
        raise InstanceFormatError(f"{path}: unsupported version {version!r}")
    area_m = _require(doc, "area_m", path)
    if not isinstance(area_m, (int, float)) or isinstance(area_m, bool):
        raise InstanceFormatError(f"{path}: field 'area_m' must be a number")
    seed = doc.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise InstanceFormatError(f"{path}: field 'seed' must be an integer or null")
    start = _require(doc, "start", path)
    if (not isinstance(start, list) or len(start) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in start)):
        raise InstanceFormatError(f"{path}: field 'start' must be [x, y]")
    clusters_doc = _require(doc, "clusters", path)
    if not isinstance(clusters_doc, list) or not clusters_doc:
        raise InstanceFormatError(f"{path}: field 'clusters' must be a nonempty list")
    clusters = []
    for i, entry in enumerate(clusters_doc):
        if not isinstance(entry, dict):
            raise InstanceFormatError(f"{path}: clusters[{i}] must be an object")
        nodes = _require(entry, "nodes", f"{path}: clusters[{i}]")
        if not isinstance(nodes, list) or not nodes:
            raise InstanceFormatError(f"{path}: clusters[{i}].nodes must be a nonempty list")
        for j, pt in enumerate(nodes):
            if (not isinstance(pt, list) or len(pt) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pt)):
                raise InstanceFormatError(
                    f"{path}: clusters[{i}].nodes[{j}] must be [x, y]")
        clusters.append(np.asarray(nodes, dtype=np.float64))
    try:
        return Instance(area_m=float(area_m), start=np.asarray(start, dtype=np.float64),
                        clusters=tuple(clusters), seed=seed)
    except ValueError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
