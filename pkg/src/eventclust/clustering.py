"""Agglomerative hierarchical clustering of normalized feature vectors.

Clusters are merged bottom-up under a configurable point distance
(squared Euclidean, Euclidean, Manhattan, Minkowski) and linkage rule
(single, complete, average, Ward). Inter-cluster linkage is recomputed
exactly from the point-distance matrix at every step rather than via
update formulas; universes here are small enough that clarity wins.

Ties on the minimum merge distance are broken by the lexicographically
smallest (min_id, max_id) pair, which makes the merge sequence fully
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

LINKAGES = ("single", "complete", "average", "ward")
METRIC_KINDS = ("squared_euclidean", "euclidean", "manhattan", "minkowski")


@dataclass(frozen=True)
class DistanceMetric:
    kind: str
    r: float = 2.0  # Minkowski order; ignored by the named metrics

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ConfigError(f"unknown distance metric {self.kind!r}")
        if self.kind == "minkowski":
            if not (np.isfinite(self.r) and self.r > 0):
                raise ConfigError(f"minkowski order must be finite and > 0, got {self.r}")

    @classmethod
    def parse(cls, text: str) -> "DistanceMetric":
        """Parse 'manhattan', 'minkowski:3', etc."""
        if ":" in text:
            kind, _, arg = text.partition(":")
            return cls(kind.strip(), float(arg))
        return cls(text.strip())

    def __str__(self) -> str:
        if self.kind == "minkowski":
            return f"minkowski:{self.r:g}"
        return self.kind


def distance(a, b, metric: DistanceMetric) -> float:
    """Point-to-point distance under `metric`."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    if metric.kind == "squared_euclidean":
        return float(np.sum(diff ** 2))
    if metric.kind == "euclidean":
        return float(np.sqrt(np.sum(diff ** 2)))
    if metric.kind == "manhattan":
        return float(np.sum(np.abs(diff)))
    return float(np.sum(np.abs(diff) ** metric.r) ** (1.0 / metric.r))


def pairwise_distances(vectors: np.ndarray, metric: DistanceMetric) -> np.ndarray:
    """Symmetric (n, n) matrix of point distances."""
    n = len(vectors)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = distance(vectors[i], vectors[j], metric)
            out[i, j] = out[j, i] = d
    return out


@dataclass(frozen=True)
class Dendrogram:
    """Full merge history. Leaf ids are 0..n-1, internal ids n..2n-2."""

    n_leaves: int
    labels: tuple[str, ...]
    merges: tuple  # of (left_id, right_id, height, new_id)

    def __post_init__(self):
        if len(self.merges) != self.n_leaves - 1:
            raise DataError(
                f"dendrogram must have n_leaves - 1 merges, got {len(self.merges)}"
            )

    def to_json_dict(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "labels": list(self.labels),
            "merges": [[l, r, h, nid] for (l, r, h, nid) in self.merges],
        }


def _linkage_distance(D, members_a, members_b, linkage, vectors, sizes=None):
    block = D[np.ix_(members_a, members_b)]
    if linkage == "single":
        return float(block.min())
    if linkage == "complete":
        return float(block.max())
    if linkage == "average":
        return float(block.mean())
    # ward: increase in within-cluster sum of squared euclidean deviations
    na, nb = len(members_a), len(members_b)
    ca = vectors[members_a].mean(axis=0)
    cb = vectors[members_b].mean(axis=0)
    return float(na * nb / (na + nb) * np.sum((ca - cb) ** 2))


def agglomerate(vectors, labels, metric: DistanceMetric, linkage: str = "average") -> Dendrogram:
    """Cluster row vectors bottom-up; returns the ordered merge history.

    Ward linkage measures the exact increase in within-cluster squared
    error and is only meaningful on squared Euclidean geometry, so any
    other metric with ward is rejected.
    """
    vectors = np.asarray(vectors, dtype=float)
    labels = tuple(labels)
    n = len(vectors)
    if n != len(labels):
        raise DataError(f"{n} vectors but {len(labels)} labels")
    if n < 2:
        raise DataError(f"need at least 2 securities to cluster, got {n}")
    if linkage not in LINKAGES:
        raise ConfigError(f"unknown linkage {linkage!r}")
    if linkage == "ward" and metric.kind != "squared_euclidean":
        raise ConfigError("ward linkage is only valid with squared_euclidean distance")
    if not np.all(np.isfinite(vectors)):
        raise DataError("feature vectors contain non-finite components")

    D = pairwise_distances(vectors, metric)
    members = {i: [i] for i in range(n)}
    merges = []
    next_id = n
    for _ in range(n - 1):
        active = sorted(members)
        best = None
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                i, j = active[ai], active[bi]
                d = _linkage_distance(D, members[i], members[j], linkage, vectors)
                key = (d, i, j)
                if best is None or key < best:
                    best = key
        d, i, j = best
        members[next_id] = members.pop(i) + members.pop(j)
        merges.append((i, j, d, next_id))
        next_id += 1
    return Dendrogram(n_leaves=n, labels=labels, merges=tuple(merges))


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    labels: dict  # ticker -> cluster label in 0..k-1
    tickers: tuple[str, ...]
    focal_cluster: int | None = None

    def members(self, label: int) -> tuple[str, ...]:
        return tuple(t for t in self.tickers if self.labels[t] == label)


def cut(dendrogram: Dendrogram, k: int, focal: str | None = None) -> ClusterAssignment:
    """Partition into k clusters by undoing the last k - 1 merges.

    Cluster labels are assigned 0..k-1 in order of each cluster's first
    leaf, so the labeling is independent of merge ids.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ConfigError(f"k must be in [1, {n}], got {k}")
    members = {i: [i] for i in range(n)}
    for left, right, _h, new_id in dendrogram.merges[: n - k]:
        members[new_id] = members.pop(left) + members.pop(right)
    components = sorted((sorted(m) for m in members.values()), key=lambda m: m[0])
    labels = {}
    for label, comp in enumerate(components):
        for leaf in comp:
            labels[dendrogram.labels[leaf]] = label
    focal_cluster = None
    if focal is not None:
        if focal not in labels:
            raise DataError(f"focal ticker {focal!r} not among clustered securities")
        focal_cluster = labels[focal]
    return ClusterAssignment(
        k=k, labels=labels, tickers=dendrogram.labels, focal_cluster=focal_cluster
    )


def focal_subsample(assignment: ClusterAssignment, focal: str) -> tuple[str, ...]:
    """All tickers sharing the focal security's cluster, focal included."""
    if focal not in assignment.labels:
        raise DataError(f"focal ticker {focal!r} not in assignment")
    target = assignment.labels[focal]
    return assignment.members(target)
