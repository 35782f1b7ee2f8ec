"""K-means clustering of ground users and cluster-to-UAV association."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

# Exact assignment is enumerated up to this many clusters (M! permutations).
EXACT_ASSIGN_LIMIT = 6


@dataclass
class ClusterAssignment:
    labels: np.ndarray             # per-user cluster id in [0, m)
    centroids: np.ndarray          # (m, 2) cluster means
    ess: float                     # sum of squared point-to-centroid distances
    uav_of_cluster: dict[int, int]
    ess_history: list[float] = field(default_factory=list)

    def users_of_uav(self, uav: int) -> list[int]:
        """User indices served by a UAV, ascending."""
        cluster = next(c for c, u in self.uav_of_cluster.items() if u == uav)
        return sorted(np.flatnonzero(self.labels == cluster).tolist())


def _sum_of_squares(points: np.ndarray, labels: np.ndarray,
                    centroids: np.ndarray) -> float:
    return float(np.sum((points - centroids[labels]) ** 2))


def kmeans(positions, m: int, seed: int, max_iters: int = 100) -> ClusterAssignment:
    """Lloyd's algorithm on 2D user positions, deterministic under the seed.

    Initial centroids are m distinct users. An emptied cluster is repaired by
    stealing the farthest member of the largest cluster. Iterates until the
    labels stop changing or max_iters.
    """
    points = np.asarray(positions, dtype=float)
    k = len(points)
    if m > k:
        raise ValueError(f"cannot form {m} clusters from {k} users")
    rng = np.random.default_rng([seed, 0x6B6D])
    centroids = points[rng.choice(k, size=m, replace=False)].copy()
    labels = np.full(k, -1)
    history = []
    for _ in range(max_iters):
        dists = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists, axis=1)
        for c in range(m):
            if not np.any(new_labels == c):
                sizes = np.bincount(new_labels, minlength=m)
                donor = int(np.argmax(sizes))
                members = np.flatnonzero(new_labels == donor)
                far = members[np.argmax(dists[members, donor])]
                new_labels[far] = c
        for c in range(m):
            centroids[c] = points[new_labels == c].mean(axis=0)
        history.append(_sum_of_squares(points, new_labels, centroids))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return ClusterAssignment(
        labels=labels,
        centroids=centroids,
        ess=history[-1],
        uav_of_cluster={c: c for c in range(m)},
        ess_history=history,
    )


def assign_to_uavs(centroids, uav_starts) -> dict[int, int]:
    """Bijective cluster-to-UAV map minimizing total centroid-to-start distance.

    Exact over all permutations for small m, greedy nearest-pair beyond.
    """
    centroids = np.asarray(centroids, dtype=float)
    starts = np.asarray(uav_starts, dtype=float)
    m = len(centroids)
    if len(starts) != m:
        raise ValueError(f"{m} clusters but {len(starts)} UAVs")
    dist = np.linalg.norm(centroids[:, None, :] - starts[None, :, :], axis=2)
    if m <= EXACT_ASSIGN_LIMIT:
        best, best_total = None, np.inf
        for perm in permutations(range(m)):
            total = sum(dist[c, perm[c]] for c in range(m))
            if total < best_total:
                best, best_total = perm, total
        return {c: best[c] for c in range(m)}
    mapping: dict[int, int] = {}
    free_c, free_u = set(range(m)), set(range(m))
    while free_c:
        c, u = min(((c, u) for c in free_c for u in free_u),
                   key=lambda cu: dist[cu[0], cu[1]])
        mapping[c] = u
        free_c.discard(c)
        free_u.discard(u)
    return mapping


def cluster_users(positions, uav_starts, m: int, seed: int) -> ClusterAssignment:
    """Cluster users and associate each cluster with a communication UAV."""
    assignment = kmeans(positions, m, seed)
    assignment.uav_of_cluster = assign_to_uavs(assignment.centroids, uav_starts)
    return assignment
