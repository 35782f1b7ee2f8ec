"""Throughput accounting, Jain index, fairness factors, and fair scheduling."""

from __future__ import annotations

import math

import numpy as np


def jain_index(cum_bits) -> float:
    """Jain fairness index of an allocation, in [1/n, 1].

    A zero-total allocation (start of an episode) is defined as 1/n so the
    fairness indicator starts unlatched.
    """
    x = np.asarray(cum_bits, dtype=float)
    if x.size == 0:
        raise ValueError("empty allocation")
    total = x.sum()
    if total == 0.0:
        return 1.0 / x.size
    shares = x / total
    return 1.0 / (x.size * float(np.square(shares).sum()))


def update_indicator(prev_latched: bool, prev_jain: float, k_f: float) -> bool:
    """Latched fairness indicator: on once the Jain index has reached k_f."""
    return prev_latched or prev_jain >= k_f


def fairness_factor(cum_mbits: float, latched: bool, r_max_mbits: float,
                    k_gp: float) -> float:
    """Per-user scheduling weight in (-1, 1].

    1 once the cluster's fairness target is latched; otherwise a logistic
    that decays as the user's cumulative throughput grows past r_max_mbits.
    """
    if k_gp <= 0.0:
        raise ValueError(f"k_gp must be positive, got {k_gp}")
    if latched:
        return 1.0
    return 2.0 / (1.0 + math.exp((cum_mbits - r_max_mbits) * k_gp)) - 1.0


def schedule(cluster_users, factors, secrecy_rates, cum_bits) -> int:
    """Pick the one user a UAV serves this slot: argmax of factor * secrecy rate.

    Ties break toward the lowest cumulative throughput, then the lowest user
    index. Returns the user id (an element of cluster_users).
    """
    if len(cluster_users) == 0:
        raise ValueError("empty cluster")
    best = None
    best_key = None
    for u, f, r, c in zip(cluster_users, factors, secrecy_rates, cum_bits):
        key = (-f * r, c, u)
        if best_key is None or key < best_key:
            best, best_key = u, key
    return best


def instantaneous_fst(factors, rates, slot_s: float) -> float:
    """This slot's fair secrecy throughput in bits: sum of factor*rate*dt
    over the scheduled user of every cluster."""
    return sum(f * r * slot_s for f, r in zip(factors, rates))


def total_fst(instantaneous_bits) -> float:
    """Episode fair secrecy throughput: sum of the per-slot values."""
    return float(sum(instantaneous_bits))


class ThroughputLedger:
    """Per-episode secrecy-throughput accounting for all clusters.

    Tracks per-user and per-cluster cumulative bits, the per-cluster Jain
    index of the current totals, and the latched fairness indicator. Single
    writer per episode.
    """

    def __init__(self, clusters: list[list[int]], n_users: int):
        for c in clusters:
            if len(c) == 0:
                raise ValueError("every cluster must be nonempty")
        self.clusters = [sorted(c) for c in clusters]
        self.per_user_cum_bits = np.zeros(n_users)
        self.per_cluster_cum_bits = np.zeros(len(clusters))
        self.fairness_latched = np.zeros(len(clusters), dtype=bool)
        self.jain_per_cluster = np.array(
            [1.0 / len(c) for c in self.clusters])

    def latch_step(self, k_f: float) -> None:
        """Advance the fairness indicators from the previous slot's Jain values.

        Call at slot start, before this slot's accruals.
        """
        for m in range(len(self.clusters)):
            self.fairness_latched[m] = update_indicator(
                bool(self.fairness_latched[m]), float(self.jain_per_cluster[m]), k_f)

    def factors(self, cluster: int, r_max_mbits: float, k_gp: float) -> np.ndarray:
        """Fairness factors of a cluster's users from the current totals."""
        latched = bool(self.fairness_latched[cluster])
        return np.array([
            fairness_factor(self.per_user_cum_bits[u] / 1e6, latched, r_max_mbits, k_gp)
            for u in self.clusters[cluster]
        ])

    def accrue(self, cluster: int, user: int, secrecy_rate_bps: float,
               slot_s: float) -> None:
        """Credit one scheduled transmission to a user and its cluster."""
        if user not in self.clusters[cluster]:
            raise ValueError(f"user {user} not in cluster {cluster}")
        delta = secrecy_rate_bps * slot_s
        self.per_user_cum_bits[user] += delta
        self.per_cluster_cum_bits[cluster] += delta

    def refresh_jain(self) -> None:
        """Recompute every cluster's Jain index from the current totals.

        Call after this slot's accruals; the result feeds the next slot's
        latch update.
        """
        for m, users in enumerate(self.clusters):
            self.jain_per_cluster[m] = jain_index(self.per_user_cum_bits[users])

    def cluster_cum_bits(self, cluster: int) -> np.ndarray:
        """Cumulative bits of a cluster's users, in cluster order."""
        return self.per_user_cum_bits[self.clusters[cluster]]
