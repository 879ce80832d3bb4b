"""Minimum-cost assignment and cluster-to-class matching.

The inner linear-assignment solve is delegated to scipy; on top of it we
force a canonical solution so ties between equal-cost optima always resolve
the same way: rows are fixed in ascending order, each taking the smallest
column that keeps the total optimal (an unassigned row counts as larger than
any column).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    """Row/column pairs (sorted by row) and their total cost."""

    pairs: tuple[tuple[int, int], ...]
    cost: float

    def as_dict(self) -> dict[int, int]:
        return {r: c for r, c in self.pairs}


def _optimal_cost(cost: np.ndarray) -> float:
    if cost.shape[0] == 0 or cost.shape[1] == 0:
        return 0.0
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum())


def hungarian(cost) -> Assignment:
    """Solve min-cost assignment with deterministic tie-breaking.

    Accepts rectangular matrices; exactly min(m, n) pairs are returned.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] == 0 or cost.shape[1] == 0:
        raise ValueError("cost matrix must be 2-D and non-empty")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix entries must be finite")
    m, n = cost.shape
    best = _optimal_cost(cost)
    tol = _TIE_TOL * max(1.0, float(np.abs(cost).sum()))

    rows = list(range(m))
    cols = list(range(n))
    pairs: list[tuple[int, int]] = []
    fixed = 0.0
    slots = min(m, n)
    while rows and slots > len(pairs):
        r = rows[0]
        rest_rows = rows[1:]
        chosen = None
        for c in cols:
            sub = cost[np.ix_(rest_rows, [x for x in cols if x != c])]
            if fixed + cost[r, c] + _optimal_cost(sub) <= best + tol:
                chosen = c
                break
        if chosen is not None:
            pairs.append((r, chosen))
            fixed += cost[r, chosen]
            cols.remove(chosen)
        # else: row r stays unassigned (only possible when m > n)
        rows = rest_rows
    total = float(sum(cost[r, c] for r, c in pairs))
    return Assignment(pairs=tuple(pairs), cost=total)


@dataclass(frozen=True)
class Matching:
    """Outcome of matching cluster centers to known-class centroids."""

    cluster_to_class: dict[int, int]
    novel_clusters: frozenset[int]
    novel_ids: dict[int, int]
    cost: float

    def class_of(self, cluster: int) -> int:
        if cluster in self.cluster_to_class:
            return self.cluster_to_class[cluster]
        return self.novel_ids[cluster]

    def full_map(self) -> dict[int, int]:
        out = dict(self.cluster_to_class)
        out.update(self.novel_ids)
        return out


def match_clusters(centers, class_centroids, class_ids, K, rank_order=None) -> Matching:
    """Match cluster centers to known-class centroids by Euclidean cost.

    Args:
        centers: (n_clusters, D) cluster center matrix.
        class_centroids: (n_known, D) centroid matrix, row i for class_ids[i].
        class_ids: known class ids aligned with class_centroids rows.
        K: total number of classes; novel ids come from [0, K) minus class_ids.
        rank_order: cluster ids from most to least promising; unmatched
            clusters receive the free ids in this order (ascending id values
            go to the best-ranked novel clusters).  Defaults to ascending
            cluster id.

    Returns a Matching whose class map is a bijection onto [0, K) when the
    number of clusters equals K.
    """
    centers = np.asarray(centers, dtype=np.float64)
    class_centroids = np.asarray(class_centroids, dtype=np.float64)
    class_ids = [int(c) for c in class_ids]
    n_clusters = centers.shape[0]
    if len(class_ids) != class_centroids.shape[0]:
        raise ValueError("class_ids and class_centroids disagree")
    if len(class_ids) > n_clusters:
        raise ValueError("more known classes than clusters")
    if len(set(class_ids)) != len(class_ids):
        raise ValueError("duplicate class id")
    if any(c < 0 or c >= K for c in class_ids):
        raise ValueError("class id outside [0, K)")

    # rows = known classes, columns = clusters; every class gets a cluster
    diff = class_centroids[:, None, :] - centers[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=-1))
    sol = hungarian(cost)
    cluster_to_class = {c: class_ids[r] for r, c in sol.pairs}

    free_ids = sorted(set(range(K)) - set(class_ids))
    novel = [c for c in range(n_clusters) if c not in cluster_to_class]
    if rank_order is None:
        ordered = sorted(novel)
    else:
        order = [c for c in rank_order if c in novel]
        if sorted(order) != sorted(novel):
            raise ValueError("rank_order does not cover the novel clusters")
        ordered = order
    if len(novel) > len(free_ids):
        raise ValueError("not enough free class ids for the novel clusters")
    novel_ids = {c: free_ids[i] for i, c in enumerate(ordered)}
    return Matching(
        cluster_to_class=cluster_to_class,
        novel_clusters=frozenset(novel),
        novel_ids=novel_ids,
        cost=sol.cost,
    )
