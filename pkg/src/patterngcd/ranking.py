"""Cluster ranking and confidence-based sample selection.

Ranking combines compactness and size scores; selection uses a Student-t
soft assignment over cluster centers to measure how certain each sample's
placement is.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .clustering import ClusterStats, _sq_distances
from .validation import as_float_matrix


def rank_clusters(stats: list[ClusterStats], sigma: float) -> list[ClusterStats]:
    """Order clusters by sigma * compactness + (1 - sigma) * size_score.

    Ties break toward the larger cluster, then the lower cluster id.  The
    input list is not modified; returned entries carry ``rank_score``.
    """
    if not (0.0 <= sigma <= 1.0):
        raise ValueError("sigma must lie in [0, 1]")
    scored = [
        replace(s, rank_score=float(sigma * s.compactness + (1.0 - sigma) * s.size_score))
        for s in stats
    ]
    return sorted(scored, key=lambda s: (-s.rank_score, -s.size, s.cluster_id))


@dataclass(frozen=True)
class AssignmentDistribution:
    """Soft cluster assignment of one sample."""

    sample_id: str
    q: np.ndarray
    entropy: float
    nearest: int
    nearest_distance: float


def student_t_distributions(points, centers, alpha: float):
    """Student-t kernel soft assignments for a batch.

    q_ij is proportional to (1 + ||x_i - mu_j||^2 / alpha) ** -(alpha+1)/2.
    Entropy is in nats.  Returns (Q, entropy, nearest, nearest_distance).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = as_float_matrix(points, "points")
    C = as_float_matrix(centers, "centers")
    d2 = _sq_distances(X, C)
    kernel = (1.0 + d2 / alpha) ** (-(alpha + 1.0) / 2.0)
    Q = kernel / kernel.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = np.where(Q > 0.0, Q * np.log(Q), 0.0)
    entropy = -contrib.sum(axis=1)
    nearest = d2.argmin(axis=1)
    nearest_distance = np.sqrt(d2[np.arange(X.shape[0]), nearest])
    return Q, entropy, nearest, nearest_distance


def assignment_distribution(point, centers, alpha: float, sample_id: str = "") -> AssignmentDistribution:
    Q, H, nearest, dist = student_t_distributions(np.asarray(point).reshape(1, -1), centers, alpha)
    return AssignmentDistribution(
        sample_id=sample_id,
        q=Q[0],
        entropy=float(H[0]),
        nearest=int(nearest[0]),
        nearest_distance=float(dist[0]),
    )


def build_distributions(ids, points, centers, alpha: float) -> list[AssignmentDistribution]:
    Q, H, nearest, dist = student_t_distributions(points, centers, alpha)
    return [
        AssignmentDistribution(
            sample_id=sid,
            q=Q[i],
            entropy=float(H[i]),
            nearest=int(nearest[i]),
            nearest_distance=float(dist[i]),
        )
        for i, sid in enumerate(ids)
    ]


def select_high_confidence(members: list[AssignmentDistribution], k_high: int) -> list[str]:
    """Pick a cluster's most trustworthy members.

    Two orderings are built: by distance to the center (central first) and by
    entropy (certain first), both tie-broken by ascending sample id.  The
    intersection of the two top-k sets is taken first; if it is short, the
    remainder is filled from the distance list, then the entropy list.
    Output preserves the distance-list order for intersection/fill stages.
    """
    if k_high < 1:
        raise ValueError("k_high must be positive")
    by_distance = sorted(members, key=lambda d: (d.nearest_distance, d.sample_id))
    by_entropy = sorted(members, key=lambda d: (d.entropy, d.sample_id))
    top_d = [d.sample_id for d in by_distance[:k_high]]
    top_e = [d.sample_id for d in by_entropy[:k_high]]
    top_e_set = set(top_e)
    chosen = [sid for sid in top_d if sid in top_e_set]
    if len(chosen) < k_high:
        seen = set(chosen)
        for sid in top_d:
            if len(chosen) >= k_high:
                break
            if sid not in seen:
                chosen.append(sid)
                seen.add(sid)
        for sid in top_e:
            if len(chosen) >= k_high:
                break
            if sid not in seen:
                chosen.append(sid)
                seen.add(sid)
    return chosen[:k_high]


def select_low_confidence(
    distributions: list[AssignmentDistribution],
    unstable_ids: set[str],
    k_low: int,
) -> list[str]:
    """Samples that are both unstable across runs and globally most entropic.

    Takes the k_low highest-entropy samples over the whole pool (ties by
    ascending sample id) and intersects with the unstable set; the result is
    sorted by sample id.
    """
    if k_low < 0:
        raise ValueError("k_low must be non-negative")
    ranked = sorted(distributions, key=lambda d: (-d.entropy, d.sample_id))
    top = {d.sample_id for d in ranked[:k_low]}
    return sorted(top & set(unstable_ids))
