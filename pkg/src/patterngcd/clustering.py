"""Seeded K-means, multi-run alignment, and per-cluster statistics."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .assignment import hungarian
from .validation import as_float_matrix


@dataclass(frozen=True)
class ClusteringResult:
    """Labels are positional (row i of the input matrix); centers are (K, D)."""

    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    seed: int

    @property
    def n_clusters(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class MultiRunResult:
    runs: tuple[ClusteringResult, ...]
    reference_index: int

    @property
    def reference(self) -> ClusteringResult:
        return self.runs[self.reference_index]


@dataclass(frozen=True)
class ClusterStats:
    cluster_id: int
    size: int
    mean_distance: float
    compactness: float
    size_score: float
    rank_score: float | None = None


def _sq_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        (X * X).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * X @ centers.T
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _plusplus_init(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = _sq_distances(X, centers[:1]).ravel()
    for k in range(1, K):
        total = d2.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[k] = X[idx]
        d2 = np.minimum(d2, _sq_distances(X, centers[k : k + 1]).ravel())
    return centers


def kmeans(points, K, seed, max_iter: int = 100) -> ClusteringResult:
    """Lloyd iterations from a k-means++ start.

    Deterministic for a fixed seed.  Ties in the assignment step go to the
    lowest cluster index; a cluster that empties is reseeded at the point
    farthest from its previous center.  Convergence means the assignment no
    longer changes.
    """
    X = as_float_matrix(points, "points")
    n = X.shape[0]
    K = int(K)
    if K < 2:
        raise ValueError("K must be at least 2")
    if n < K:
        raise ValueError(f"cannot fit {K} clusters to {n} points")
    rng = np.random.default_rng(seed)
    centers = _plusplus_init(X, K, rng)
    prev = None
    prev_inertia = np.inf
    labels = np.zeros(n, dtype=int)
    inertia = 0.0
    for _ in range(max_iter):
        d2 = _sq_distances(X, centers)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        # Lloyd never increases the objective; a violation is a logic bug
        assert inertia <= prev_inertia * (1.0 + 1e-9) + 1e-9

        if prev is not None and np.array_equal(labels, prev):
            break
        prev_inertia = inertia
        new_centers = centers.copy()
        for k in range(K):
            members = labels == k
            if members.any():
                new_centers[k] = X[members].mean(axis=0)
            else:
                far = _sq_distances(X, centers[k : k + 1]).ravel().argmax()
                new_centers[k] = X[far]
        centers = new_centers
        prev = labels
    else:
        # max_iter hit: report the assignment induced by the final centers
        d2 = _sq_distances(X, centers)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
    return ClusteringResult(labels=labels, centers=centers, inertia=inertia, seed=int(seed))


def align_to_reference(reference: ClusteringResult, other: ClusteringResult) -> ClusteringResult:
    """Relabel a run so its clusters line up with the reference.

    The mapping is a min-cost matching on Euclidean distances between
    center pairs; centers are permuted along with the labels.
    """
    K = reference.n_clusters
    if other.n_clusters != K:
        raise ValueError("cluster counts differ")
    diff = reference.centers[:, None, :] - other.centers[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=-1))
    sol = hungarian(cost)
    old_to_new = {old: new for new, old in sol.pairs}
    relabel = np.array([old_to_new[k] for k in range(K)], dtype=int)
    new_centers = np.empty_like(other.centers)
    for old, new in old_to_new.items():
        new_centers[new] = other.centers[old]
    return ClusteringResult(
        labels=relabel[other.labels],
        centers=new_centers,
        inertia=other.inertia,
        seed=other.seed,
    )


def multi_run(points, K, base_seed, runs: int = 5, max_iter: int = 100) -> MultiRunResult:
    """Run K-means ``runs`` times with consecutive seeds.

    The minimum-inertia run (lowest seed on ties) becomes the reference and
    every other run is relabeled onto it, so labels are comparable across
    runs for the instability vote.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    results = [kmeans(points, K, seed=base_seed + i, max_iter=max_iter) for i in range(runs)]
    ref_idx = min(range(runs), key=lambda i: (results[i].inertia, results[i].seed))
    ref = results[ref_idx]
    aligned = [ref if i == ref_idx else align_to_reference(ref, r) for i, r in enumerate(results)]
    return MultiRunResult(runs=tuple(aligned), reference_index=ref_idx)


def instability_mask(result: MultiRunResult) -> np.ndarray:
    """True where the aligned runs disagree on a point's cluster."""
    stacked = np.stack([r.labels for r in result.runs])
    return (stacked != stacked[0]).any(axis=0)


def cluster_stats(result: ClusteringResult, points) -> list[ClusterStats]:
    """Size and normalized compactness/size scores per cluster.

    Compactness uses the mean (non-squared) Euclidean distance of members to
    their center, min-max normalized so the tightest cluster scores 1.  When
    all clusters tie, the score degenerates to 1 by convention; same for the
    size score.
    """
    X = as_float_matrix(points, "points")
    K = result.n_clusters
    sizes = np.zeros(K, dtype=int)
    dists = np.zeros(K)
    for k in range(K):
        members = result.labels == k
        sizes[k] = int(members.sum())
        if sizes[k]:
            d = np.linalg.norm(X[members] - result.centers[k], axis=1)
            dists[k] = float(d.mean())
    d_min, d_max = dists.min(), dists.max()
    s_min, s_max = sizes.min(), sizes.max()
    out = []
    for k in range(K):
        comp = (d_max - dists[k]) / (d_max - d_min) if d_max > d_min else 1.0
        size_score = (sizes[k] - s_min) / (s_max - s_min) if s_max > s_min else 1.0
        out.append(
            ClusterStats(
                cluster_id=k,
                size=int(sizes[k]),
                mean_distance=float(dists[k]),
                compactness=float(comp),
                size_score=float(size_score),
            )
        )
    return out
