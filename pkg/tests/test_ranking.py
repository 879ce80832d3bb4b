"""Cluster ranking and confidence selection."""
import numpy as np
import pytest

from patterngcd.clustering import ClusterStats
from patterngcd.ranking import (
    AssignmentDistribution,
    assignment_distribution,
    build_distributions,
    rank_clusters,
    select_high_confidence,
    select_low_confidence,
    student_t_distributions,
)


def _stats(cid, comp, size_score, size=10):
    return ClusterStats(
        cluster_id=cid,
        size=size,
        compactness=comp,
        size_score=size_score,
        mean_distance=0.0,
    )


def _ad(sid, entropy, dist, nearest=0):
    return AssignmentDistribution(
        sample_id=sid,
        q=np.array([1.0]),
        entropy=entropy,
        nearest=nearest,
        nearest_distance=dist,
    )


def test_rank_score_blend():
    stats = [
        _stats(0, 1.0, 0.0),
        _stats(1, 0.5, 0.5),
        _stats(2, 0.0, 1.0),
    ]
    ranked = rank_clusters(stats, sigma=0.7)
    assert [s.cluster_id for s in ranked] == [0, 1, 2]
    assert [round(s.rank_score, 6) for s in ranked] == [0.7, 0.5, 0.3]
    # leaning toward size flips the order
    ranked = rank_clusters(stats, sigma=0.3)
    assert [s.cluster_id for s in ranked] == [2, 1, 0]
    assert [round(s.rank_score, 6) for s in ranked] == [0.7, 0.5, 0.3]


def test_rank_ties_prefer_size_then_id():
    stats = [
        _stats(3, 0.5, 0.5, size=5),
        _stats(1, 0.5, 0.5, size=20),
        _stats(2, 0.5, 0.5, size=20),
    ]
    ranked = rank_clusters(stats, sigma=0.5)
    assert [s.cluster_id for s in ranked] == [1, 2, 3]


def test_rank_input_unmodified():
    stats = [_stats(0, 1.0, 0.0)]
    rank_clusters(stats, sigma=0.5)
    assert stats[0].rank_score is None


def test_rank_sigma_bounds():
    with pytest.raises(ValueError):
        rank_clusters([], sigma=1.5)
    with pytest.raises(ValueError):
        rank_clusters([], sigma=-0.1)


def test_student_t_four_to_one_split():
    # alpha=1 kernel is 1/(1+d^2); d^2 of 0 and 3 gives weights 1 and 1/4
    X = np.array([[0.0, 0.0]])
    C = np.array([[0.0, 0.0], [np.sqrt(3.0), 0.0]])
    Q, H, nearest, dist = student_t_distributions(X, C, alpha=1.0)
    assert np.allclose(Q[0], [0.8, 0.2], atol=1e-12)
    want = -(0.8 * np.log(0.8) + 0.2 * np.log(0.2))
    assert abs(H[0] - want) < 1e-12
    assert abs(H[0] - 0.5004) < 1e-3
    assert nearest[0] == 0
    assert dist[0] == 0.0


def test_student_t_matches_direct_formula():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(12, 4))
    C = rng.normal(size=(5, 4))
    for alpha in (0.5, 1.0, 3.0):
        Q, H, nearest, dist = student_t_distributions(X, C, alpha)
        d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        kern = (1.0 + d2 / alpha) ** (-(alpha + 1.0) / 2.0)
        want = kern / kern.sum(axis=1, keepdims=True)
        assert np.allclose(Q, want, atol=1e-12)
        assert np.allclose(Q.sum(axis=1), 1.0, atol=1e-12)
        assert np.allclose(H, -(want * np.log(want)).sum(axis=1), atol=1e-12)
        assert np.array_equal(nearest, d2.argmin(axis=1))
        assert np.allclose(dist, np.sqrt(d2.min(axis=1)), atol=1e-12)


def test_student_t_equidistant_is_uniform():
    C = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    Q, H, _, _ = student_t_distributions(np.zeros((1, 2)), C, alpha=1.0)
    assert np.allclose(Q[0], 0.25, atol=1e-12)
    assert abs(H[0] - np.log(4.0)) < 1e-12


def test_student_t_alpha_validation():
    with pytest.raises(ValueError):
        student_t_distributions(np.zeros((1, 2)), np.zeros((1, 2)), alpha=0.0)


def test_build_distributions_matches_single():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(4, 3))
    C = rng.normal(size=(3, 3))
    ids = [f"s{i}" for i in range(4)]
    batch = build_distributions(ids, X, C, alpha=2.0)
    assert [d.sample_id for d in batch] == ids
    for i, d in enumerate(batch):
        single = assignment_distribution(X[i], C, alpha=2.0, sample_id=ids[i])
        assert np.allclose(d.q, single.q, atol=1e-12)
        assert abs(d.entropy - single.entropy) < 1e-12
        assert d.nearest == single.nearest


def test_high_confidence_intersection_first():
    # a, b lead both orderings; c leads neither
    members = [_ad("a", 0.1, 1.0), _ad("b", 0.2, 2.0), _ad("c", 0.9, 3.0)]
    assert select_high_confidence(members, 2) == ["a", "b"]


def test_high_confidence_fill_from_distance():
    # top-2 by distance [a, b], by entropy [a, c]; intersection {a} then fill b
    members = [_ad("a", 0.1, 1.0), _ad("b", 0.5, 2.0), _ad("c", 0.2, 3.0)]
    assert select_high_confidence(members, 2) == ["a", "b"]


def test_high_confidence_disjoint_lists():
    members = [
        _ad("a", 0.9, 1.0),
        _ad("b", 0.8, 2.0),
        _ad("c", 0.2, 3.0),
        _ad("d", 0.1, 4.0),
    ]
    # distance picks a,b; entropy picks d,c; empty intersection falls back to
    # the distance ordering
    assert select_high_confidence(members, 2) == ["a", "b"]


def test_high_confidence_ties_by_id():
    members = [_ad("b", 0.5, 1.0), _ad("a", 0.5, 1.0), _ad("c", 0.5, 1.0)]
    assert select_high_confidence(members, 2) == ["a", "b"]


def test_high_confidence_short_pool():
    members = [_ad("b", 0.5, 2.0), _ad("a", 0.1, 1.0)]
    assert select_high_confidence(members, 5) == ["a", "b"]


def test_high_confidence_k_validation():
    with pytest.raises(ValueError):
        select_high_confidence([], 0)


def test_low_confidence_intersects_unstable():
    pool = [_ad("a", 0.9, 0), _ad("b", 0.8, 0), _ad("c", 0.7, 0), _ad("d", 0.1, 0)]
    got = select_low_confidence(pool, unstable_ids={"b", "d"}, k_low=3)
    assert got == ["b"]
    got = select_low_confidence(pool, unstable_ids={"b", "a"}, k_low=3)
    assert got == ["a", "b"]


def test_low_confidence_entropy_ties_by_id():
    pool = [_ad("b", 0.5, 0), _ad("a", 0.5, 0), _ad("c", 0.5, 0)]
    got = select_low_confidence(pool, unstable_ids={"a", "b", "c"}, k_low=2)
    assert got == ["a", "b"]


def test_low_confidence_zero_k():
    pool = [_ad("a", 0.9, 0)]
    assert select_low_confidence(pool, unstable_ids={"a"}, k_low=0) == []
    with pytest.raises(ValueError):
        select_low_confidence(pool, unstable_ids=set(), k_low=-1)
