"""Prototype construction, EMA updates, and the epoch step."""
import numpy as np
import pytest

from patterngcd.config import RunConfig
from patterngcd.datasets import PseudoLabelRecord
from patterngcd.errors import TrainingError
from patterngcd.projection import ProjectionHead
from patterngcd.trainer import EpochReport, build_prototypes, ema_update, train_epoch


def test_build_prototypes_blend_fixture():
    # beta 0.8 over orthogonal unit vectors: [0.8, 0.2] renormalized
    centers = {0: np.array([1.0, 0.0])}
    patterns = {0: np.array([0.0, 1.0])}
    out = build_prototypes(centers, patterns, beta=0.8)
    assert np.allclose(out[0], [0.9701, 0.2425], atol=1e-4)
    want = np.array([0.8, 0.2]) / np.linalg.norm([0.8, 0.2])
    assert np.allclose(out[0], want, atol=1e-12)


def test_build_prototypes_without_pattern_keeps_center():
    centers = {1: np.array([3.0, 4.0])}
    out = build_prototypes(centers, {}, beta=0.5)
    assert np.allclose(out[1], [0.6, 0.8], atol=1e-12)
    out = build_prototypes(centers, {1: None}, beta=0.5)
    assert np.allclose(out[1], [0.6, 0.8], atol=1e-12)


def test_build_prototypes_beta_extremes_and_bounds():
    centers = {0: np.array([1.0, 0.0])}
    patterns = {0: np.array([0.0, 1.0])}
    assert np.allclose(build_prototypes(centers, patterns, 1.0)[0], [1, 0], atol=1e-12)
    assert np.allclose(build_prototypes(centers, patterns, 0.0)[0], [0, 1], atol=1e-12)
    with pytest.raises(ValueError):
        build_prototypes(centers, patterns, 1.5)


def test_ema_update_weights_previous():
    prev = {0: np.array([1.0, 0.0])}
    fresh = {0: np.array([0.0, 1.0])}
    out = ema_update(prev, fresh, omega=0.9)
    want = np.array([0.9, 0.1]) / np.linalg.norm([0.9, 0.1])
    assert np.allclose(out[0], want, atol=1e-12)
    # omega 1 freezes, omega 0 replaces
    assert np.allclose(ema_update(prev, fresh, 1.0)[0], [1, 0], atol=1e-12)
    assert np.allclose(ema_update(prev, fresh, 0.0)[0], [0, 1], atol=1e-12)
    with pytest.raises(ValueError):
        ema_update(prev, fresh, -0.1)


def test_ema_update_class_coverage():
    prev = {0: np.array([1.0, 0.0]), 1: np.array([0.0, 1.0])}
    fresh = {0: np.array([0.0, 1.0]), 2: np.array([1.0, 1.0]) / np.sqrt(2)}
    out = ema_update(prev, fresh, omega=0.5)
    assert set(out) == {0, 1, 2}
    # vanished class keeps its previous vector, new class enters fresh
    assert np.array_equal(out[1], prev[1])
    assert np.array_equal(out[2], fresh[2])


def test_ema_contracts_toward_previous():
    rng = np.random.default_rng(0)
    for _ in range(25):
        p = rng.normal(size=4)
        f = rng.normal(size=4)
        p /= np.linalg.norm(p)
        f /= np.linalg.norm(f)
        out = ema_update({0: p}, {0: f}, omega=0.7)[0]
        assert abs(np.linalg.norm(out) - 1.0) < 1e-12
        # blend sits at least as close to the previous vector as fresh does
        assert out @ p >= f @ p - 1e-12


def _epoch_setup(seed=0, n=24, d=6):
    rng = np.random.default_rng(seed)
    centers = {0: np.eye(d)[0], 1: np.eye(d)[1], 2: np.eye(d)[2]}
    ids, rows, labels = [], [], []
    for i in range(n):
        c = i % 3
        v = centers[c] + 0.3 * rng.normal(size=d)
        ids.append(f"u{i}")
        rows.append(v / np.linalg.norm(v))
        labels.append(c)
    X = np.array(rows)
    records = {
        sid: PseudoLabelRecord(sample_id=sid, current=c, previous=c, changed=False, source="cluster")
        for sid, c in zip(ids, labels)
    }
    Xl = np.array([centers[c] for c in (0, 1, 0, 1)])
    yl = np.array([0, 1, 0, 1])
    protos = {c: centers[c] for c in (0, 1, 2)}
    lab_protos = {0: centers[0], 1: centers[1]}
    return X, ids, records, Xl, yl, protos, lab_protos


def _config(**kw):
    base = dict(batch_size=8, learning_rate=0.05, tau=0.5, negatives=3, rho=1.0)
    base.update(kw)
    return RunConfig().replace(**base)


def test_train_epoch_is_deterministic():
    X, ids, records, Xl, yl, protos, lab_protos = _epoch_setup()
    reports, weights = [], []
    for _ in range(2):
        head = ProjectionHead.create(X.shape[1])
        rep = train_epoch(
            head, X, ids, records, Xl, yl, protos, lab_protos,
            known_classes={0, 1}, processed_ids=set(ids),
            config=_config(), rng=np.random.default_rng(42),
        )
        reports.append(rep.to_json())
        weights.append((head.W.copy(), head.b.copy()))
    assert reports[0] == reports[1]
    assert np.array_equal(weights[0][0], weights[1][0])
    assert np.array_equal(weights[0][1], weights[1][1])


def test_train_epoch_reduces_loss():
    X, ids, records, Xl, yl, protos, lab_protos = _epoch_setup()
    head = ProjectionHead.create(X.shape[1])
    rng = np.random.default_rng(7)
    totals = []
    for _ in range(8):
        rep = train_epoch(
            head, X, ids, records, Xl, yl, protos, lab_protos,
            known_classes={0, 1}, processed_ids=set(ids),
            config=_config(), rng=rng,
        )
        totals.append(rep.losses["total"])
        assert rep.n_batches == 3
    assert totals[-1] < totals[0]


def test_train_epoch_rho_scales_pl_terms():
    X, ids, records, Xl, yl, protos, lab_protos = _epoch_setup()
    flagged = {
        sid: PseudoLabelRecord(
            sample_id=sid, current=r.current, previous=r.previous, changed=True, source="cluster"
        )
        for sid, r in records.items()
    }
    outs = []
    for recs, rho in ((records, 1.0), (flagged, 2.0)):
        head = ProjectionHead.create(X.shape[1])
        rep = train_epoch(
            head, X, ids, recs, Xl, yl, protos, lab_protos,
            known_classes={0, 1}, processed_ids=set(),
            config=_config(rho=rho, batch_size=len(ids), epochs=1), rng=np.random.default_rng(3),
        )
        outs.append(rep.losses)
    # single batch, losses logged before the step: doubling every weight
    # doubles both pseudo-label terms and nothing else
    assert abs(outs[1]["novel_pl"] - 2.0 * outs[0]["novel_pl"]) < 1e-9
    assert abs(outs[1]["known_pl"] - 2.0 * outs[0]["known_pl"]) < 1e-9
    assert abs(outs[1]["ce"] - outs[0]["ce"]) < 1e-9


def test_train_epoch_instance_term_needs_processed_ids():
    X, ids, records, Xl, yl, protos, lab_protos = _epoch_setup()
    head = ProjectionHead.create(X.shape[1])
    rep = train_epoch(
        head, X, ids, records, Xl, yl, protos, lab_protos,
        known_classes={0, 1}, processed_ids=set(),
        config=_config(), rng=np.random.default_rng(1),
    )
    assert rep.losses["instance"] == 0.0
    assert rep.losses["total"] > 0.0


def test_train_epoch_non_finite_raises():
    X, ids, records, Xl, yl, protos, lab_protos = _epoch_setup()
    protos[2] = np.full(X.shape[1], np.nan)
    head = ProjectionHead.create(X.shape[1])
    with pytest.raises(TrainingError, match="non-finite loss"):
        train_epoch(
            head, X, ids, records, Xl, yl, protos, lab_protos,
            known_classes={0, 1}, processed_ids=set(),
            config=_config(), rng=np.random.default_rng(1),
        )


def test_epoch_report_json_has_all_keys():
    rep = EpochReport(losses={"instance": 1.0})
    out = rep.to_json()
    assert set(out) == {"instance", "novel_pl", "known_pl", "ce", "total"}
    assert out["ce"] == 0.0
