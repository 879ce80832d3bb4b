"""Prototype construction and the per-epoch optimization step."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError
from .losses import ce_loss, info_nce, pl_objectives
from .projection import ProjectionHead
from .validation import normalize_rows

EPOCH_LOSS_KEYS = ("instance", "novel_pl", "known_pl", "ce", "total")


def build_prototypes(class_centers: dict[int, np.ndarray], pattern_vectors: dict[int, np.ndarray | None], beta: float) -> dict[int, np.ndarray]:
    """Blend class centers with projected pattern embeddings.

    P_c = normalize(beta * mu_c + (1 - beta) * f_c); classes without a
    usable pattern vector keep their center.  Inputs are unit vectors.
    """
    if not (0.0 <= beta <= 1.0):
        raise ValueError("beta must lie in [0, 1]")
    out: dict[int, np.ndarray] = {}
    for c, mu in class_centers.items():
        f = pattern_vectors.get(c)
        if f is None:
            out[c] = normalize_rows(np.asarray(mu).reshape(1, -1))[0]
        else:
            blended = beta * np.asarray(mu) + (1.0 - beta) * np.asarray(f)
            out[c] = normalize_rows(blended.reshape(1, -1))[0]
    return out


def ema_update(previous: dict[int, np.ndarray], fresh: dict[int, np.ndarray], omega: float) -> dict[int, np.ndarray]:
    """Exponential moving average of prototypes, renormalized per class.

    Classes new this round enter at their fresh value; classes that vanished
    keep their previous value so every class id stays covered.
    """
    if not (0.0 <= omega <= 1.0):
        raise ValueError("omega must lie in [0, 1]")
    out: dict[int, np.ndarray] = {}
    for c, vec in fresh.items():
        if c in previous:
            blended = omega * previous[c] + (1.0 - omega) * vec
            out[c] = normalize_rows(blended.reshape(1, -1))[0]
        else:
            out[c] = vec.copy()
    for c, vec in previous.items():
        if c not in out:
            out[c] = vec.copy()
    return out


@dataclass
class EpochReport:
    """Mean loss terms over one epoch, keyed by EPOCH_LOSS_KEYS."""

    losses: dict[str, float] = field(default_factory=dict)
    n_batches: int = 0

    def to_json(self) -> dict:
        return {k: self.losses.get(k, 0.0) for k in EPOCH_LOSS_KEYS}


class _Mean:
    def __init__(self):
        self.total = 0.0
        self.count = 0

    def add(self, value: float, weight: int = 1):
        self.total += value * weight
        self.count += weight

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0


def train_epoch(
    head: ProjectionHead,
    X_unlabeled: np.ndarray,
    unlabeled_ids: list[str],
    records: dict,
    X_labeled: np.ndarray,
    labeled_labels: np.ndarray,
    prototypes: dict[int, np.ndarray],
    labeled_prototypes: dict[int, np.ndarray],
    known_classes,
    processed_ids: set[str],
    config,
    rng: np.random.Generator,
) -> EpochReport:
    """One optimization epoch over the unlabeled pool.

    Per minibatch: an instance-level InfoNCE term for oracle-processed
    anchors (positive: same pseudo-label peer; negatives: other labels), the
    prototype pseudo-label objectives for the whole batch, and a
    cross-entropy term on a cycled labeled slice.  Gradients flow through
    the shared projection head, which is updated in place by SGD.
    """
    n = X_unlabeled.shape[0]
    labels = np.array([records[sid].current for sid in unlabeled_ids], dtype=int)
    weights = np.array(
        [config.rho if records[sid].changed else 1.0 for sid in unlabeled_ids], dtype=np.float64
    )
    known = {int(c) for c in known_classes}
    processed_mask = np.array([sid in processed_ids for sid in unlabeled_ids], dtype=bool)

    by_label: dict[int, np.ndarray] = {
        int(c): np.flatnonzero(labels == c) for c in np.unique(labels)
    }

    order = rng.permutation(n)
    n_labeled = X_labeled.shape[0]
    labeled_order = rng.permutation(n_labeled)
    labeled_pos = 0

    report = EpochReport()
    means = {k: _Mean() for k in EPOCH_LOSS_KEYS}
    batch_size = config.batch_size

    for start in range(0, n, batch_size):
        batch_idx = order[start : start + batch_size]

        # pair each eligible anchor with a positive and N negatives
        il_triples = []  # (anchor row in batch, positive index, negative indices)
        for row, i in enumerate(batch_idx):
            if not processed_mask[i]:
                continue
            same = by_label[labels[i]]
            same = same[same != i]
            if same.size == 0:
                continue
            diff_pool = np.flatnonzero(labels != labels[i])
            if diff_pool.size == 0:
                continue
            pos = int(same[rng.integers(same.size)])
            take = min(config.negatives, diff_pool.size)
            negs = diff_pool[rng.choice(diff_pool.size, size=take, replace=False)]
            il_triples.append((row, pos, negs))

        lab_take = min(batch_size, n_labeled)
        if labeled_pos + lab_take > n_labeled:
            labeled_order = rng.permutation(n_labeled)
            labeled_pos = 0
        lab_idx = labeled_order[labeled_pos : labeled_pos + lab_take]
        labeled_pos += lab_take

        # forward every unlabeled row this step touches exactly once
        extra = sorted(
            {int(p) for _, p, _ in il_triples}
            | {int(x) for _, _, negs in il_triples for x in negs}
        )
        u_rows = list(batch_idx) + [e for e in extra if e not in set(batch_idx)]
        u_pos = {int(i): r for r, i in enumerate(u_rows)}
        Zu = head(X_unlabeled[u_rows])
        dZu = np.zeros_like(Zu)

        il_mean = _Mean()
        for row, pos, negs in il_triples:
            a = Zu[row]
            p = Zu[u_pos[pos]]
            ns = [Zu[u_pos[int(x)]] for x in negs]
            loss, ga, gts = info_nce(a, p, ns, config.tau)
            il_mean.add(loss)
            dZu[row] += ga
            dZu[u_pos[pos]] += gts[0]
            for j, x in enumerate(negs):
                dZu[u_pos[int(x)]] += gts[j + 1]
        if il_triples:
            dZu /= len(il_triples)

        Zb = Zu[: len(batch_idx)]
        novel_loss, known_loss, g_pl = pl_objectives(
            Zb,
            labels[batch_idx],
            weights[batch_idx],
            known,
            prototypes,
            labeled_prototypes,
            config.tau,
            config.negatives,
            rng,
        )
        dZu[: len(batch_idx)] += g_pl

        Zl = head(X_labeled[lab_idx])
        ce, g_ce = ce_loss(Zl, labeled_labels[lab_idx], labeled_prototypes, config.tau)

        total = il_mean.mean + novel_loss + known_loss + ce
        if not np.isfinite(total):
            raise TrainingError(
                f"non-finite loss (instance={il_mean.mean}, novel={novel_loss}, "
                f"known={known_loss}, ce={ce})"
            )

        dW_u, db_u = head.backward(X_unlabeled[u_rows], dZu)
        dW_l, db_l = head.backward(X_labeled[lab_idx], g_ce)
        head.step(dW_u + dW_l, db_u + db_l, config.learning_rate)

        means["instance"].add(il_mean.mean)
        means["novel_pl"].add(novel_loss)
        means["known_pl"].add(known_loss)
        means["ce"].add(ce)
        means["total"].add(total)
        report.n_batches += 1

    report.losses = {k: m.mean for k, m in means.items()}
    return report
