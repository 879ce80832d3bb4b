"""Contrastive and prototype objectives with analytic gradients.

All similarities are cosine.  Gradients are exact for arbitrary nonzero
input vectors (the cosine is differentiated through the normalization), so
finite-difference checks can perturb raw inputs freely.
"""
from __future__ import annotations

import numpy as np


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("zero-norm vector in similarity")
    return v / n, n


def cosine_sim_grad(a, b):
    """Cosine similarity with gradients w.r.t. both raw vectors.

    d s / d a = (b_hat - s * a_hat) / ||a||, symmetrically for b.
    """
    ua, na = _unit(a)
    ub, nb = _unit(b)
    s = float(ua @ ub)
    ga = (ub - s * ua) / na
    gb = (ua - s * ub) / nb
    return s, ga, gb


def _log_softmax(logits):
    m = logits.max()
    z = logits - m
    lse = m + np.log(np.exp(z).sum())
    return logits - lse, lse


def info_nce(anchor, positive, negatives, tau: float):
    """InfoNCE over one positive and N negatives.

    loss = -log exp(s+/tau) / (exp(s+/tau) + sum_k exp(s-_k/tau))

    Returns (loss, grad_anchor, grad_targets) where grad_targets stacks the
    positive gradient first, then one row per negative.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    anchor = np.asarray(anchor, dtype=np.float64)
    targets = [np.asarray(positive, dtype=np.float64)] + [
        np.asarray(v, dtype=np.float64) for v in negatives
    ]
    sims = np.empty(len(targets))
    g_anchor_parts = np.empty((len(targets), anchor.shape[0]))
    g_targets = np.empty((len(targets), anchor.shape[0]))
    for k, t in enumerate(targets):
        s, ga, gt = cosine_sim_grad(anchor, t)
        sims[k] = s
        g_anchor_parts[k] = ga
        g_targets[k] = gt
    logits = sims / tau
    log_p, _ = _log_softmax(logits)
    loss = float(-log_p[0])
    coef = np.exp(log_p)
    coef[0] -= 1.0  # d loss / d logits
    coef /= tau
    grad_anchor = coef @ g_anchor_parts
    grad_targets = coef[:, None] * g_targets
    return loss, grad_anchor, grad_targets


def prototype_loss(sample, own_prototype, negative_prototypes, tau: float, weight: float = 1.0):
    """Weighted InfoNCE of a sample against its prototype.

    ``weight`` implements the reassignment emphasis: samples whose pseudo
    label just changed can count more.  weight == 0 short-circuits to an
    exact zero loss and zero gradient.
    """
    if weight < 0:
        raise ValueError("weight must be non-negative")
    sample = np.asarray(sample, dtype=np.float64)
    if weight == 0.0:
        dim = sample.shape[0]
        return 0.0, np.zeros(dim), np.zeros((1 + len(negative_prototypes), dim))
    loss, g_anchor, g_targets = info_nce(sample, own_prototype, negative_prototypes, tau)
    return weight * loss, weight * g_anchor, weight * g_targets


def pl_objectives(
    batch,
    labels,
    weights,
    known_classes,
    proto_unlabeled,
    proto_labeled,
    tau: float,
    n_negatives: int,
    rng: np.random.Generator,
):
    """Pseudo-label prototype objectives for a mixed batch.

    Novel-labeled samples pull toward their unlabeled-side prototype against
    other novel prototypes.  Known-labeled samples get two terms: one against
    the unlabeled-side known prototypes and one against the labeled-data
    prototypes.  Each term is a mean over its sample subset.

    Args:
        batch: (n, D) raw sample vectors.
        labels: per-sample pseudo labels.
        weights: per-sample loss weights (reassignment emphasis).
        known_classes: set of known class ids.
        proto_unlabeled: class id -> prototype vector (unlabeled side).
        proto_labeled: class id -> prototype vector (labeled side).
        n_negatives: negatives per term, capped at the available pool.
        rng: generator used for negative draws.

    Returns (novel_loss, known_loss, grads) with grads shaped like batch.
    """
    batch = np.asarray(batch, dtype=np.float64)
    labels = [int(y) for y in labels]
    weights = np.asarray(weights, dtype=np.float64)
    known = {int(c) for c in known_classes}
    grads = np.zeros_like(batch)

    novel_proto_ids = sorted(c for c in proto_unlabeled if c not in known)
    known_proto_ids = sorted(c for c in proto_unlabeled if c in known)
    labeled_ids = sorted(proto_labeled)

    def draw(pool):
        if not pool:
            return []
        take = min(n_negatives, len(pool))
        idx = rng.choice(len(pool), size=take, replace=False)
        return [pool[i] for i in sorted(idx)]

    def term(i, own, pool_ids, table):
        negs = [table[c] for c in draw([c for c in pool_ids if c != labels[i]])]
        loss, g, _ = prototype_loss(batch[i], own, negs, tau, weight=float(weights[i]))
        return loss, g

    novel_sum, novel_n = 0.0, 0
    known_sum, known_n = 0.0, 0
    for i, y in enumerate(labels):
        if y not in proto_unlabeled:
            raise KeyError(f"no prototype for class {y}")
        if y in known:
            l1, g1 = term(i, proto_unlabeled[y], known_proto_ids, proto_unlabeled)
            if y not in proto_labeled:
                raise KeyError(f"no labeled prototype for class {y}")
            l2, g2 = term(i, proto_labeled[y], labeled_ids, proto_labeled)
            known_sum += l1 + l2
            grads[i] += g1 + g2
            known_n += 1
        else:
            l1, g1 = term(i, proto_unlabeled[y], novel_proto_ids, proto_unlabeled)
            novel_sum += l1
            grads[i] += g1
            novel_n += 1
    novel_loss = novel_sum / novel_n if novel_n else 0.0
    known_loss = known_sum / known_n if known_n else 0.0
    for i, y in enumerate(labels):
        grads[i] /= max(known_n, 1) if y in known else max(novel_n, 1)
    return novel_loss, known_loss, grads


def ce_loss(batch, labels, proto_labeled, tau: float):
    """Cross-entropy over cosine logits against labeled prototypes.

    Logits for sample i are cos(x_i, P_c) / tau over the sorted known class
    ids; the target must be one of them.  Returns the batch mean loss and
    per-sample gradients.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    batch = np.asarray(batch, dtype=np.float64)
    classes = sorted(proto_labeled)
    if not classes:
        raise ValueError("no labeled prototypes")
    col = {c: j for j, c in enumerate(classes)}
    grads = np.zeros_like(batch)
    total = 0.0
    n = batch.shape[0]
    for i in range(n):
        y = int(labels[i])
        if y not in col:
            raise ValueError(f"label {y} has no prototype")
        sims = np.empty(len(classes))
        g_parts = np.empty((len(classes), batch.shape[1]))
        for j, c in enumerate(classes):
            s, ga, _ = cosine_sim_grad(batch[i], proto_labeled[c])
            sims[j] = s
            g_parts[j] = ga
        log_p, _ = _log_softmax(sims / tau)
        total += -float(log_p[col[y]])
        coef = np.exp(log_p)
        coef[col[y]] -= 1.0
        grads[i] = (coef / tau) @ g_parts
    return total / n, grads / n
