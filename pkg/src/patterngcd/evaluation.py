"""Hungarian-aligned clustering accuracy and discovery metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .assignment import hungarian


def aligned_accuracy(predicted, truth, K: int) -> tuple[float, tuple[int, ...]]:
    """Best-permutation accuracy between predicted ids and true labels.

    A single K x K contingency table is built and one Hungarian alignment
    maximizes the matched mass.  Returns the accuracy and the permutation as
    a tuple mapping predicted id -> true id.
    """
    predicted = np.asarray(predicted, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValueError("predicted and truth must be equal-length 1-D arrays")
    if predicted.size == 0:
        raise ValueError("empty evaluation set")
    if predicted.min() < 0 or predicted.max() >= K or truth.min() < 0 or truth.max() >= K:
        raise ValueError(f"labels must lie in [0, {K})")
    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (predicted, truth), 1)
    sol = hungarian(-counts.astype(np.float64))
    perm = [0] * K
    for r, c in sol.pairs:
        perm[r] = c
    correct = sum(counts[r, c] for r, c in sol.pairs)
    return float(correct) / predicted.size, tuple(perm)


def h_score(acc_known: float | None, acc_novel: float | None) -> float | None:
    """Harmonic mean of the known and novel accuracies.

    Zero if either side is zero; None if either side is undefined.
    """
    if acc_known is None or acc_novel is None:
        return None
    if acc_known == 0.0 or acc_novel == 0.0:
        return 0.0
    return 2.0 * acc_known * acc_novel / (acc_known + acc_novel)


@dataclass(frozen=True)
class GcdMetrics:
    acc_known: float | None
    acc_novel: float | None
    h_score: float | None
    accuracy: float
    n_test: int
    permutation: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "acc_k": self.acc_known,
            "acc_n": self.acc_novel,
            "h_score": self.h_score,
            "accuracy": self.accuracy,
            "n_test": self.n_test,
            "permutation": list(self.permutation),
        }


def gcd_metrics(predicted, truth, known_classes, K: int) -> GcdMetrics:
    """Discovery metrics under one global alignment.

    The permutation is fitted once on the full test set; the known and novel
    accuracies are then read off the true-known and true-novel subsets under
    that same mapping.  A side with no test samples reports None.
    """
    predicted = np.asarray(predicted, dtype=int)
    truth = np.asarray(truth, dtype=int)
    acc, perm = aligned_accuracy(predicted, truth, K)
    mapped = np.asarray(perm, dtype=int)[predicted]
    correct = mapped == truth
    known = np.isin(truth, sorted(int(c) for c in known_classes))
    acc_k = float(correct[known].mean()) if known.any() else None
    acc_n = float(correct[~known].mean()) if (~known).any() else None
    return GcdMetrics(
        acc_known=acc_k,
        acc_novel=acc_n,
        h_score=h_score(acc_k, acc_n),
        accuracy=acc,
        n_test=int(predicted.size),
        permutation=perm,
    )


def write_confusion_csv(predicted, truth, K: int, permutation, path) -> None:
    """Aligned confusion matrix: rows true classes, columns mapped predictions."""
    predicted = np.asarray(predicted, dtype=int)
    truth = np.asarray(truth, dtype=int)
    mapped = np.asarray(permutation, dtype=int)[predicted]
    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (truth, mapped), 1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\predicted"] + [str(c) for c in range(K)])
        for r in range(K):
            writer.writerow([str(r)] + [str(int(v)) for v in counts[r]])
