"""Scikit-learn style front door for the discovery engine."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .config import RunConfig
from .datasets import DatasetBundle, Sample
from .oracle import make_backend
from .pipeline import run_training
from .evaluation import gcd_metrics
from .validation import normalize_rows


class PatternGCD(BaseEstimator):
    """Generalized category discovery over precomputed embeddings.

    fit() takes an embedding matrix and a label vector where -1 marks
    unlabeled rows; non-negative labels define the known classes.  Optional
    per-row texts power the pattern oracle; without texts the oracle has
    nothing to mine and the run degrades to clustering plus prototypes.

    Parameters mirror RunConfig; ``oracle`` is "mock", "http", or any object
    with a complete(messages) method.
    """

    def __init__(
        self,
        n_classes=None,
        oracle="mock",
        seed=0,
        batch_size=32,
        learning_rate=1e-5,
        epochs=50,
        tau=0.07,
        beta=0.8,
        omega=0.9,
        k_high=50,
        k_low=500,
        sigma=0.5,
        alpha=1.0,
        interval=5,
        kmeans_runs=5,
        negatives=10,
        rho=1.0,
        out_dim=None,
    ):
        self.n_classes = n_classes
        self.oracle = oracle
        self.seed = seed
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.tau = tau
        self.beta = beta
        self.omega = omega
        self.k_high = k_high
        self.k_low = k_low
        self.sigma = sigma
        self.alpha = alpha
        self.interval = interval
        self.kmeans_runs = kmeans_runs
        self.negatives = negatives
        self.rho = rho
        self.out_dim = out_dim

    def _config(self) -> RunConfig:
        return RunConfig(
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            tau=self.tau,
            beta=self.beta,
            omega=self.omega,
            k_high=self.k_high,
            k_low=self.k_low,
            sigma=self.sigma,
            alpha=self.alpha,
            interval=self.interval,
            kmeans_runs=self.kmeans_runs,
            negatives=self.negatives,
            rho=self.rho,
            out_dim=self.out_dim,
        ).validate()

    def _backend(self):
        if hasattr(self.oracle, "complete"):
            return self.oracle
        if isinstance(self.oracle, str):
            return make_backend(self.oracle)
        raise ValueError("oracle must be a backend name or a chat backend object")

    def _bundle(self, X, y, texts) -> DatasetBundle:
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        if y.shape != (X.shape[0],):
            raise ValueError("y must be one label per row; use -1 for unlabeled")
        if texts is not None and len(texts) != X.shape[0]:
            raise ValueError("texts must align with X rows")
        X = normalize_rows(X)
        known = sorted(int(c) for c in np.unique(y[y >= 0]))
        if not known:
            raise ValueError("need at least one labeled row (y >= 0)")
        K = self.n_classes if self.n_classes is not None else len(known) + 1
        if K < max(known) + 1:
            raise ValueError("n_classes is smaller than the largest label + 1")
        samples = []
        eval_labels: dict[str, int] = {}
        for i in range(X.shape[0]):
            text = None if texts is None else texts[i]
            emb = X[i].copy()
            emb.setflags(write=False)
            if y[i] >= 0:
                samples.append(Sample(f"u{i:06d}", text, emb, int(y[i]), "labeled"))
            else:
                samples.append(Sample(f"u{i:06d}", text, emb, None, "unlabeled"))
        return DatasetBundle(samples, K, known, X.shape[1], eval_labels)

    def fit(self, X, y, texts=None):
        """Run the full training loop on embeddings X with partial labels y."""
        bundle = self._bundle(X, y, texts)
        result = run_training(
            bundle, self._config(), self._backend(), seed=self.seed, out_dir=None
        )
        self.n_features_in_ = bundle.dim
        self.classes_ = np.arange(bundle.K)
        self.known_classes_ = np.array(sorted(bundle.known_classes))
        self.head_ = result.head
        self.prototypes_ = result.prototypes
        self.patterns_ = result.store.ordered() if result.store is not None else []
        self.history_ = result.history
        self.pseudo_labels_ = {sid: rec.current for sid, rec in result.records.items()}
        return self

    def _check_fitted(self):
        if not hasattr(self, "head_"):
            raise NotFittedError("this PatternGCD instance is not fitted yet")

    def transform(self, X) -> np.ndarray:
        """Project embeddings through the trained head."""
        self._check_fitted()
        X = check_array(X, dtype=np.float64)
        return self.head_(normalize_rows(X))

    def predict(self, X) -> np.ndarray:
        """Assign each row the class of its highest-cosine prototype."""
        self._check_fitted()
        if not self.prototypes_:
            raise NotFittedError("no prototypes were built (epochs=0?); cannot predict")
        Z = self.transform(X)
        class_ids = sorted(self.prototypes_)
        P = np.stack([self.prototypes_[c] for c in class_ids])
        return np.asarray(class_ids, dtype=int)[(Z @ P.T).argmax(axis=1)]

    def score(self, X, y) -> float:
        """Harmonic mean of known/novel accuracy (falls back to whichever side exists)."""
        self._check_fitted()
        pred = self.predict(X)
        m = gcd_metrics(pred, np.asarray(y, dtype=int), set(self.known_classes_), len(self.classes_))
        if m.h_score is not None:
            return m.h_score
        return m.acc_known if m.acc_known is not None else (m.acc_novel or 0.0)
