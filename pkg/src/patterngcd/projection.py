"""Trainable projection head: affine map followed by L2 normalization."""
from __future__ import annotations

import numpy as np

from .validation import as_float_matrix


class ProjectionHead:
    """z = (W x + b) / ||W x + b||, trained by plain SGD.

    Starts as the identity when the output width equals the input width, so
    an untrained head reproduces the raw embedding geometry exactly.
    """

    def __init__(self, W: np.ndarray, b: np.ndarray):
        W = np.asarray(W, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if W.ndim != 2 or b.shape != (W.shape[0],):
            raise ValueError("W must be (out, in) and b must be (out,)")
        self.W = W
        self.b = b

    @classmethod
    def create(cls, in_dim: int, out_dim: int | None = None, seed: int = 0) -> "ProjectionHead":
        out_dim = in_dim if out_dim is None else int(out_dim)
        if out_dim == in_dim:
            W = np.eye(in_dim)
        else:
            rng = np.random.default_rng(seed)
            A = rng.normal(size=(max(in_dim, out_dim), max(in_dim, out_dim)))
            Q, _ = np.linalg.qr(A)
            W = Q[:out_dim, :in_dim]
        return cls(W, np.zeros(out_dim))

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def forward(self, X) -> np.ndarray:
        X = as_float_matrix(X, "X")
        U = X @ self.W.T + self.b
        norms = np.linalg.norm(U, axis=1, keepdims=True)
        if np.any(norms < 1e-12):
            raise ValueError("projection collapsed to zero norm")
        return U / norms

    __call__ = forward

    def backward(self, X, dZ) -> tuple[np.ndarray, np.ndarray]:
        """Parameter gradients for upstream dL/dZ at inputs X.

        With u = Wx + b and z = u/||u||:  dL/du = (dL/dz - (z . dL/dz) z) / ||u||.
        """
        X = as_float_matrix(X, "X")
        dZ = np.asarray(dZ, dtype=np.float64)
        U = X @ self.W.T + self.b
        norms = np.linalg.norm(U, axis=1, keepdims=True)
        Z = U / norms
        dU = (dZ - (Z * dZ).sum(axis=1, keepdims=True) * Z) / norms
        dW = dU.T @ X
        db = dU.sum(axis=0)
        return dW, db

    def step(self, dW, db, lr: float) -> None:
        self.W -= lr * dW
        self.b -= lr * db

    def copy(self) -> "ProjectionHead":
        return ProjectionHead(self.W.copy(), self.b.copy())

    def state(self) -> dict:
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "ProjectionHead":
        return cls(np.asarray(state["W"]), np.asarray(state["b"]))
