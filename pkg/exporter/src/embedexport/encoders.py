"""Sentence encoders.

The default is a signed feature-hash bag of tokens: no weights to fetch,
byte-for-byte deterministic across platforms, and good enough to drive the
engine's ingestion and training paths on toy corpora. Pretrained models
load lazily behind the ``st:`` prefix so the dependency stays optional.
"""
from __future__ import annotations

import hashlib
import re

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EncoderLoadError(RuntimeError):
    """The encoder name could not be resolved to a working model."""


class HashEncoder:
    def __init__(self, dim: int = 256):
        if dim < 8:
            raise EncoderLoadError(f"hash dim must be >= 8, got {dim}")
        self.dim = dim

    @property
    def name(self) -> str:
        return f"hash:{self.dim}"

    def encode(self, texts: list[str], pool: str = "cls") -> np.ndarray:
        # pool is accepted for interface parity; hashing has no token axis
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for token in _TOKEN_RE.findall(text.lower()):
                digest = hashlib.sha1(token.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dim
                out[i, bucket] += 1.0 if digest[4] & 1 else -1.0
        return out


class SentenceTransformerEncoder:
    """First-token or mean pooling over a pretrained transformer."""

    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderLoadError(
                f"sentence-transformers is not installed ({exc})"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as exc:  # hub and IO failures take many shapes
            raise EncoderLoadError(f"cannot load model {model_name!r}: {exc}") from exc
        self._name = model_name

    @property
    def name(self) -> str:
        return f"st:{self._name}"

    @property
    def dim(self) -> int:
        return int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str], pool: str = "cls") -> np.ndarray:
        token_states = self._model.encode(
            texts, output_value="token_embeddings", convert_to_numpy=False
        )
        rows = []
        for states in token_states:
            arr = np.asarray(states.cpu() if hasattr(states, "cpu") else states)
            rows.append(arr[0] if pool == "cls" else arr.mean(axis=0))
        return np.stack(rows)


def load_encoder(name: str):
    """Resolve ``hash``, ``hash:DIM``, or ``st:MODEL``; raise EncoderLoadError."""
    if name == "hash":
        return HashEncoder()
    if name.startswith("hash:"):
        try:
            dim = int(name.split(":", 1)[1])
        except ValueError:
            raise EncoderLoadError(f"bad hash dimension in {name!r}") from None
        return HashEncoder(dim)
    if name.startswith("st:"):
        return SentenceTransformerEncoder(name.split(":", 1)[1])
    raise EncoderLoadError(f"unknown encoder {name!r} (use hash[:DIM] or st:MODEL)")
