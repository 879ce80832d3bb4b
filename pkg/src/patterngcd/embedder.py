"""Maps pattern text into the dataset's raw embedding space.

The engine never calls a text encoder at training time; instead each token
is anchored to the mean raw embedding of the training samples whose text
contains it, and a pattern embeds as the normalized mean over its known
tokens.  Patterns sharing no vocabulary with the corpus embed to None and
the caller falls back to center-only prototypes.
"""
from __future__ import annotations

import re

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class LexicalMatchEmbedder:
    def __init__(self, bundle):
        sums: dict[str, np.ndarray] = {}
        counts: dict[str, int] = {}
        for split in ("labeled", "unlabeled"):
            for i in bundle.indices(split):
                s = bundle.samples[i]
                if not s.text:
                    continue
                for tok in set(_tokenize(s.text)):
                    if tok in sums:
                        sums[tok] += s.embedding
                        counts[tok] += 1
                    else:
                        sums[tok] = s.embedding.copy()
                        counts[tok] = 1
        self._means = {tok: sums[tok] / counts[tok] for tok in sums}
        self.dim = bundle.dim

    def embed(self, text: str) -> np.ndarray | None:
        """Raw-space vector for a pattern text, or None without overlap."""
        vecs = [self._means[tok] for tok in set(_tokenize(text)) if tok in self._means]
        if not vecs:
            return None
        v = np.mean(vecs, axis=0)
        n = np.linalg.norm(v)
        if n < 1e-12:
            return None
        return v / n
