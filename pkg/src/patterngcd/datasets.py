"""Dataset model, JSON-lines IO, and synthetic corpus generation.

A dataset file is JSON-lines: one header record ``{"K": int, "dim": int,
"known_classes": [int, ...]}`` followed by one record per sample with fields
``id``, ``text``, ``embedding``, ``label`` and ``split``.  Splits are
``labeled`` (known-class supervision), ``unlabeled`` (training pool, labels
held out) and ``test``.

Ground-truth labels of unlabeled and test samples are quarantined at load
time: they live in a side table that only the evaluation accessors read, so
nothing on the training path can touch them by accident.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .validation import normalize_rows

SPLITS = ("labeled", "unlabeled", "test")

PSEUDO_LABEL_SOURCES = (
    "cluster",
    "pattern-match",
    "consensus-reassign",
    "low-confidence-reassign",
)


@dataclass(frozen=True)
class Sample:
    """One data point: a frozen embedding plus optional text and label."""

    id: str
    text: str | None
    embedding: np.ndarray
    label: int | None
    split: str


@dataclass
class PseudoLabelRecord:
    """Current pseudo-label of one unlabeled sample and how it got it."""

    sample_id: str
    current: int
    previous: int | None = None
    changed: bool = False
    source: str = "cluster"
    stale: bool = False

    def __post_init__(self):
        if self.source not in PSEUDO_LABEL_SOURCES:
            raise ValueError(f"unknown pseudo-label source {self.source!r}")
        if self.changed and self.previous is None:
            raise ValueError("changed label requires a previous value")

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "current": self.current,
            "previous": self.previous,
            "changed": self.changed,
            "source": self.source,
            "stale": self.stale,
        }


class DatasetBundle:
    """Immutable container for one discovery dataset.

    Attributes:
        samples: tuple of Sample in file order.
        K: total number of classes (known + novel).
        known_classes: frozenset of known class ids.
        dim: embedding dimensionality.
    """

    def __init__(self, samples, K, known_classes, dim, eval_labels=None):
        self.samples = tuple(samples)
        self.K = int(K)
        self.known_classes = frozenset(int(c) for c in known_classes)
        self.dim = int(dim)
        self._eval_labels = dict(eval_labels or {})
        self._index = {s.id: i for i, s in enumerate(self.samples)}
        self._split_idx = {
            sp: np.array([i for i, s in enumerate(self.samples) if s.split == sp], dtype=int)
            for sp in SPLITS
        }
        self._validate()

    # -- construction checks -------------------------------------------------

    def _validate(self):
        if self.K < 2:
            raise DataFormatError("K must be at least 2")
        if not self.known_classes:
            raise DataFormatError("known_classes must be non-empty")
        if len(self.known_classes) > self.K:
            raise DataFormatError("more known classes than K")
        if any(c < 0 or c >= self.K for c in self.known_classes):
            raise DataFormatError("known class id outside [0, K)")
        if len(self._index) != len(self.samples):
            raise DataFormatError("duplicate sample id")
        if len(self._split_idx["labeled"]) == 0:
            raise DataFormatError("dataset has no labeled samples")
        if len(self._split_idx["unlabeled"]) == 0:
            raise DataFormatError("dataset has no unlabeled samples")
        for s in self.samples:
            if s.split not in SPLITS:
                raise DataFormatError(f"unknown split {s.split!r}")
            if s.embedding.shape != (self.dim,):
                raise DataFormatError(
                    f"sample {s.id}: embedding dimension {s.embedding.shape[-1]} != {self.dim}"
                )
            if abs(np.linalg.norm(s.embedding) - 1.0) > 1e-6:
                raise DataFormatError(f"sample {s.id}: embedding is not unit-norm")
            if s.split == "labeled":
                if s.label is None:
                    raise DataFormatError(f"labeled sample {s.id} has no label")
                if s.label not in self.known_classes:
                    raise DataFormatError(
                        f"labeled sample {s.id} has label {s.label} outside the known set"
                    )
        for sid, y in self._eval_labels.items():
            if y is not None and not (0 <= y < self.K):
                raise DataFormatError(f"sample {sid}: label {y} outside [0, K)")
        for i in self._split_idx["test"]:
            sid = self.samples[i].id
            if self._eval_labels.get(sid) is None:
                raise DataFormatError(f"test sample {sid} has no label")

    # -- accessors -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.samples)

    def indices(self, split: str) -> np.ndarray:
        return self._split_idx[split]

    def ids(self, split: str) -> list[str]:
        return [self.samples[i].id for i in self._split_idx[split]]

    def texts(self, split: str) -> list[str | None]:
        return [self.samples[i].text for i in self._split_idx[split]]

    def embedding_matrix(self, split: str) -> np.ndarray:
        idx = self._split_idx[split]
        if len(idx) == 0:
            return np.zeros((0, self.dim))
        return np.stack([self.samples[i].embedding for i in idx])

    def labeled_labels(self) -> np.ndarray:
        return np.array([self.samples[i].label for i in self._split_idx["labeled"]], dtype=int)

    def sample(self, sample_id: str) -> Sample:
        return self.samples[self._index[sample_id]]

    def text_of(self, sample_id: str) -> str | None:
        return self.samples[self._index[sample_id]].text

    # -- evaluation-only access ----------------------------------------------

    def eval_label(self, sample_id: str) -> int | None:
        """Ground-truth label of a quarantined (unlabeled/test) sample."""
        s = self.samples[self._index[sample_id]]
        if s.split == "labeled":
            return s.label
        return self._eval_labels.get(sample_id)

    def eval_labels(self, split: str) -> np.ndarray:
        ys = [self.eval_label(sid) for sid in self.ids(split)]
        if any(y is None for y in ys):
            raise DataFormatError(f"missing ground truth in split {split!r}")
        return np.array(ys, dtype=int)


# -- file IO -----------------------------------------------------------------


def _parse_header(obj: dict) -> tuple[int, int, list[int]]:
    try:
        K = int(obj["K"])
        dim = int(obj["dim"])
        known = [int(c) for c in obj["known_classes"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"line 1: bad header record ({exc})") from exc
    return K, dim, known


def load_dataset(path) -> DatasetBundle:
    """Read a JSON-lines dataset file into a validated bundle.

    Labels carried by unlabeled and test records are moved into the
    evaluation side table; the returned samples expose ``label`` only for
    the labeled split.
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"dataset not found: {path}")
    samples: list[Sample] = []
    eval_labels: dict[str, int] = {}
    header = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if header is None:
                header = _parse_header(obj)
                continue
            K, dim, known = header
            try:
                sid = str(obj["id"])
                split = obj["split"]
                raw = np.asarray(obj["embedding"], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"line {lineno}: bad sample record ({exc})") from exc
            if raw.ndim != 1 or raw.shape[0] != dim:
                raise DataFormatError(
                    f"line {lineno}: embedding dimension {raw.size} != {dim}"
                )
            if not np.isfinite(raw).all():
                raise DataFormatError(f"line {lineno}: non-finite embedding value")
            try:
                emb = normalize_rows(raw.reshape(1, -1))[0]
            except DataFormatError:
                raise DataFormatError(f"line {lineno}: zero-norm embedding") from None
            emb.setflags(write=False)
            label = obj.get("label")
            if label is not None:
                label = int(label)
                if not (0 <= label < K):
                    raise DataFormatError(f"line {lineno}: label {label} outside [0, K)")
            text = obj.get("text")
            if text is not None:
                text = str(text)
            if split == "labeled":
                samples.append(Sample(sid, text, emb, label, split))
            elif split in ("unlabeled", "test"):
                if split == "test" and label is None:
                    raise DataFormatError(f"line {lineno}: test sample without label")
                samples.append(Sample(sid, text, emb, None, split))
                if label is not None:
                    eval_labels[sid] = label
            else:
                raise DataFormatError(f"line {lineno}: unknown split {split!r}")
    if header is None:
        raise DataFormatError("line 1: missing header record")
    K, dim, known = header
    return DatasetBundle(samples, K, known, dim, eval_labels)


def write_dataset(bundle: DatasetBundle, path) -> None:
    """Write a bundle back to JSON-lines, restoring quarantined labels."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "K": bundle.K,
            "dim": bundle.dim,
            "known_classes": sorted(bundle.known_classes),
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for s in bundle.samples:
            label = s.label if s.split == "labeled" else bundle._eval_labels.get(s.id)
            rec = {
                "id": s.id,
                "text": s.text,
                "embedding": [float(v) for v in s.embedding],
                "label": label,
                "split": s.split,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# -- synthetic corpus --------------------------------------------------------

_FILLER_VOCAB_SIZE = 1000


def synth_gcd(seed, K=9, known=6, dim=16, sizes=None, noise=0.35) -> DatasetBundle:
    """Generate a synthetic discovery corpus with controllable difficulty.

    Class means are unit-normalized Gaussian draws; each sample is its class
    mean plus isotropic noise, renormalized.  Texts pair one class keyword
    with filler tokens so keyword-based pattern mining has signal.  The first
    ``known`` class ids form the known set; 10% of each known class (at least
    one sample) is labeled, the rest goes to the unlabeled pool, and a fresh
    test draw of 50% (at least two) per class is appended.
    """
    if sizes is None:
        sizes = [400, 200, 100, 50, 50, 50, 40, 30, 20]
    if len(sizes) != K:
        raise ValueError(f"sizes has {len(sizes)} entries, expected K={K}")
    if any(n < 2 for n in sizes):
        raise ValueError("every class needs at least 2 samples")
    if not (2 <= K) or not (1 <= known <= K):
        raise ValueError("need K >= 2 and 1 <= known <= K")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    means = normalize_rows(rng.normal(size=(K, dim)))

    def make_text(c):
        fillers = rng.integers(0, _FILLER_VOCAB_SIZE, size=3)
        return " ".join([f"topic{c:02d}"] + [f"w{v:04d}" for v in fillers])

    def draw(c):
        v = means[c] + noise * rng.normal(size=dim)
        return normalize_rows(v.reshape(1, -1))[0]

    samples: list[Sample] = []
    eval_labels: dict[str, int] = {}
    for c in range(K):
        n = sizes[c]
        n_labeled = math.ceil(0.1 * n) if c < known else 0
        for i in range(n):
            emb = draw(c)
            emb.setflags(write=False)
            sid = f"tr{c:02d}-{i:04d}"
            text = make_text(c)
            if i < n_labeled:
                samples.append(Sample(sid, text, emb, c, "labeled"))
            else:
                samples.append(Sample(sid, text, emb, None, "unlabeled"))
                eval_labels[sid] = c
        n_test = max(2, math.ceil(0.5 * n))
        for i in range(n_test):
            emb = draw(c)
            emb.setflags(write=False)
            sid = f"te{c:02d}-{i:04d}"
            samples.append(Sample(sid, make_text(c), emb, None, "test"))
            eval_labels[sid] = c
    return DatasetBundle(samples, K, range(known), dim, eval_labels)
