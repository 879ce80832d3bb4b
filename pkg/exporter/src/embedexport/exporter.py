"""Corpus reading and engine-format export.

Input corpus: CSV or JSON lines with fields {id, text, label?, split}.
Output: the engine's dataset file - a header record {K, dim, known_classes}
followed by one record per row, embeddings L2-normalized.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger("embedexport")

SPLITS = ("labeled", "unlabeled", "test")


class CorpusError(ValueError):
    """The corpus file is malformed or internally inconsistent."""


@dataclass(frozen=True)
class Row:
    id: str
    text: str
    label: int | None
    split: str


def _check_row(lineno: int, sid, text, label, split) -> Row:
    if not sid:
        raise CorpusError(f"line {lineno}: empty id")
    if split not in SPLITS:
        raise CorpusError(f"line {lineno}: unknown split {split!r}")
    if label is not None:
        try:
            label = int(label)
        except (TypeError, ValueError):
            raise CorpusError(f"line {lineno}: bad label {label!r}") from None
        if label < 0:
            raise CorpusError(f"line {lineno}: negative label {label}")
    # the engine needs supervision on these splits; fail before encoding
    if label is None and split in ("labeled", "test"):
        raise CorpusError(f"line {lineno}: {split} row without a label")
    return Row(str(sid), "" if text is None else str(text), label, split)


def _read_csv(path: Path) -> list[Row]:
    rows = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"id", "text", "split"} - set(reader.fieldnames or ())
        if missing:
            raise CorpusError(f"missing CSV columns: {', '.join(sorted(missing))}")
        for lineno, rec in enumerate(reader, start=2):
            label = rec.get("label")
            if label is not None and label.strip() == "":
                label = None
            rows.append(_check_row(lineno, rec["id"], rec["text"], label, rec["split"]))
    return rows


def _read_jsonl(path: Path) -> list[Row]:
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict) or "id" not in rec or "split" not in rec:
                raise CorpusError(f"line {lineno}: need id and split fields")
            rows.append(
                _check_row(
                    lineno, rec["id"], rec.get("text"), rec.get("label"), rec["split"]
                )
            )
    return rows


def read_corpus(path) -> list[Row]:
    """Read a corpus file; ids must be unique or the export aborts."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus not found: {path}")
    rows = _read_csv(path) if path.suffix.lower() == ".csv" else _read_jsonl(path)
    if not rows:
        raise CorpusError("corpus has no rows")
    seen: set[str] = set()
    for row in rows:
        if row.id in seen:
            raise CorpusError(f"duplicate id {row.id!r}")
        seen.add(row.id)
    return rows


def _build_header(rows: list[Row], dim: int, k, known) -> dict:
    labels = [r.label for r in rows if r.label is not None]
    if k is None:
        if not labels:
            raise CorpusError("cannot infer K: corpus carries no labels (pass --k)")
        k = max(labels) + 1
    bad = [l for l in labels if l >= k]
    if bad:
        raise CorpusError(f"label {bad[0]} outside [0, {k})")
    if known is None:
        known = sorted({r.label for r in rows if r.split == "labeled"})
    known = [int(c) for c in known]
    if any(not 0 <= c < k for c in known):
        raise CorpusError(f"known classes {known} not all inside [0, {k})")
    return {"K": int(k), "dim": int(dim), "known_classes": known}


def export(rows: list[Row], encoder, pool: str, out_path, k=None, known=None) -> dict:
    """Encode rows and write the engine dataset file; returns a summary.

    Empty texts and texts the encoder maps to a zero vector are skipped with
    a warning, since the engine rejects zero-norm embeddings. Row order is
    preserved.
    """
    kept, skipped = [], 0
    for row in rows:
        if not row.text.strip():
            log.warning("skipping %s: empty text", row.id)
            skipped += 1
            continue
        kept.append(row)
    if not kept:
        raise CorpusError("no rows left after skipping empty texts")

    raw = np.asarray(encoder.encode([r.text for r in kept], pool=pool), dtype=np.float64)
    norms = np.linalg.norm(raw, axis=1)
    records = []
    for row, vec, norm in zip(kept, raw, norms):
        if norm <= 0.0 or not np.isfinite(norm):
            log.warning("skipping %s: text carries no encodable signal", row.id)
            skipped += 1
            continue
        records.append((row, vec / norm))
    if not records:
        raise CorpusError("no rows left after dropping zero-signal texts")

    header = _build_header([r for r, _ in records], raw.shape[1], k, known)
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for row, vec in records:
            fh.write(
                json.dumps(
                    {
                        "id": row.id,
                        "text": row.text,
                        "embedding": [float(v) for v in vec],
                        "label": row.label,
                        "split": row.split,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    counts = {s: sum(1 for r, _ in records if r.split == s) for s in SPLITS}
    return {
        "out": str(out_path),
        "encoder": encoder.name,
        "K": header["K"],
        "dim": header["dim"],
        "known_classes": header["known_classes"],
        "n_written": len(records),
        "n_skipped": skipped,
        "splits": counts,
    }
