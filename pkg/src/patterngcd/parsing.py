"""Lenient parsers for oracle replies.

Real LLM output drifts: keys get renamed, wrappers appear or vanish, prose
surrounds the payload.  These parsers accept the documented variants and
raise ReplyParseError for anything else so the caller can retry with a
repair suffix.
"""
from __future__ import annotations

import json
import logging
import re

log = logging.getLogger(__name__)


class ReplyParseError(ValueError):
    """Reply did not contain a usable payload."""


_MATCH_INDEX_KEYS = ("Index", "index", "Sample Index")
_MATCH_ASSIGNED_KEYS = (
    "Assigned Category Index",
    "AssignedCategoryIndex",
    "SchemeCategoryIndex",
    "Scheme Category Index",
    "Assigned Category",
    "Category Index",
)
_MATCH_JUSTIFICATION_KEYS = (
    "Matching Justification",
    "MatchingJustification",
    "MatchingBasis",
    "Matching Basis",
    "Basis",
    "Justification",
)
_REPORT_NUMBER_KEYS = ("Report Number", "ReportNumber", "report_number", "Number")
_REFINED_KEYS = ("Revised Pattern", "RevisedPattern", "revised_pattern", "Revised pattern")

_NEW_CATEGORY_RE = re.compile(r"^\s*new\s*category\s*$", re.IGNORECASE)


def first_json_value(text: str):
    """Decode the first JSON object or array embedded anywhere in text."""
    decoder = json.JSONDecoder()
    for m in re.finditer(r"[\[{]", text):
        try:
            value, _ = decoder.raw_decode(text, m.start())
            return value
        except json.JSONDecodeError:
            continue
    raise ReplyParseError("no JSON value found in reply")


def _pick(row: dict, keys, what: str):
    for k in keys:
        if k in row:
            return row[k]
    raise ReplyParseError(f"result row is missing {what}")


def parse_match_reply(text: str, n_samples: int, n_patterns: int) -> list[tuple[int, int | None, str]]:
    """Parse a matching verdict reply.

    Accepts either {"results": [...]} or a bare array of rows.  Each row
    yields (sample_index, pattern_index, justification), both indices
    1-based; pattern_index None means the sample is a new category.  An
    out-of-range category index degrades to None with a warning rather than
    failing the whole batch.
    """
    value = first_json_value(text)
    if isinstance(value, dict):
        rows = value.get("results")
        if rows is None:
            raise ReplyParseError("object reply has no 'results' array")
    elif isinstance(value, list):
        rows = value
    else:
        raise ReplyParseError("reply is neither an object nor an array")
    if not isinstance(rows, list):
        raise ReplyParseError("'results' is not an array")

    seen: dict[int, tuple[int, int | None, str]] = {}
    for row in rows:
        if not isinstance(row, dict):
            raise ReplyParseError("result row is not an object")
        idx_raw = _pick(row, _MATCH_INDEX_KEYS, "a sample index")
        try:
            idx = int(idx_raw)
        except (TypeError, ValueError):
            raise ReplyParseError(f"bad sample index {idx_raw!r}") from None
        if not (1 <= idx <= n_samples):
            raise ReplyParseError(f"sample index {idx} outside 1..{n_samples}")
        assigned_raw = _pick(row, _MATCH_ASSIGNED_KEYS, "an assigned category")
        assigned: int | None
        if isinstance(assigned_raw, str) and _NEW_CATEGORY_RE.match(assigned_raw):
            assigned = None
        else:
            try:
                assigned = int(assigned_raw)
            except (TypeError, ValueError):
                raise ReplyParseError(f"bad category value {assigned_raw!r}") from None
            if not (1 <= assigned <= n_patterns):
                log.warning("category index %s outside 1..%s; treating as new category", assigned, n_patterns)
                assigned = None
        jkey = next((k for k in _MATCH_JUSTIFICATION_KEYS if k in row), None)
        just = str(row[jkey]) if jkey is not None else ""
        seen[idx] = (idx, assigned, just)
    missing = [i for i in range(1, n_samples + 1) if i not in seen]
    if missing:
        raise ReplyParseError(f"no verdict for sample indices {missing}")
    return [seen[i] for i in range(1, n_samples + 1)]


_SECTION3_RE = re.compile(r"(?:^|\n)\s*3[.:][^\n]*\n(.*?)(?=\n\s*4[.:])", re.DOTALL)
_SECTION4_RE = re.compile(r"(?:^|\n)\s*4[.:]", re.DOTALL)


def parse_extraction_reply(text: str, n_reports: int) -> tuple[str, list[int]]:
    """Parse a pattern-extraction reply.

    The pattern description is the body of numbered section 3; the member
    report numbers come from the JSON array after the section 4 heading.
    Returns (pattern_text, member_numbers) with 1-based member numbers.
    """
    m3 = _SECTION3_RE.search(text)
    if not m3:
        raise ReplyParseError("no section 3 summary found")
    pattern_text = " ".join(line.strip() for line in m3.group(1).strip().splitlines() if line.strip())
    if not pattern_text:
        raise ReplyParseError("section 3 summary is empty")

    m4 = _SECTION4_RE.search(text, m3.end())
    if not m4:
        raise ReplyParseError("no section 4 report list found")
    tail = text[m4.end():]
    start = tail.find("[")
    if start < 0:
        raise ReplyParseError("no JSON array after section 4")
    try:
        rows, _ = json.JSONDecoder().raw_decode(tail, start)
    except json.JSONDecodeError as exc:
        raise ReplyParseError(f"bad JSON array in section 4 ({exc.msg})") from exc
    if not isinstance(rows, list) or not rows:
        raise ReplyParseError("section 4 array is empty")
    members: list[int] = []
    for row in rows:
        if not isinstance(row, dict):
            raise ReplyParseError("section 4 row is not an object")
        num_raw = _pick(row, _REPORT_NUMBER_KEYS, "a report number")
        try:
            num = int(num_raw)
        except (TypeError, ValueError):
            raise ReplyParseError(f"bad report number {num_raw!r}") from None
        if not (1 <= num <= n_reports):
            raise ReplyParseError(f"report number {num} outside 1..{n_reports}")
        if num not in members:
            members.append(num)
    return pattern_text, members


def parse_refine_reply(text: str) -> str:
    """Parse a refinement reply into the revised pattern text."""
    value = first_json_value(text)
    if not isinstance(value, dict):
        raise ReplyParseError("refine reply is not a JSON object")
    for k in _REFINED_KEYS:
        if k in value:
            revised = value[k]
            if not isinstance(revised, str) or not revised.strip():
                raise ReplyParseError("revised pattern is empty")
            return revised.strip()
    raise ReplyParseError("refine reply has no revised pattern field")
