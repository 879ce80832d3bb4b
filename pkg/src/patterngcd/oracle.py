"""Pattern oracle: chat backends, transcript logging, and the facade.

The facade speaks three verbs (match, extract, refine) over any chat-style
completion backend.  Unparseable replies are retried with a repair suffix
inside a fixed budget; exhausting the budget raises PatternOracleError with
the failing transcript attached.
"""
from __future__ import annotations

import collections
import hashlib
import json
import logging
import os
import re
from pathlib import Path

from .errors import PatternOracleError
from .parsing import (
    ReplyParseError,
    parse_extraction_reply,
    parse_match_reply,
    parse_refine_reply,
)
from .patterns import ExtractionReport, OracleVerdict, Pattern, PatternStore
from . import prompts

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 20
DEFAULT_RETRIES = 3

ORACLE_URL_ENV = "GCD_ORACLE_URL"
ORACLE_TOKEN_ENV = "GCD_ORACLE_TOKEN"
ORACLE_MODEL_ENV = "GCD_ORACLE_MODEL"


def _messages_key(messages) -> str:
    blob = json.dumps(messages, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class HttpChatBackend:
    """OpenAI-compatible chat completion endpoint.

    Reads the base URL and bearer token from GCD_ORACLE_URL and
    GCD_ORACLE_TOKEN unless given explicitly.  Requests are sent with
    temperature 0 so repeated runs stay comparable.
    """

    def __init__(self, base_url=None, token=None, model=None, timeout=60.0):
        self.base_url = (base_url or os.environ.get(ORACLE_URL_ENV, "")).rstrip("/")
        if not self.base_url:
            raise PatternOracleError(f"no oracle URL; set {ORACLE_URL_ENV}")
        self.token = token if token is not None else os.environ.get(ORACLE_TOKEN_ENV, "")
        self.model = model or os.environ.get(ORACLE_MODEL_ENV, "default")
        self.timeout = timeout

    def complete(self, messages) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        body = {"model": self.model, "messages": messages, "temperature": 0}
        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except PatternOracleError:
            raise
        except Exception as exc:  # transport, status, or schema failure
            raise PatternOracleError(f"oracle request failed: {exc}") from exc


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


class MockChatBackend:
    """Deterministic keyword oracle for tests and offline runs.

    Understands the package's own prompt layout: it reads the numbered
    sections back out of the prompt and answers from token overlap, so the
    round trip exercises both the builders and the parsers.
    """

    def complete(self, messages) -> str:
        prompt = messages[-1]["content"]
        if "Category Set:" in prompt and "Text Samples to be Classified:" in prompt:
            return self._match(prompt)
        if "Report Information:" in prompt:
            return self._extract(prompt)
        if "Current Pattern:" in prompt:
            return self._refine(prompt)
        raise PatternOracleError("mock oracle cannot classify this prompt")

    @staticmethod
    def _numbered_items(prompt: str, header: str) -> list[str]:
        block = prompt.split(header, 1)[1]
        items: list[str] = []
        for line in block.splitlines():
            m = re.match(r"^(\d+): (.*)$", line)
            if m:
                if int(m.group(1)) != len(items) + 1:
                    break
                items.append(m.group(2))
            elif items:
                break
        return items

    def _match(self, prompt: str) -> str:
        cats = self._numbered_items(prompt, "Category Set:\n")
        samples = self._numbered_items(prompt, "Text Samples to be Classified:\n")
        results = []
        for i, text in enumerate(samples, start=1):
            st = _tokens(text)
            best, best_overlap = None, 0
            for j, cat in enumerate(cats, start=1):
                overlap = len(st & _tokens(cat))
                if overlap > best_overlap:
                    best, best_overlap = j, overlap
            if best is None:
                assigned = "New Category"
                just = "no category shares tokens with the sample"
            else:
                assigned = best
                just = f"shares {best_overlap} token(s) with category {best}"
            results.append(
                {"Index": i, "Assigned Category Index": assigned, "Matching Justification": just}
            )
        return json.dumps({"results": results}, ensure_ascii=False)

    def _extract(self, prompt: str) -> str:
        reports = self._numbered_items(prompt, "Report Information:\n")
        df: collections.Counter[str] = collections.Counter()
        for text in reports:
            df.update(_tokens(text))
        keyword = min(df, key=lambda t: (-df[t], t))
        members = [i for i, text in enumerate(reports, start=1) if keyword in _tokens(text)]
        lines = ["1. Method Analysis:"]
        for i, text in enumerate(reports, start=1):
            lines.append(f"   * Report {i}: key tokens ({', '.join(sorted(_tokens(text))[:4])})")
        lines += [
            "",
            "2. Type Statistics:",
            f'   The most frequent keyword is "{keyword}", appearing in {len(members)} of {len(reports)} reports.',
            "",
            "3. Summary of the Main Pattern:",
            f"   {keyword}: reports in this group all mention {keyword}.",
            "",
            "4. List of report numbers belonging to the main pattern identified in steps 2 and 3:",
            "   [",
        ]
        rows = [
            f'   {{"Report Number": {i}, "Basis": "mentions {keyword}"}}' for i in members
        ]
        lines.append(",\n".join(rows))
        lines.append("   ]")
        return "\n".join(lines)

    def _refine(self, prompt: str) -> str:
        pattern = prompt.split("Current Pattern:\n", 1)[1].split("\n", 1)[0]
        fps = self._numbered_items(prompt, "False Positive Reports:\n")
        bad = set()
        for text in fps:
            bad |= _tokens(text)
        kept = [t for t in pattern.split() if _tokens(t) and not (_tokens(t) & bad)]
        revised = " ".join(kept) if kept else pattern
        return json.dumps({"Revised Pattern": revised}, ensure_ascii=False)


class ReplayChatBackend:
    """Replays responses recorded in a transcript log.

    Responses are keyed by a hash of the request messages and consumed in
    recorded order, so a deterministic run can be re-driven offline.
    """

    def __init__(self, transcript_path):
        self._queues: dict[str, collections.deque[str]] = collections.defaultdict(collections.deque)
        path = Path(transcript_path)
        if not path.exists():
            raise PatternOracleError(f"replay transcript not found: {path}")
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                self._queues[_messages_key(entry["messages"])].append(entry["response"])

    def complete(self, messages) -> str:
        queue = self._queues.get(_messages_key(messages))
        if not queue:
            raise PatternOracleError("replay transcript has no response for this request")
        return queue.popleft()


class TranscriptWriter:
    """Appends one JSON line per oracle exchange for audit and replay."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def record(self, kind: str, messages, response: str, attempt: int) -> None:
        entry = {
            "kind": kind,
            "attempt": attempt,
            "messages": messages,
            "response": response,
        }
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")


class PatternOracle:
    """Batching, retry, and parsing layer over a chat backend."""

    def __init__(
        self,
        backend,
        batch_size: int = DEFAULT_BATCH_SIZE,
        retries: int = DEFAULT_RETRIES,
        transcript: TranscriptWriter | None = None,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        if retries < 0:
            raise ValueError("retries must be non-negative")
        self.backend = backend
        self.batch_size = batch_size
        self.retries = retries
        self.transcript = transcript
        self.calls = 0

    def _ask(self, kind: str, prompt: str, parse):
        messages = [{"role": "user", "content": prompt}]
        transcript = []
        last_error = None
        for attempt in range(self.retries + 1):
            self.calls += 1
            response = self.backend.complete(messages)
            if self.transcript is not None:
                self.transcript.record(kind, messages, response, attempt)
            transcript.append({"messages": messages, "response": response})
            try:
                return parse(response)
            except ReplyParseError as exc:
                last_error = exc
                log.warning("%s reply unparseable (attempt %d): %s", kind, attempt, exc)
                messages = messages + [
                    {"role": "assistant", "content": response},
                    {"role": "user", "content": prompts.REPAIR_SUFFIX},
                ]
        raise PatternOracleError(
            f"{kind} reply unparseable after {self.retries} retries: {last_error}",
            transcript=transcript,
        )

    def match_samples(self, samples: list[tuple[str, str]], store: PatternStore) -> list[OracleVerdict]:
        """Match (sample_id, text) pairs against the stored patterns.

        With an empty store every sample is trivially a new category and no
        backend call is made.
        """
        ordered = store.ordered()
        if not ordered:
            return [OracleVerdict(sid, None, "no patterns yet") for sid, _ in samples]
        verdicts: list[OracleVerdict] = []
        for start in range(0, len(samples), self.batch_size):
            chunk = samples[start : start + self.batch_size]
            prompt = prompts.build_match_prompt(
                [text for _, text in chunk], [p.text for p in ordered]
            )
            rows = self._ask(
                "match",
                prompt,
                lambda r: parse_match_reply(r, n_samples=len(chunk), n_patterns=len(ordered)),
            )
            for idx, assigned, just in rows:
                sid = chunk[idx - 1][0]
                pid = None if assigned is None else ordered[assigned - 1].pattern_id
                verdicts.append(OracleVerdict(sid, pid, just))
        return verdicts

    def extract_pattern(self, samples: list[tuple[str, str]]) -> ExtractionReport:
        """Mine the dominant pattern from (sample_id, text) reports."""
        if not samples:
            raise ValueError("no samples to mine")
        prompt = prompts.build_extraction_prompt([text for _, text in samples])
        pattern_text, members = self._ask(
            "extract", prompt, lambda r: parse_extraction_reply(r, n_reports=len(samples))
        )
        member_set = set(members)
        member_ids = tuple(samples[i - 1][0] for i in members)
        excluded = tuple(sid for i, (sid, _) in enumerate(samples, start=1) if i not in member_set)
        return ExtractionReport(pattern_text=pattern_text, member_ids=member_ids, excluded_ids=excluded)

    def refine_pattern(self, pattern: Pattern, true_positives: list[str], false_positives: list[str]) -> str:
        """Revise a pattern against labeled evidence; no-op without FPs."""
        if not false_positives:
            return pattern.text
        prompt = prompts.build_refine_prompt(pattern.text, true_positives, false_positives)
        return self._ask("refine", prompt, parse_refine_reply)


def make_backend(name: str, replay_path=None, model=None):
    """Build a chat backend from a CLI-style name."""
    if name == "mock":
        return MockChatBackend()
    if name == "http":
        return HttpChatBackend(model=model)
    if name == "replay":
        if replay_path is None:
            raise PatternOracleError("replay backend needs a transcript path")
        return ReplayChatBackend(replay_path)
    raise ValueError(f"unknown oracle backend {name!r}")
