"""Rank-ordered mining pass: match, extract, refine, degrade."""
import pytest

from patterngcd.errors import PatternOracleError
from patterngcd.mining import mine_patterns
from patterngcd.oracle import MockChatBackend, PatternOracle
from patterngcd.patterns import ExtractionReport, OracleVerdict


class ScriptedOracle:
    """Text-driven stand-in: 'match:K' matches owner K's pattern, 'boom'
    fails extraction, 'exclude' is left out of extraction membership."""

    def __init__(self):
        self.refine_calls = []

    def match_samples(self, pairs, store):
        out = []
        for sid, text in pairs:
            target = None
            if text.startswith("match:"):
                p = store.get(int(text.split(":")[1]))
                if p is not None:
                    target = p.pattern_id
            out.append(OracleVerdict(sid, target))
        return out

    def extract_pattern(self, pairs):
        if any("boom" in t for _, t in pairs):
            raise PatternOracleError("boom")
        members = tuple(sid for sid, t in pairs if "exclude" not in t)
        excluded = tuple(sid for sid, t in pairs if "exclude" in t)
        return ExtractionReport(
            pattern_text=f"mined from {members[0]}", member_ids=members, excluded_ids=excluded
        )

    def refine_pattern(self, pattern, tps, fps):
        self.refine_calls.append((pattern.owner, tuple(tps), tuple(fps)))
        return pattern.text + " [refined]"


def _mine(oracle, ranked, cluster_class, hc, texts, evidence=None, known=()):
    return mine_patterns(
        oracle,
        ranked,
        cluster_class,
        hc,
        texts.get,
        evidence or {},
        known,
    )


def test_full_pass_matches_extracts_and_refines():
    oracle = ScriptedOracle()
    texts = {"a": "alpha", "b": "exclude beta", "c": "match:5", "d": "gamma"}
    outcome = _mine(
        oracle,
        ranked=[0, 1],
        cluster_class={0: 5, 1: 2},
        hc={0: ["a", "b"], 1: ["c", "d"]},
        texts=texts,
        evidence={2: (["tp text"], ["fp text"])},
        known={2},
    )
    assert len(outcome.store) == 2
    assert outcome.store.get(5).text == "mined from a"
    refined = outcome.store.get(2)
    assert refined.text == "mined from d [refined]"
    assert refined.revisions == ["mined from d"]
    assert refined.origin == "refined"
    assert outcome.matched == {"c": 0}
    assert outcome.members == {0: ("a",), 1: ("d",)}
    assert outcome.excluded == ["b"]
    assert outcome.errors == {}
    assert oracle.refine_calls == [(2, ("tp text",), ("fp text",))]
    assert outcome.processed_ids() == {"a", "b", "c", "d"}


def test_second_cluster_with_same_owner_does_not_extract():
    oracle = ScriptedOracle()
    outcome = _mine(
        oracle,
        ranked=[0, 1],
        cluster_class={0: 3, 1: 3},
        hc={0: ["a"], 1: ["b"]},
        texts={"a": "alpha", "b": "beta"},
    )
    assert len(outcome.store) == 1
    assert outcome.members == {0: ("a",)}
    assert "b" not in outcome.processed_ids()


def test_fully_matched_cluster_skips_extraction():
    oracle = ScriptedOracle()
    outcome = _mine(
        oracle,
        ranked=[0, 1],
        cluster_class={0: 1, 1: 4},
        hc={0: ["a"], 1: ["c"]},
        texts={"a": "alpha", "c": "match:1"},
    )
    assert 4 not in outcome.store
    assert outcome.matched == {"c": 0}
    assert outcome.members == {0: ("a",)}


def test_oracle_failure_degrades_to_that_cluster():
    oracle = ScriptedOracle()
    outcome = _mine(
        oracle,
        ranked=[0, 1, 2],
        cluster_class={0: 1, 1: 2, 2: 3},
        hc={0: ["a"], 1: ["b"], 2: ["c"]},
        texts={"a": "alpha", "b": "boom here", "c": "gamma"},
    )
    assert sorted(outcome.errors) == [1]
    assert "boom" in outcome.errors[1]
    assert 1 in outcome.store
    assert 3 in outcome.store
    assert 2 not in outcome.store


def test_refine_needs_known_owner_and_false_positives():
    oracle = ScriptedOracle()
    _mine(
        oracle,
        ranked=[0, 1],
        cluster_class={0: 1, 1: 7},
        hc={0: ["a"], 1: ["b"]},
        texts={"a": "alpha", "b": "beta"},
        evidence={1: (["tp"], []), 7: (["tp"], ["fp"])},
        known={1},
    )
    # owner 1 has no false positives, owner 7 is novel: nothing to refine
    assert oracle.refine_calls == []


def test_missing_texts_are_filtered_and_empty_clusters_skipped():
    oracle = ScriptedOracle()
    outcome = _mine(
        oracle,
        ranked=[0, 1],
        cluster_class={0: 1, 1: 2},
        hc={0: ["a", "ghost"], 1: ["phantom"]},
        texts={"a": "alpha"},
    )
    assert outcome.members == {0: ("a",)}
    assert 2 not in outcome.store
    assert outcome.errors == {}


def test_integration_with_mock_backend():
    oracle = PatternOracle(MockChatBackend())
    texts = {
        "a": "loan fee demand one",
        "b": "loan fee demand two",
        "c": "demand letter from landlord",
        "d": "unrelated gardening advice",
    }
    outcome = _mine(
        oracle,
        ranked=[0, 1],
        cluster_class={0: 6, 1: 7},
        hc={0: ["a", "b"], 1: ["c", "d"]},
        texts=texts,
    )
    assert outcome.store.get(6).text.startswith("demand:")
    # "c" shares the mined keyword, so it matches instead of founding a pattern
    assert outcome.matched.get("c") == outcome.store.get(6).pattern_id
    assert 7 in outcome.store
    assert outcome.members == {0: ("a", "b"), 1: ("d",)}
    assert outcome.excluded == []
    assert outcome.errors == {}
