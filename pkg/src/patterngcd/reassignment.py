"""Pseudo-label reassignment after a mining pass.

Two corrections are applied on top of the cluster-derived labels, in this
precedence order:

(a) samples that an extraction step excluded, plus the low-confidence set,
    are re-matched against the final pattern set and follow the owning class
    of whatever pattern they match;
(b) samples that matched a previously mined pattern during mining move to
    that pattern's owner.

Everything else keeps its cluster-derived label.  The step is a pure
function of its inputs: feeding the same snapshot twice yields identical
records.
"""
from __future__ import annotations

import logging

from .datasets import PseudoLabelRecord
from .errors import PatternOracleError
from .mining import MiningOutcome
from .oracle import PatternOracle

log = logging.getLogger(__name__)


def reassign(
    cluster_labels: dict[str, int],
    outcome: MiningOutcome,
    low_confidence: list[str],
    oracle: PatternOracle,
    text_of,
) -> dict[str, PseudoLabelRecord]:
    """Produce the round's pseudo-label records.

    Args:
        cluster_labels: sample id -> class implied by its cluster this round.
        outcome: the mining pass (patterns, matches, exclusions).
        low_confidence: sample ids flagged unstable and entropic.
        oracle: used for the fresh re-match of step (a).
        text_of: callable sample_id -> text or None.

    On oracle failure the affected samples keep their cluster labels and are
    flagged stale.
    """
    excluded = [sid for sid in outcome.excluded if sid in cluster_labels]
    low_conf = [sid for sid in low_confidence if sid in cluster_labels]
    targets = sorted(set(excluded) | set(low_conf))
    with_text = [(sid, text_of(sid)) for sid in targets]
    with_text = [(sid, t) for sid, t in with_text if t]

    stale = False
    fresh: dict[str, int | None] = {}
    if with_text:
        try:
            for v in oracle.match_samples(with_text, outcome.store):
                fresh[v.sample_id] = v.pattern_id
        except PatternOracleError as exc:
            log.warning("reassignment re-match failed, keeping cluster labels: %s", exc)
            stale = True

    excluded_set = set(excluded)
    attempted = {sid for sid, _ in with_text}
    records: dict[str, PseudoLabelRecord] = {}
    for sid, base in cluster_labels.items():
        current = base
        source = "cluster"
        is_stale = False
        if sid in fresh:
            pid = fresh[sid]
            if pid is not None:
                current = outcome.store.by_pattern_id(pid).owner
                source = "consensus-reassign" if sid in excluded_set else "low-confidence-reassign"
        elif stale and sid in attempted:
            is_stale = True
        elif sid in outcome.matched:
            current = outcome.store.by_pattern_id(outcome.matched[sid]).owner
            source = "pattern-match"
        records[sid] = PseudoLabelRecord(
            sample_id=sid,
            current=current,
            previous=base,
            changed=current != base,
            source=source,
            stale=is_stale,
        )
    return records
