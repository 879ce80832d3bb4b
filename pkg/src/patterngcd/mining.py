"""Per-round pattern mining over ranked clusters.

Each round starts from an empty pattern set.  Clusters are visited from the
most to the least promising; the high-confidence members of each cluster are
first matched against the patterns mined so far, then a dominant pattern is
extracted from whatever did not match, and known-class patterns are refined
against labeled evidence.  Oracle failures degrade per cluster: the cluster
is skipped and recorded, the round carries on.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import PatternOracleError
from .oracle import PatternOracle
from .patterns import PatternStore

log = logging.getLogger(__name__)


@dataclass
class MiningOutcome:
    """Everything one mining pass produced."""

    store: PatternStore
    matched: dict[str, int] = field(default_factory=dict)  # sample id -> pattern id
    members: dict[int, tuple[str, ...]] = field(default_factory=dict)  # cluster -> extracted members
    excluded: list[str] = field(default_factory=list)
    errors: dict[int, str] = field(default_factory=dict)

    def processed_ids(self) -> set[str]:
        out = set(self.matched)
        for ids in self.members.values():
            out.update(ids)
        out.update(self.excluded)
        return out


def mine_patterns(
    oracle: PatternOracle,
    ranked_cluster_ids: list[int],
    cluster_class: dict[int, int],
    high_confidence: dict[int, list[str]],
    text_of,
    labeled_evidence: dict[int, tuple[list[str], list[str]]],
    known_classes,
) -> MiningOutcome:
    """Run one full mining pass.

    Args:
        ranked_cluster_ids: cluster ids from most to least promising.
        cluster_class: cluster id -> class id (the current matching).
        high_confidence: cluster id -> selected sample ids, in priority order.
        text_of: callable sample_id -> text or None.
        labeled_evidence: class id -> (true positive texts, false positive
            texts) for refinement of known-class patterns.
        known_classes: set of known class ids.

    Returns a MiningOutcome holding the fresh pattern store, the samples that
    matched an earlier pattern, the extraction members per cluster, and the
    samples each extraction excluded.
    """
    known = {int(c) for c in known_classes}
    outcome = MiningOutcome(store=PatternStore())
    for cluster in ranked_cluster_ids:
        owner = cluster_class[cluster]
        pairs = [(sid, text_of(sid)) for sid in high_confidence.get(cluster, [])]
        pairs = [(sid, t) for sid, t in pairs if t]
        if not pairs:
            continue
        try:
            verdicts = oracle.match_samples(pairs, outcome.store)
            unmatched = []
            for v in verdicts:
                if v.is_new_category:
                    unmatched.append(v.sample_id)
                else:
                    outcome.matched[v.sample_id] = v.pattern_id
            if unmatched and owner not in outcome.store:
                report = oracle.extract_pattern(
                    [(sid, t) for sid, t in pairs if sid in set(unmatched)]
                )
                outcome.store.add(owner, report.pattern_text)
                outcome.members[cluster] = report.member_ids
                outcome.excluded.extend(report.excluded_ids)
            if owner in known and owner in outcome.store:
                tps, fps = labeled_evidence.get(owner, ([], []))
                if fps:
                    revised = oracle.refine_pattern(outcome.store.get(owner), tps, fps)
                    outcome.store.revise(owner, revised)
        except PatternOracleError as exc:
            log.warning("cluster %d mining failed: %s", cluster, exc)
            outcome.errors[cluster] = str(exc)
    return outcome
