"""End-to-end training, evaluation, and baseline runs.

A run alternates a mining round (clustering, matching, ranking, oracle
pattern work, pseudo-label reassignment, prototype refresh) every
``interval`` epochs with per-epoch optimization of the projection head.
All randomness derives from (seed, epoch, stage) so interrupted runs resume
bit-identically; checkpoints therefore never store generator state.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import cluster_stats, instability_mask, multi_run
from .assignment import hungarian, match_clusters
from .config import RunConfig
from .datasets import DatasetBundle, PseudoLabelRecord
from .embedder import LexicalMatchEmbedder
from .errors import DataFormatError, TrainingError
from .evaluation import GcdMetrics, gcd_metrics
from .mining import mine_patterns
from .oracle import PatternOracle, TranscriptWriter
from .patterns import PatternStore
from .projection import ProjectionHead
from .ranking import build_distributions, rank_clusters, select_high_confidence, select_low_confidence
from .reassignment import reassign
from .trainer import build_prototypes, ema_update, train_epoch
from .validation import normalize_rows, rng_for

log = logging.getLogger(__name__)

# stage tags for derived seeds
TAG_KMEANS = 1
TAG_TRAIN = 2
TAG_BASELINE = 3

CHECKPOINT_KEYS = ("W", "b", "prototypes", "patterns", "round", "config_hash", "seed")


@dataclass
class Checkpoint:
    head: ProjectionHead
    prototypes: dict[int, np.ndarray]
    store: PatternStore
    round: int
    config_hash: str
    seed: int

    def to_json(self) -> dict:
        return {
            "W": self.head.W.tolist(),
            "b": self.head.b.tolist(),
            "prototypes": {str(c): v.tolist() for c, v in sorted(self.prototypes.items())},
            "patterns": self.store.to_json(),
            "round": self.round,
            "config_hash": self.config_hash,
            "seed": self.seed,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Checkpoint":
        path = Path(path)
        if not path.exists():
            raise DataFormatError(f"checkpoint not found: {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"checkpoint is not valid JSON ({exc.msg})") from exc
        missing = [k for k in CHECKPOINT_KEYS if k not in obj]
        if missing:
            raise DataFormatError(f"incomplete checkpoint: missing {', '.join(missing)}")
        head = ProjectionHead(np.asarray(obj["W"], dtype=np.float64), np.asarray(obj["b"], dtype=np.float64))
        prototypes = {int(c): np.asarray(v, dtype=np.float64) for c, v in obj["prototypes"].items()}
        return cls(
            head=head,
            prototypes=prototypes,
            store=PatternStore.from_json(obj["patterns"]),
            round=int(obj["round"]),
            config_hash=str(obj["config_hash"]),
            seed=int(obj["seed"]),
        )


@dataclass
class RoundState:
    records: dict[str, PseudoLabelRecord]
    prototypes: dict[int, np.ndarray]
    labeled_prototypes: dict[int, np.ndarray]
    processed: set[str]
    store: PatternStore
    stale: bool
    n_oracle_errors: int


@dataclass
class RunResult:
    history: list[dict] = field(default_factory=list)
    head: ProjectionHead | None = None
    prototypes: dict[int, np.ndarray] = field(default_factory=dict)
    store: PatternStore | None = None
    records: dict[str, PseudoLabelRecord] = field(default_factory=dict)
    checkpoint_path: str | None = None
    rounds: int = 0


def _derived_seed(seed: int, epoch: int, tag: int) -> int:
    return int(rng_for(seed, epoch, tag).integers(2**31 - 1))


def _labeled_centroids(Zl: np.ndarray, labels: np.ndarray) -> tuple[list[int], np.ndarray]:
    class_ids = sorted(int(c) for c in np.unique(labels))
    centroids = np.stack([Zl[labels == c].mean(axis=0) for c in class_ids])
    return class_ids, centroids


def _run_round(
    bundle: DatasetBundle,
    head: ProjectionHead,
    prev_prototypes: dict[int, np.ndarray],
    prev_store: PatternStore | None,
    oracle: PatternOracle,
    embedder: LexicalMatchEmbedder,
    config: RunConfig,
    seed: int,
    epoch: int,
) -> RoundState:
    K = bundle.K
    u_ids = bundle.ids("unlabeled")
    Zu = head(bundle.embedding_matrix("unlabeled"))
    Zl = head(bundle.embedding_matrix("labeled"))
    l_labels = bundle.labeled_labels()

    # fresh restart trajectory every round: structure errors (merged or split
    # clusters) get a chance to resolve; class ids stay coherent because known
    # ids re-match labeled centroids and novel ids anchor to prior prototypes
    mr = multi_run(
        Zu, K, base_seed=_derived_seed(seed, epoch, TAG_KMEANS),
        runs=config.kmeans_runs, max_iter=config.kmeans_max_iter,
    )
    ref = mr.reference
    unstable = instability_mask(mr)

    stats = cluster_stats(ref, Zu)
    ranked = rank_clusters(stats, config.sigma)
    rank_order = [s.cluster_id for s in ranked]

    class_ids, centroids = _labeled_centroids(Zl, l_labels)
    matching = match_clusters(ref.centers, centroids, class_ids, K, rank_order=rank_order)
    known_set = set(bundle.known_classes)
    prev_novel = sorted(c for c in prev_prototypes if c not in known_set)
    if prev_novel:
        # known ids re-match against labeled centroids every round, but novel
        # ids anchor to the running prototypes: the EMA is keyed by class id,
        # so novel identities must persist across rounds
        class_map = dict(matching.cluster_to_class)
        novel_order = [k for k in rank_order if k in matching.novel_clusters]
        anchors = np.stack([prev_prototypes[c] for c in prev_novel])
        centers = ref.centers[novel_order]
        units = centers / np.maximum(np.linalg.norm(centers, axis=1, keepdims=True), 1e-12)
        sol = hungarian(-(anchors @ units.T))
        for ai, ci in sol.pairs:
            class_map[novel_order[ci]] = prev_novel[ai]
        free = sorted(set(range(K)) - known_set - set(prev_novel))
        for k in novel_order:
            if k not in class_map:
                class_map[k] = free.pop(0)
    else:
        class_map = matching.full_map()

    cluster_labels = {sid: class_map[int(ref.labels[i])] for i, sid in enumerate(u_ids)}

    dists = build_distributions(u_ids, Zu, ref.centers, config.alpha)
    high_confidence = {}
    for k in range(ref.n_clusters):
        members = [dists[i] for i in np.flatnonzero(ref.labels == k)]
        if members:
            high_confidence[k] = select_high_confidence(members, config.k_high)

    # labeled evidence for refinement: predicted class = class of nearest center
    d2 = ((Zl[:, None, :] - ref.centers[None, :, :]) ** 2).sum(axis=-1)
    predicted = np.array([class_map[int(k)] for k in d2.argmin(axis=1)], dtype=int)
    l_texts = bundle.texts("labeled")
    evidence: dict[int, tuple[list[str], list[str]]] = {}
    cap = config.oracle_batch_size
    for c in class_ids:
        tps = [t for t, y, p in zip(l_texts, l_labels, predicted) if t and y == c and p == c]
        fps = [t for t, y, p in zip(l_texts, l_labels, predicted) if t and y != c and p == c]
        evidence[c] = (tps[:cap], fps[:cap])

    outcome = mine_patterns(
        oracle,
        rank_order,
        class_map,
        high_confidence,
        bundle.text_of,
        evidence,
        bundle.known_classes,
    )

    stale = False
    store = outcome.store
    if len(store) == 0 and outcome.errors and prev_store is not None and len(prev_store):
        log.warning("mining produced no patterns; reusing previous round's set")
        store = prev_store
        outcome.store = store
        stale = True

    unstable_ids = {u_ids[i] for i in np.flatnonzero(unstable)}
    low_conf = select_low_confidence(dists, unstable_ids, config.k_low)

    records = reassign(cluster_labels, outcome, low_conf, oracle, bundle.text_of)

    processed = outcome.processed_ids() | set(low_conf)

    # class centers from the final pseudo-labels; fall back to the matched
    # cluster's center so every class id keeps a prototype
    current = np.array([records[sid].current for sid in u_ids], dtype=int)
    centers_by_class: dict[int, np.ndarray] = {}
    cluster_of_class = {cls: k for k, cls in class_map.items()}
    for c in range(K):
        rows = Zu[current == c]
        if rows.shape[0]:
            centers_by_class[c] = normalize_rows(rows.mean(axis=0).reshape(1, -1))[0]
        else:
            centers_by_class[c] = normalize_rows(
                ref.centers[cluster_of_class[c]].reshape(1, -1)
            )[0]

    pattern_vectors: dict[int, np.ndarray | None] = {}
    for c in range(K):
        p = store.get(c)
        vec = embedder.embed(p.text) if p is not None else None
        pattern_vectors[c] = head(vec.reshape(1, -1))[0] if vec is not None else None

    fresh = build_prototypes(centers_by_class, pattern_vectors, config.beta)
    prototypes = ema_update(prev_prototypes, fresh, config.omega)

    labeled_prototypes = {
        c: normalize_rows(Zl[l_labels == c].mean(axis=0).reshape(1, -1))[0] for c in class_ids
    }

    return RoundState(
        records=records,
        prototypes=prototypes,
        labeled_prototypes=labeled_prototypes,
        processed=processed,
        store=store,
        stale=stale,
        n_oracle_errors=len(outcome.errors),
    )


def _append_jsonl(path: Path, entry: dict) -> None:
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def run_training(
    bundle: DatasetBundle,
    config: RunConfig,
    backend,
    seed: int,
    out_dir=None,
    resume=None,
) -> RunResult:
    """Train the projection head with periodic oracle-guided rounds.

    Args:
        backend: a chat backend (mock, HTTP, or replay).
        out_dir: if given, receives history.jsonl, oracle_log.jsonl,
            reassignments.jsonl, per-round checkpoints, and checkpoint.json.
        resume: path to a round-boundary checkpoint to continue from.

    Returns a RunResult; the history list matches history.jsonl line for line.
    """
    config.validate()
    missing = sorted(set(bundle.known_classes) - set(int(y) for y in bundle.labeled_labels()))
    if missing:
        raise DataFormatError(f"known class {missing[0]} has no labeled samples")

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    transcript = TranscriptWriter(out / "oracle_log.jsonl") if out is not None else None
    oracle = PatternOracle(
        backend,
        batch_size=config.oracle_batch_size,
        retries=config.oracle_retries,
        transcript=transcript,
    )
    embedder = LexicalMatchEmbedder(bundle)

    Xu = bundle.embedding_matrix("unlabeled")
    u_ids = bundle.ids("unlabeled")
    Xl = bundle.embedding_matrix("labeled")
    l_labels = bundle.labeled_labels()

    if resume is not None:
        ckpt = Checkpoint.load(resume)
        if ckpt.config_hash != config.config_hash():
            raise DataFormatError("checkpoint was written under a different config")
        if ckpt.head.in_dim != bundle.dim:
            raise DataFormatError(
                f"checkpoint input dim {ckpt.head.in_dim} != dataset dim {bundle.dim}"
            )
        head = ckpt.head
        prototypes = dict(ckpt.prototypes)
        store: PatternStore | None = ckpt.store if len(ckpt.store) else None
        start_epoch = ckpt.round * config.interval
        rounds_done = ckpt.round
        seed = ckpt.seed
    else:
        head = ProjectionHead.create(bundle.dim, config.out_dim, seed=seed)
        prototypes = {}
        store = None
        start_epoch = 0
        rounds_done = 0

    result = RunResult(head=head)
    state: RoundState | None = None
    round_stale = False

    for epoch in range(start_epoch, config.epochs):
        if epoch % config.interval == 0:
            round_idx = epoch // config.interval
            if out is not None:
                Checkpoint(
                    head=head,
                    prototypes=prototypes,
                    store=store or PatternStore(),
                    round=round_idx,
                    config_hash=config.config_hash(),
                    seed=seed,
                ).save(out / f"ckpt-round{round_idx:03d}.json")
            state = _run_round(
                bundle, head, prototypes, store, oracle, embedder, config, seed, epoch
            )
            prototypes = state.prototypes
            store = state.store
            round_stale = state.stale
            rounds_done = round_idx + 1
            if out is not None:
                for sid in sorted(state.records):
                    rec = state.records[sid]
                    if rec.changed:
                        _append_jsonl(
                            out / "reassignments.jsonl",
                            {"round": round_idx, **rec.to_json()},
                        )
        assert state is not None
        rng = rng_for(seed, epoch, TAG_TRAIN)
        try:
            report = train_epoch(
                head,
                Xu,
                u_ids,
                state.records,
                Xl,
                l_labels,
                prototypes,
                state.labeled_prototypes,
                bundle.known_classes,
                state.processed,
                config,
                rng,
            )
        except TrainingError as exc:
            if out is not None:
                dump = {
                    "epoch": epoch,
                    "error": str(exc),
                    "history": result.history,
                }
                (out / "diagnostic.json").write_text(json.dumps(dump, sort_keys=True) + "\n")
            raise
        entry = {
            "epoch": epoch,
            "round": epoch // config.interval,
            "losses": report.to_json(),
            "stale": round_stale,
            "n_changed": sum(1 for r in state.records.values() if r.changed),
            "n_processed": len(state.processed),
            "n_patterns": len(store) if store is not None else 0,
        }
        result.history.append(entry)
        if out is not None:
            _append_jsonl(out / "history.jsonl", entry)

    result.prototypes = prototypes
    result.store = store
    result.records = state.records if state is not None else {}
    result.rounds = rounds_done
    final = Checkpoint(
        head=head,
        prototypes=prototypes,
        store=store or PatternStore(),
        round=rounds_done,
        config_hash=config.config_hash(),
        seed=seed,
    )
    if out is not None:
        final.save(out / "checkpoint.json")
        result.checkpoint_path = str(out / "checkpoint.json")
    return result


def _nearest_center_labels(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        (X * X).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * X @ centers.T
    )
    return d2.argmin(axis=1)


def eval_predictions(ckpt: Checkpoint, bundle: DatasetBundle, config: RunConfig | None = None) -> np.ndarray:
    """Predicted class ids for the test split under a checkpoint.

    With prototypes present, each test sample takes the class of its highest
    cosine prototype.  A checkpoint without prototypes (a zero-epoch run)
    falls back to the clustering-only path on the projected embeddings.
    """
    config = config or RunConfig()
    if ckpt.head.in_dim != bundle.dim:
        raise DataFormatError(
            f"checkpoint input dim {ckpt.head.in_dim} != dataset dim {bundle.dim}"
        )
    Zt = ckpt.head(bundle.embedding_matrix("test"))
    if ckpt.prototypes:
        class_ids = sorted(ckpt.prototypes)
        P = np.stack([ckpt.prototypes[c] for c in class_ids])
        return np.asarray(class_ids, dtype=int)[(Zt @ P.T).argmax(axis=1)]
    Zu = ckpt.head(bundle.embedding_matrix("unlabeled"))
    mr = multi_run(
        Zu, bundle.K, base_seed=_derived_seed(ckpt.seed, 0, TAG_BASELINE),
        runs=config.kmeans_runs, max_iter=config.kmeans_max_iter,
    )
    return _nearest_center_labels(Zt, mr.reference.centers)


def run_eval(ckpt_path, bundle: DatasetBundle, config: RunConfig | None = None) -> GcdMetrics:
    """Score a checkpoint on the test split."""
    ckpt = Checkpoint.load(ckpt_path)
    pred = eval_predictions(ckpt, bundle, config)
    return gcd_metrics(pred, bundle.eval_labels("test"), bundle.known_classes, bundle.K)


def run_baseline(bundle: DatasetBundle, seed: int, config: RunConfig | None = None) -> GcdMetrics:
    """Clustering-only reference: multi-run K-means on the raw embeddings.

    Clusters are fitted on the unlabeled pool; test samples take the cluster
    of their nearest center and the usual aligned metrics are computed.
    """
    config = config or RunConfig()
    mr = multi_run(
        bundle.embedding_matrix("unlabeled"),
        bundle.K,
        base_seed=_derived_seed(seed, 0, TAG_BASELINE),
        runs=config.kmeans_runs,
        max_iter=config.kmeans_max_iter,
    )
    pred = _nearest_center_labels(bundle.embedding_matrix("test"), mr.reference.centers)
    truth = bundle.eval_labels("test")
    return gcd_metrics(pred, truth, bundle.known_classes, bundle.K)
