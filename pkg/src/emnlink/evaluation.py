"""Evaluation protocol: candidate recall at k, cross-validated rank-1
disambiguation accuracy, contextual-knowledge ablation, and combined
explicit+implicit linking F1 against a pluggable explicit-linker stub.

Every run can dump per-tweet prediction records to a TSV audit file;
the naive scorers at the bottom recompute each reported metric from
that file alone, so nothing has to be taken on trust.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import GoldLabel, Tweet
from .emn import EMNGraph
from .errors import EmptySetError, FormatError, InsufficientDataError, NoCandidateError
from .linker import (
    DEFAULT_K,
    DEFAULT_TRADEOFF,
    CandidateScore,
    FeatureVector,
    TrainedRanker,
    TrainingQuery,
    featurize,
    rank,
    select_candidates,
    train,
    tweet_clues,
)

__all__ = [
    "FoldPlan",
    "PredictionRecord",
    "EvalReport",
    "CombinedMetrics",
    "CombinedReport",
    "ExplicitLinkerStub",
    "plan_folds",
    "training_queries",
    "recall_at_k",
    "cross_validate",
    "ablate_context",
    "combined_f1",
    "mix_evaluation_set",
    "dump_predictions",
    "load_predictions",
    "score_predictions",
    "recall_from_dump",
    "dump_combined",
    "score_combined",
]

PREDICTIONS_MAGIC = "#emn-predictions"
PREDICTIONS_VERSION = "v1"
DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of tweet ids to cross-validation folds."""

    assignments: Mapping[str, int]
    folds: int

    def test_ids(self, fold: int) -> list[str]:
        return sorted(t for t, f in self.assignments.items() if f == fold)

    def train_ids(self, fold: int) -> list[str]:
        return sorted(t for t, f in self.assignments.items() if f != fold)


def plan_folds(tweet_ids: Iterable[str], folds: int = DEFAULT_FOLDS, seed: int = 0) -> FoldPlan:
    """Shuffle ids with the given seed and deal them round-robin.

    Fold sizes differ by at most one.
    """
    ids = sorted(tweet_ids)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if len(ids) < folds:
        raise EmptySetError(f"{len(ids)} tweets cannot fill {folds} folds")
    rng = random.Random(seed)
    rng.shuffle(ids)
    return FoldPlan(
        assignments={tid: i % folds for i, tid in enumerate(ids)}, folds=folds
    )


@dataclass(frozen=True)
class PredictionRecord:
    """One audited prediction: what the system said for one tweet."""

    tweet_id: str
    fold: int | None
    gold: str
    predicted: str
    gold_rank: int | None

    @property
    def correct(self) -> bool:
        return bool(self.gold) and self.predicted == self.gold


@dataclass(frozen=True)
class CombinedMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Metrics from one evaluation run; unset sections stay None."""

    recall_at_k: float | None = None
    disambiguation_accuracy: float | None = None
    per_fold: tuple[float, ...] = ()
    combined: CombinedMetrics | None = None
    predictions: tuple[PredictionRecord, ...] = ()


@dataclass(frozen=True)
class CombinedReport:
    el_only: CombinedMetrics
    combined: CombinedMetrics
    records: tuple["CombinedRecord", ...]


@dataclass(frozen=True)
class CombinedRecord:
    """Per-tweet trace of the combined evaluation, one row per tweet."""

    tweet_id: str
    gold_label: str
    gold: str
    el_predicted: str
    combined_predicted: str


@dataclass(frozen=True)
class ExplicitLinkerStub:
    """Recorded output of an external explicit-entity linker.

    Absent tweet id means the linker produced no annotation.
    """

    behavior: Mapping[str, str]

    @classmethod
    def from_tsv(cls, path: str | Path) -> "ExplicitLinkerStub":
        behavior: dict[str, str] = {}
        for lineno, raw in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not raw.strip() or raw.startswith("#"):
                continue
            parts = raw.split("\t")
            if len(parts) != 2:
                raise FormatError("expected tweet_id<TAB>entity_id", lineno)
            tweet_id, entity_id = parts[0].strip(), parts[1].strip()
            if not tweet_id:
                raise FormatError("empty tweet id", lineno)
            if entity_id:
                behavior[tweet_id] = entity_id
        return cls(behavior=behavior)

    def predict(self, tweet_id: str) -> str | None:
        return self.behavior.get(tweet_id)


def _analyze(
    graph: EMNGraph, tweet: Tweet, k: int
) -> tuple[list[CandidateScore], dict[str, FeatureVector]] | None:
    """Candidates and features for one tweet, or None when nothing matches."""
    clues = tweet_clues(graph, tweet.text)
    try:
        candidates = select_candidates(graph, clues, k)
    except NoCandidateError:
        return None
    return candidates, featurize(graph, candidates, clues)


def recall_at_k(
    graph: EMNGraph, tweets: Sequence[Tweet], k: int = DEFAULT_K
) -> tuple[float, list[PredictionRecord]]:
    """Percentage of tweets whose gold entity appears in the top-k candidates.

    Tweets where candidate selection finds nothing count as misses.
    Returns the percentage and per-tweet records with the gold's position
    in candidate order (1-based; None when absent).
    """
    if not tweets:
        raise EmptySetError("no tweets to evaluate")
    records: list[PredictionRecord] = []
    hits = 0
    for tweet in tweets:
        if not tweet.gold_entity:
            raise ValueError(f"tweet {tweet.id} has no gold entity")
        analyzed = _analyze(graph, tweet, k)
        gold_rank: int | None = None
        predicted = ""
        if analyzed is not None:
            candidates, _ = analyzed
            predicted = candidates[0].entity_id
            for pos, candidate in enumerate(candidates, start=1):
                if candidate.entity_id == tweet.gold_entity:
                    gold_rank = pos
                    break
        if gold_rank is not None:
            hits += 1
        records.append(
            PredictionRecord(
                tweet_id=tweet.id,
                fold=None,
                gold=tweet.gold_entity,
                predicted=predicted,
                gold_rank=gold_rank,
            )
        )
    return 100.0 * hits / len(tweets), records


def _query_for(graph: EMNGraph, tweet: Tweet, k: int) -> TrainingQuery | None:
    analyzed = _analyze(graph, tweet, k)
    if analyzed is None:
        return None
    _, features = analyzed
    return TrainingQuery(tweet_id=tweet.id, features=features, gold=tweet.gold_entity or "")


def training_queries(
    graph: EMNGraph, tweets: Sequence[Tweet], k: int = DEFAULT_K
) -> list[TrainingQuery]:
    """One query per tweet that yields candidates; the rest are dropped."""
    return [q for t in tweets if (q := _query_for(graph, t, k)) is not None]


def _evaluate_fold(
    graph: EMNGraph,
    fold: int,
    train_tweets: Sequence[Tweet],
    test_tweets: Sequence[Tweet],
    k: int,
    c_tradeoff: float,
    epochs: int,
) -> tuple[TrainedRanker, list[PredictionRecord]]:
    queries = training_queries(graph, train_tweets, k)
    try:
        ranker = train(queries, c_tradeoff=c_tradeoff, epochs=epochs)
    except InsufficientDataError as exc:
        raise InsufficientDataError(f"fold {fold}: {exc}") from exc
    records: list[PredictionRecord] = []
    for tweet in test_tweets:
        analyzed = _analyze(graph, tweet, k)
        predicted = ""
        gold_rank: int | None = None
        if analyzed is not None:
            _, features = analyzed
            ranked = rank(ranker, features)
            predicted = ranked[0][0]
            for pos, (entity_id, _) in enumerate(ranked, start=1):
                if entity_id == tweet.gold_entity:
                    gold_rank = pos
                    break
        records.append(
            PredictionRecord(
                tweet_id=tweet.id,
                fold=fold,
                gold=tweet.gold_entity or "",
                predicted=predicted,
                gold_rank=gold_rank,
            )
        )
    return ranker, records


def cross_validate(
    graph: EMNGraph,
    tweets: Sequence[Tweet],
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    c_tradeoff: float = DEFAULT_TRADEOFF,
    k: int = DEFAULT_K,
    epochs: int = 200,
    threads: int = 1,
) -> EvalReport:
    """K-fold cross-validated rank-1 accuracy.

    Each fold's ranker is trained on the out-of-fold tweets and scored
    on the in-fold ones; the headline accuracy pools every evaluation
    tweet rather than averaging fold means.
    """
    if not tweets:
        raise EmptySetError("no tweets to evaluate")
    for tweet in tweets:
        if not tweet.gold_entity:
            raise ValueError(f"tweet {tweet.id} has no gold entity")
    by_id = {t.id: t for t in tweets}
    plan = plan_folds(by_id, folds=folds, seed=seed)

    def run_fold(fold: int) -> list[PredictionRecord]:
        train_tweets = [by_id[t] for t in plan.train_ids(fold)]
        test_tweets = [by_id[t] for t in plan.test_ids(fold)]
        _, records = _evaluate_fold(
            graph, fold, train_tweets, test_tweets, k, c_tradeoff, epochs
        )
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_fold_records = list(pool.map(run_fold, range(folds)))
    else:
        per_fold_records = [run_fold(fold) for fold in range(folds)]

    per_fold: list[float] = []
    pooled: list[PredictionRecord] = []
    for records in per_fold_records:
        correct = sum(1 for r in records if r.correct)
        per_fold.append(100.0 * correct / len(records) if records else 0.0)
        pooled.extend(records)
    accuracy = 100.0 * sum(1 for r in pooled if r.correct) / len(pooled)
    return EvalReport(
        disambiguation_accuracy=accuracy,
        per_fold=tuple(per_fold),
        predictions=tuple(pooled),
    )


def ablate_context(
    bundle,
    config,
    gold: Sequence[Tweet] | None = None,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> tuple[EvalReport, EvalReport]:
    """Build two graphs differing only in contextual knowledge, score both.

    Returns (with_context, without_context); each report carries recall
    at the configured k and cross-validated accuracy over the gold
    tweets (defaults to the bundle's gold-labeled ones).
    """
    from .pipeline import build_graph

    if gold is None:
        gold = [t for t in bundle.tweets if t.gold_entity]
    else:
        gold = list(gold)
    if not gold:
        raise EmptySetError("no gold-labeled tweets for ablation")
    reports = []
    for include in (True, False):
        graph = build_graph(bundle, config, include_contextual=include).graph
        recall, records = recall_at_k(graph, gold, k=config.k)
        cv = cross_validate(
            graph,
            gold,
            folds=folds,
            seed=seed,
            c_tradeoff=config.c_tradeoff,
            k=config.k,
        )
        reports.append(
            EvalReport(
                recall_at_k=recall,
                disambiguation_accuracy=cv.disambiguation_accuracy,
                per_fold=cv.per_fold,
                predictions=tuple(records) + cv.predictions,
            )
        )
    return reports[0], reports[1]


def _prf(correct: int, annotated: int, with_entity: int) -> CombinedMetrics:
    precision = correct / annotated if annotated else 0.0
    recall = correct / with_entity if with_entity else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return CombinedMetrics(precision=precision, recall=recall, f1=f1)


def combined_f1(
    stub: ExplicitLinkerStub,
    mixed_tweets: Sequence[Tweet],
    graph: EMNGraph,
    ranker: TrainedRanker,
    k: int = DEFAULT_K,
) -> CombinedReport:
    """Score explicit-only linking against explicit+implicit linking.

    The EL-only arm takes the stub's annotations as-is.  The combined
    arm passes every tweet the stub left unannotated through the
    implicit linker and adds its rank-1 answer when one exists.
    Precision divides correct annotations by all annotations made;
    recall divides by the number of tweets that truly carry an entity.
    """
    if not mixed_tweets:
        raise EmptySetError("no tweets to evaluate")
    with_entity = sum(1 for t in mixed_tweets if t.gold_entity)
    records: list[CombinedRecord] = []
    el_correct = el_annotated = 0
    both_correct = both_annotated = 0
    for tweet in mixed_tweets:
        el_pred = stub.predict(tweet.id) or ""
        combined_pred = el_pred
        if not el_pred:
            analyzed = _analyze(graph, tweet, k)
            if analyzed is not None:
                _, features = analyzed
                combined_pred = rank(ranker, features)[0][0]
        gold = tweet.gold_entity or ""
        if el_pred:
            el_annotated += 1
            if gold and el_pred == gold:
                el_correct += 1
        if combined_pred:
            both_annotated += 1
            if gold and combined_pred == gold:
                both_correct += 1
        records.append(
            CombinedRecord(
                tweet_id=tweet.id,
                gold_label=tweet.gold_label.value if tweet.gold_label else "",
                gold=gold,
                el_predicted=el_pred,
                combined_predicted=combined_pred,
            )
        )
    return CombinedReport(
        el_only=_prf(el_correct, el_annotated, with_entity),
        combined=_prf(both_correct, both_annotated, with_entity),
        records=tuple(records),
    )


def mix_evaluation_set(
    implicit: Sequence[Tweet],
    explicit: Sequence[Tweet],
    nil: Sequence[Tweet],
    ratio: tuple[int, int] = (4, 1),
    seed: int = 0,
) -> tuple[list[Tweet], list[Tweet]]:
    """Compose a mixed evaluation set from the three labeled pools.

    40% of the implicit pool (rounded down) is held out for evaluation
    and the rest returned for training.  Explicit tweets are sampled at
    ratio[0]:ratio[1] relative to the implicit evaluation count, and
    NIL tweets at 25% of the explicit+implicit total; all counts round
    down and all sampling is seeded.  Returns (train_implicit, mixed).
    """
    if not implicit:
        raise EmptySetError("implicit pool is empty")
    if ratio[0] < 1 or ratio[1] < 1:
        raise ValueError("ratio parts must be >= 1")
    rng = random.Random(seed)
    impl_sorted = sorted(implicit, key=lambda t: t.id)
    n_test = math.floor(0.4 * len(impl_sorted))
    if n_test < 1:
        raise EmptySetError("implicit pool too small for a 40% evaluation split")
    test_impl = rng.sample(impl_sorted, n_test)
    test_ids = {t.id for t in test_impl}
    train_impl = [t for t in impl_sorted if t.id not in test_ids]
    n_expl = min(math.floor(n_test * ratio[0] / ratio[1]), len(explicit))
    expl_sample = rng.sample(sorted(explicit, key=lambda t: t.id), n_expl)
    n_nil = min(math.floor(0.25 * (n_expl + n_test)), len(nil))
    nil_sample = rng.sample(sorted(nil, key=lambda t: t.id), n_nil)
    mixed = sorted(test_impl + expl_sample + nil_sample, key=lambda t: t.id)
    return train_impl, mixed


def dump_predictions(records: Sequence[PredictionRecord], path: str | Path) -> None:
    """Write the audit TSV; every metric is recomputable from this file."""
    lines = [
        f"{PREDICTIONS_MAGIC}\t{PREDICTIONS_VERSION}",
        "tweet_id\tfold\tgold\tpredicted\tgold_rank",
    ]
    for r in records:
        fold = "-" if r.fold is None else str(r.fold)
        gold_rank = "-" if r.gold_rank is None else str(r.gold_rank)
        lines.append(f"{r.tweet_id}\t{fold}\t{r.gold}\t{r.predicted}\t{gold_rank}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(PREDICTIONS_MAGIC):
        raise FormatError("not a predictions file", 1)
    records: list[PredictionRecord] = []
    for lineno, raw in enumerate(lines[2:], start=3):
        if not raw:
            continue
        parts = raw.split("\t")
        if len(parts) != 5:
            raise FormatError("expected 5 columns", lineno)
        records.append(
            PredictionRecord(
                tweet_id=parts[0],
                fold=None if parts[1] == "-" else int(parts[1]),
                gold=parts[2],
                predicted=parts[3],
                gold_rank=None if parts[4] == "-" else int(parts[4]),
            )
        )
    return records


def score_predictions(path: str | Path) -> dict:
    """Naive re-scorer: recompute accuracy from the dump by counting.

    Deliberately shares no code with the evaluation above.
    """
    rows = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines()[2:]:
        if raw:
            rows.append(raw.split("\t"))
    if not rows:
        raise EmptySetError("no prediction rows")
    correct = sum(1 for r in rows if r[2] and r[3] == r[2])
    by_fold: dict[int, list[bool]] = {}
    for r in rows:
        if r[1] != "-":
            by_fold.setdefault(int(r[1]), []).append(bool(r[2]) and r[3] == r[2])
    return {
        "accuracy": 100.0 * correct / len(rows),
        "per_fold": {
            fold: 100.0 * sum(hits) / len(hits) for fold, hits in by_fold.items()
        },
    }


def recall_from_dump(path: str | Path, k: int) -> float:
    """Naive recall@k over the dump: count gold_rank columns within k."""
    rows = [
        raw.split("\t")
        for raw in Path(path).read_text(encoding="utf-8").splitlines()[2:]
        if raw
    ]
    if not rows:
        raise EmptySetError("no prediction rows")
    hits = sum(1 for r in rows if r[4] != "-" and int(r[4]) <= k)
    return 100.0 * hits / len(rows)


def dump_combined(records: Sequence[CombinedRecord], path: str | Path) -> None:
    lines = [
        f"{PREDICTIONS_MAGIC}-combined\t{PREDICTIONS_VERSION}",
        "tweet_id\tgold_label\tgold\tel_predicted\tcombined_predicted",
    ]
    for r in records:
        lines.append(
            f"{r.tweet_id}\t{r.gold_label}\t{r.gold}\t{r.el_predicted}\t{r.combined_predicted}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def score_combined(path: str | Path) -> dict:
    """Naive combined-arm scorer over the dump: plain column counting."""
    rows = [
        raw.split("\t")
        for raw in Path(path).read_text(encoding="utf-8").splitlines()[2:]
        if raw
    ]
    if not rows:
        raise EmptySetError("no combined rows")
    with_entity = sum(1 for r in rows if r[2])
    out = {}
    for arm, col in (("el_only", 3), ("combined", 4)):
        annotated = sum(1 for r in rows if r[col])
        correct = sum(1 for r in rows if r[col] and r[2] and r[col] == r[2])
        p = correct / annotated if annotated else 0.0
        rc = correct / with_entity if with_entity else 0.0
        f1 = 2 * p * rc / (p + rc) if p + rc > 0 else 0.0
        out[arm] = {"precision": p, "recall": rc, "f1": f1}
    return out
