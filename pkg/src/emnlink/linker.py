"""Two-step linking: evidence-scored candidate retrieval, then a learned
linear pairwise ranker over (cosine similarity, relative salience).

Tweet clues are matched against clue nodes by exact name; every entity
reachable from a matched clue is scored by the sum of specificity times
edge frequency over its matched clues, and the top k survive.  Features
are computed per candidate and a linear model trained on preference
pairs (gold minus other) orders the final list.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .emn import EMNGraph, entity_vector
from .errors import FormatError, InsufficientDataError, NoCandidateError
from .textprep import ClueSet, clean, extract_clues

__all__ = [
    "LinkRequest",
    "MatchedClue",
    "CandidateScore",
    "FeatureVector",
    "TrainingQuery",
    "TrainedRanker",
    "RankedEntity",
    "tweet_clues",
    "select_candidates",
    "featurize",
    "train",
    "rank",
    "link",
    "save_ranker",
    "load_ranker",
]

RANKER_VERSION = "v1"
DEFAULT_K = 25
DEFAULT_TRADEOFF = 0.01
DEFAULT_EPOCHS = 200
DEFAULT_LEARNING_RATE = 0.1

# How tweet-side clue multiplicity enters the tweet vector.
WEIGHTING_BINARY = "binary"
WEIGHTING_TF = "tf"


@dataclass(frozen=True)
class LinkRequest:
    """One linking query: the entity type plus the tweet text."""

    entity_type: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("request text must be non-empty")


class MatchedClue(NamedTuple):
    clue_name: str
    specificity: float
    frequency: int


@dataclass(frozen=True)
class CandidateScore:
    """An entity with its summed clue evidence for one tweet."""

    entity_id: str
    evidence: float
    matched_clues: tuple[MatchedClue, ...]


@dataclass(frozen=True)
class FeatureVector:
    """Disambiguation features of one candidate."""

    cosine: float
    rel_salience: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.cosine, self.rel_salience)


@dataclass(frozen=True)
class TrainingQuery:
    """One training tweet: its candidate features and the gold entity."""

    tweet_id: str
    features: Mapping[str, FeatureVector]
    gold: str


@dataclass(frozen=True)
class TrainedRanker:
    """Linear ranking model: score = w . (cosine, rel_salience)."""

    weights: tuple[float, float]
    trained_on: str
    swapped_pairs: int | None = None
    skipped_queries: int | None = None
    loss_history: tuple[float, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class RankedEntity:
    """One row of a final ranked answer."""

    entity_id: str
    score: float
    cosine: float
    rel_salience: float
    evidence: float


def tweet_clues(graph: EMNGraph, text: str) -> ClueSet:
    """Clean a tweet and extract its clues against the graph vocabulary.

    Phrases are spotted with the graph's own multi-word clue names, which
    keeps a serialized graph self-contained at link time; clue names the
    graph does not know cannot match anything anyway.
    """
    return extract_clues(clean(text), graph.phrase_vocabulary(), frozenset())


def select_candidates(
    graph: EMNGraph, clues: ClueSet, k: int = DEFAULT_K
) -> list[CandidateScore]:
    """Retrieve the k entities with the strongest clue evidence.

    Every entity adjacent to a matched clue is scored by the sum of
    specificity x edge frequency over its matched clues.  Entities whose
    matched clues all have zero specificity carry no evidence and are
    dropped.  Ties break by higher salience, then entity id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    by_entity: dict[str, list[MatchedClue]] = {}
    for name in sorted(clues.names()):
        node = graph.clues.get(name)
        if node is None:
            continue
        for entity_id, frequency in graph.clue_to_entities[name].items():
            by_entity.setdefault(entity_id, []).append(
                MatchedClue(name, node.specificity, frequency)
            )
    scored: list[CandidateScore] = []
    for entity_id, matched in by_entity.items():
        evidence = math.fsum(mc.specificity * mc.frequency for mc in matched)
        if evidence > 0:
            scored.append(CandidateScore(entity_id, evidence, tuple(matched)))
    if not scored:
        raise NoCandidateError("no tweet clue carries evidence toward any entity")
    scored.sort(
        key=lambda c: (-c.evidence, -graph.salience_of(c.entity_id), c.entity_id)
    )
    return scored[:k]


def _cosine(entity_vec: Mapping[str, float], tweet_vec: Mapping[str, float]) -> float:
    dot = math.fsum(
        entity_vec[name] * value
        for name, value in tweet_vec.items()
        if name in entity_vec
    )
    norm_e = math.sqrt(math.fsum(v * v for v in entity_vec.values()))
    norm_t = math.sqrt(math.fsum(v * v for v in tweet_vec.values()))
    if norm_e == 0.0 or norm_t == 0.0:
        return 0.0
    return min(1.0, max(0.0, dot / (norm_e * norm_t)))


def featurize(
    graph: EMNGraph,
    candidates: Sequence[CandidateScore],
    clues: ClueSet,
    weighting: str = WEIGHTING_BINARY,
) -> dict[str, FeatureVector]:
    """Compute (cosine, relative salience) for each candidate.

    The tweet vector spans the tweet clues known to the graph; binary
    weighting puts 1 per distinct clue, "tf" uses occurrence counts.
    Relative salience normalizes each candidate's salience by the
    candidate set's total, falling back to uniform when the total is 0.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if weighting == WEIGHTING_BINARY:
        tweet_vec = {n: 1.0 for n in clues.names() if n in graph.clues}
    elif weighting == WEIGHTING_TF:
        tweet_vec = {
            n: float(c) for n, c in clues.counts().items() if n in graph.clues
        }
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    saliences = {c.entity_id: graph.salience_of(c.entity_id) for c in candidates}
    total = sum(saliences.values())
    features: dict[str, FeatureVector] = {}
    for candidate in candidates:
        cos = _cosine(entity_vector(graph, candidate.entity_id), tweet_vec)
        if total > 0:
            rel = saliences[candidate.entity_id] / total
        else:
            rel = 1.0 / len(candidates)
        features[candidate.entity_id] = FeatureVector(cosine=cos, rel_salience=rel)
    return features


def _fingerprint(queries: Sequence[TrainingQuery]) -> str:
    h = hashlib.sha256()
    for q in sorted(queries, key=lambda q: q.tweet_id):
        h.update(q.tweet_id.encode())
        h.update(q.gold.encode())
        for entity_id in sorted(q.features):
            fv = q.features[entity_id]
            h.update(f"{entity_id}:{fv.cosine!r}:{fv.rel_salience!r}".encode())
    return h.hexdigest()[:16]


def _hinge_loss(w: np.ndarray, diffs: np.ndarray, c_tradeoff: float) -> float:
    margins = diffs @ w
    return float(0.5 * (w @ w) + c_tradeoff * np.maximum(0.0, 1.0 - margins).sum())


def train(
    queries: Sequence[TrainingQuery],
    c_tradeoff: float = DEFAULT_TRADEOFF,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
) -> TrainedRanker:
    """Fit the linear pairwise ranker on per-query preference pairs.

    Queries whose gold entity is missing from their candidate features
    are skipped and counted.  Each remaining query contributes one
    difference vector (gold minus other) per non-gold candidate; the
    optimizer minimizes 0.5*||w||^2 + c * sum hinge(1 - w.d) by
    full-batch subgradient descent with a 1/sqrt(t) step schedule and
    halving backtracking, so the recorded loss never increases.  The
    final swapped-pair count on the training pairs is reported.
    """
    usable: list[TrainingQuery] = []
    diffs: list[tuple[float, float]] = []
    skipped = 0
    for query in queries:
        if query.gold not in query.features:
            skipped += 1
            continue
        usable.append(query)
        gold_f = query.features[query.gold].as_tuple()
        for entity_id in sorted(query.features):
            if entity_id == query.gold:
                continue
            other_f = query.features[entity_id].as_tuple()
            diffs.append((gold_f[0] - other_f[0], gold_f[1] - other_f[1]))
    if not diffs:
        raise InsufficientDataError(
            f"no usable preference pairs ({skipped} queries skipped)"
        )
    d = np.asarray(diffs, dtype=np.float64)
    w = np.zeros(2, dtype=np.float64)
    losses = [_hinge_loss(w, d, c_tradeoff)]
    for t in range(1, epochs + 1):
        margins = d @ w
        violating = margins < 1.0
        grad = w - c_tradeoff * d[violating].sum(axis=0)
        if not np.any(grad):
            break
        eta = learning_rate / math.sqrt(t)
        current = losses[-1]
        accepted = False
        for _ in range(60):
            w_next = w - eta * grad
            loss_next = _hinge_loss(w_next, d, c_tradeoff)
            if loss_next <= current:
                w = w_next
                losses.append(loss_next)
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            losses.append(current)
    swapped = int((d @ w <= 0.0).sum())
    return TrainedRanker(
        weights=(float(w[0]), float(w[1])),
        trained_on=_fingerprint(usable),
        swapped_pairs=swapped,
        skipped_queries=skipped,
        loss_history=tuple(losses),
    )


def rank(
    ranker: TrainedRanker, features: Mapping[str, FeatureVector]
) -> list[tuple[str, float]]:
    """Order candidates by w . f, descending.

    Ties break by higher relative salience, then entity id.
    """
    if not features:
        raise ValueError("features must be non-empty")
    w_cos, w_sal = ranker.weights
    rows = [
        (entity_id, w_cos * fv.cosine + w_sal * fv.rel_salience)
        for entity_id, fv in features.items()
    ]
    rows.sort(key=lambda r: (-r[1], -features[r[0]].rel_salience, r[0]))
    return rows


def link(
    graph: EMNGraph,
    ranker: TrainedRanker,
    request: LinkRequest,
    k: int = DEFAULT_K,
) -> list[RankedEntity]:
    """Full pipeline for one tweet: clues, candidates, features, ranking."""
    if (
        graph.entity_type
        and request.entity_type
        and graph.entity_type.lower() != request.entity_type.lower()
    ):
        raise ValueError(
            f"graph was built for type {graph.entity_type!r}, "
            f"request is for {request.entity_type!r}"
        )
    clues = tweet_clues(graph, request.text)
    candidates = select_candidates(graph, clues, k)
    features = featurize(graph, candidates, clues)
    evidence = {c.entity_id: c.evidence for c in candidates}
    return [
        RankedEntity(
            entity_id=entity_id,
            score=score,
            cosine=features[entity_id].cosine,
            rel_salience=features[entity_id].rel_salience,
            evidence=evidence[entity_id],
        )
        for entity_id, score in rank(ranker, features)
    ]


def save_ranker(ranker: TrainedRanker, path: str | Path) -> None:
    """Write the model file: one header line, then the two weights."""
    lines = [
        f"emn-ranker\t{RANKER_VERSION}\ttrained_on={ranker.trained_on}",
        repr(ranker.weights[0]),
        repr(ranker.weights[1]),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_ranker(path: str | Path) -> TrainedRanker:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 3 or not lines[0].startswith("emn-ranker\t"):
        raise FormatError("not a ranker model file", 1)
    header = lines[0].split("\t")
    if header[1] != RANKER_VERSION:
        raise FormatError(f"unsupported ranker version {header[1]!r}", 1)
    trained_on = ""
    for part in header[2:]:
        if part.startswith("trained_on="):
            trained_on = part.split("=", 1)[1]
    try:
        weights = (float(lines[1]), float(lines[2]))
    except ValueError:
        raise FormatError("bad weight value", 2) from None
    return TrainedRanker(weights=weights, trained_on=trained_on)
