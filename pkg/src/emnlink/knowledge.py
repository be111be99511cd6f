"""Per-entity knowledge acquisition from local corpora.

Three signals feed an entity model: factual texts pulled from triples
whose predicate ranks high for the entity type, recent tweets that
mention the entity explicitly, and a page-view sum over a trailing
window.  Spotting decides which entities get modeled at all: those whose
label shows up in the tweet pool.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

from .corpus import EntityRecord, PageViewRecord, Triple, Tweet
from .errors import EmptyCorpusError, UnknownEntityError

__all__ = [
    "RelationScore",
    "FactualKnowledge",
    "ContextualKnowledge",
    "TemporalSalience",
    "rank_relationships",
    "top_relations",
    "extract_factual",
    "collect_contextual",
    "temporal_salience",
    "spot_entities",
]


@dataclass(frozen=True)
class RelationScore:
    """A predicate and the fraction of its triples touching the type."""

    predicate: str
    score: float


@dataclass(frozen=True)
class FactualKnowledge:
    """Texts describing an entity: neighbor labels, literals, comment."""

    texts: tuple[str, ...]


@dataclass(frozen=True)
class ContextualKnowledge:
    """Recent tweets that explicitly mention the entity, capped."""

    tweets: tuple[Tweet, ...]


@dataclass(frozen=True)
class TemporalSalience:
    """Page-view sum over the salience window; 0 when unseen."""

    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("salience must be non-negative")


def rank_relationships(
    triples: Sequence[Triple], type_members: set[str] | frozenset[str]
) -> list[RelationScore]:
    """Score every predicate by how exclusively it is used with the type.

    score(r) = |triples of r whose subject or object is a type member|
               / |all triples of r|.
    Sorted by score descending, ties broken by predicate id.
    """
    if not triples:
        raise EmptyCorpusError("cannot rank relationships over an empty triple store")
    if not type_members:
        raise ValueError("type_members must be non-empty")
    total: Counter = Counter()
    touching: Counter = Counter()
    for t in triples:
        total[t.predicate] += 1
        if t.subject in type_members or (
            not t.object_is_literal and t.object in type_members
        ):
            touching[t.predicate] += 1
    scores = [
        RelationScore(predicate, touching[predicate] / count)
        for predicate, count in total.items()
    ]
    scores.sort(key=lambda rs: (-rs.score, rs.predicate))
    return scores


def top_relations(scores: Sequence[RelationScore], m: int) -> list[str]:
    """Predicate ids of the m best-scoring relationships."""
    return [rs.predicate for rs in scores[:m]]


def extract_factual(
    entity_id: str,
    records: Mapping[str, EntityRecord],
    triples: Sequence[Triple],
    relations: Sequence[str],
) -> FactualKnowledge:
    """Collect the factual texts for one entity.

    Takes every triple whose predicate is in ``relations`` and that has
    the entity as subject or (non-literal) object, and collects the label
    of the connected entity, or the literal value itself; the entity's
    own comment text is appended when non-empty.  Connected ids without a
    record contribute nothing.  Repeated texts are kept once, first
    occurrence wins.
    """
    record = records.get(entity_id)
    if record is None:
        raise UnknownEntityError(f"no entity record for {entity_id!r}")
    wanted = set(relations)
    texts: list[str] = []
    for t in triples:
        if t.predicate not in wanted:
            continue
        if t.subject == entity_id:
            if t.object_is_literal:
                texts.append(t.object)
            else:
                neighbor = records.get(t.object)
                if neighbor is not None:
                    texts.append(neighbor.label)
        elif not t.object_is_literal and t.object == entity_id:
            neighbor = records.get(t.subject)
            if neighbor is not None:
                texts.append(neighbor.label)
    if record.comment:
        texts.append(record.comment)
    return FactualKnowledge(texts=tuple(dict.fromkeys(texts)))


def collect_contextual(
    entity: EntityRecord,
    pool: Sequence[Tweet],
    type_keywords: Sequence[str],
    cap: int = 1000,
) -> ContextualKnowledge:
    """Pick the most recent tweets mentioning the entity explicitly.

    A tweet qualifies when its lowercased text contains the entity label
    and at least one type keyword ("gravity" + "movie"/"film").  The pool
    must already be ordered most recent first; the result is a prefix
    subsequence of it, at most ``cap`` long.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    label = entity.label.lower()
    keywords = [kw.lower() for kw in type_keywords]
    selected: list[Tweet] = []
    for tweet in pool:
        text = tweet.text.lower()
        if label in text and (not keywords or any(kw in text for kw in keywords)):
            selected.append(tweet)
            if len(selected) >= cap:
                break
    return ContextualKnowledge(tweets=tuple(selected))


def temporal_salience(
    entity_id: str,
    views: Iterable[PageViewRecord],
    as_of: date,
    window_days: int = 30,
) -> TemporalSalience:
    """Sum the entity's page views over the trailing window ending at as_of."""
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    start = as_of - timedelta(days=window_days - 1)
    total = sum(
        r.views for r in views if r.entity_id == entity_id and start <= r.date <= as_of
    )
    return TemporalSalience(value=total)


def _label_pattern(label: str) -> re.Pattern:
    # Token-boundary match: "it" must not hit inside "write".
    return re.compile(r"(?<!\w)" + re.escape(label.lower()) + r"(?!\w)")


def spot_entities(
    pool: Sequence[Tweet], records: Iterable[EntityRecord]
) -> set[str]:
    """Ids of entities whose label appears in at least one pooled tweet.

    Matching is a token-boundary substring test on lowercased text.
    """
    texts = [tweet.text.lower() for tweet in pool]
    spotted: set[str] = set()
    for record in records:
        label = record.label.lower()
        if not label:
            continue
        pattern = _label_pattern(label)
        for text in texts:
            # Cheap containment test first; the regex confirms boundaries.
            if label in text and pattern.search(text):
                spotted.add(record.entity_id)
                break
    return spotted
