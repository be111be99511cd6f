"""End-to-end graph construction from raw corpora.

Wires the knowledge extractors together: pick the type members, spot
which of them the tweet pool actually mentions, rank the relationships
for the type, then build and assemble one model per spotted entity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import NamedTuple

from .config import Config
from .corpus import (
    EntityRecord,
    PageViewRecord,
    PhraseDictionary,
    Triple,
    Tweet,
    load_entity_records,
    load_page_views,
    load_phrase_dictionary,
    load_stopwords,
    load_triples,
    load_tweets,
)
from .emn import ClueStat, EMNGraph, assemble, build_entity_model
from .errors import ConfigError, EmptyModelError, EmptySetError
from .knowledge import (
    ContextualKnowledge,
    TemporalSalience,
    collect_contextual,
    extract_factual,
    rank_relationships,
    spot_entities,
    temporal_salience,
    top_relations,
)

__all__ = ["CorpusBundle", "BuildResult", "build_graph"]


@dataclass(frozen=True)
class CorpusBundle:
    """All raw inputs one build needs, already parsed."""

    tweets: tuple[Tweet, ...]
    triples: tuple[Triple, ...]
    records: dict[str, EntityRecord]
    views: tuple[PageViewRecord, ...]
    phrases: PhraseDictionary
    stopwords: frozenset[str] = field(default_factory=frozenset)

    @classmethod
    def from_files(
        cls,
        tweets: str | Path,
        triples: str | Path,
        labels: str | Path,
        pageviews: str | Path | None = None,
        phrases: str | Path | None = None,
        stopwords: str | Path | None = None,
    ) -> "CorpusBundle":
        return cls(
            tweets=tuple(load_tweets(tweets)),
            triples=tuple(load_triples(triples)),
            records={r.entity_id: r for r in load_entity_records(labels)},
            views=tuple(load_page_views(pageviews)) if pageviews else (),
            phrases=(
                load_phrase_dictionary(phrases)
                if phrases
                else PhraseDictionary(frozenset())
            ),
            stopwords=load_stopwords(stopwords) if stopwords else frozenset(),
        )


class BuildResult(NamedTuple):
    graph: EMNGraph
    skipped_entities: tuple[str, ...]


def _recency_pool(tweets: tuple[Tweet, ...]) -> list[Tweet]:
    """Most recent first; undated tweets follow in id order."""
    dated = sorted(
        (t for t in tweets if t.timestamp is not None),
        key=lambda t: (t.timestamp, t.id),
        reverse=True,
    )
    undated = sorted((t for t in tweets if t.timestamp is None), key=lambda t: t.id)
    return dated + undated


def _resolve_as_of(config: Config, bundle: CorpusBundle) -> date:
    if config.as_of_date is not None:
        return config.as_of_date
    if bundle.views:
        return max(v.date for v in bundle.views)
    raise ConfigError("as_of_date is required when no page views are provided")


def build_graph(
    bundle: CorpusBundle, config: Config, include_contextual: bool = True
) -> BuildResult:
    """Build the full graph for the configured entity type.

    Entities whose knowledge yields no clues at all are skipped and
    reported rather than failing the build.  With include_contextual
    off, models are factual-only (ablation arm).
    """
    wanted_type = config.entity_type.lower()
    type_members = {
        entity_id
        for entity_id, record in bundle.records.items()
        if not wanted_type or record.entity_type.lower() == wanted_type
    }
    if not type_members:
        raise EmptySetError(f"no entities of type {config.entity_type!r}")
    member_records = [bundle.records[i] for i in sorted(type_members)]
    pool = _recency_pool(bundle.tweets)
    spotted = sorted(spot_entities(pool, member_records))
    if not spotted:
        raise EmptySetError("spotting found no entity labels in the tweet pool")
    relations: list[str] = []
    if bundle.triples:
        relations = top_relations(
            rank_relationships(bundle.triples, type_members), config.m_relations
        )
    as_of = _resolve_as_of(config, bundle)

    def model_one(
        entity_id: str,
    ) -> tuple[str, dict[str, ClueStat] | None, TemporalSalience]:
        factual = extract_factual(entity_id, bundle.records, bundle.triples, relations)
        if include_contextual:
            contextual = collect_contextual(
                bundle.records[entity_id],
                pool,
                config.type_keywords,
                config.context_cap,
            )
        else:
            contextual = ContextualKnowledge(tweets=())
        salience = temporal_salience(
            entity_id, bundle.views, as_of, config.salience_window_days
        )
        try:
            model = build_entity_model(
                bundle.records[entity_id],
                factual,
                contextual,
                bundle.phrases,
                bundle.stopwords,
            )
        except EmptyModelError:
            return entity_id, None, salience
        return entity_id, model, salience

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as executor:
            results = list(executor.map(model_one, spotted))
    else:
        results = [model_one(entity_id) for entity_id in spotted]

    models: dict[str, dict[str, ClueStat]] = {}
    salience: dict[str, TemporalSalience] = {}
    skipped: list[str] = []
    for entity_id, model, sal in results:
        if model is None:
            skipped.append(entity_id)
            continue
        models[entity_id] = model
        salience[entity_id] = sal
    if not models:
        raise EmptySetError("every spotted entity produced an empty model")
    records = {entity_id: bundle.records[entity_id] for entity_id in models}
    graph = assemble(
        models, salience, records, built_at=as_of, entity_type=config.entity_type
    )
    return BuildResult(graph=graph, skipped_entities=tuple(skipped))
