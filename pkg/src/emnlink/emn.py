"""The entity model network: a bipartite clue/entity property graph.

Each entity contributes a model (clue name -> frequency and origin);
models are merged so shared clues become single clue nodes.  A clue's
specificity is ln(entity_count / clue_degree), an inverse-document-
frequency style weight that is zero exactly when the clue touches every
entity.  Edges point from clue to entity and carry the frequency with
which the clue occurred in the entity's contextual tweets (floored at 1
for clues seen only in factual texts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from enum import Flag, auto
from pathlib import Path
from typing import Iterator, Mapping, NamedTuple

from .corpus import EntityRecord, PhraseDictionary
from .errors import EmptyModelError, FormatError, KeyMismatchError, UnknownEntityError
from .knowledge import ContextualKnowledge, FactualKnowledge, TemporalSalience
from .textprep import clean, extract_clues

__all__ = [
    "ClueOrigin",
    "ClueStat",
    "EntityNode",
    "ClueNode",
    "EMNEdge",
    "EMNGraph",
    "build_entity_model",
    "assemble",
    "entity_vector",
    "save_snapshot",
    "load_snapshot",
]

SNAPSHOT_MAGIC = "#emn-snapshot"
SNAPSHOT_VERSION = "v1"


class ClueOrigin(Flag):
    """Which knowledge source(s) produced a clue."""

    FACTUAL = auto()
    CONTEXTUAL = auto()

    def render(self) -> str:
        parts = []
        if self & ClueOrigin.FACTUAL:
            parts.append("factual")
        if self & ClueOrigin.CONTEXTUAL:
            parts.append("contextual")
        return ",".join(parts)

    @classmethod
    def parse(cls, text: str) -> "ClueOrigin":
        origin = cls(0)
        for part in text.split(","):
            part = part.strip()
            if part == "factual":
                origin |= cls.FACTUAL
            elif part == "contextual":
                origin |= cls.CONTEXTUAL
            elif part:
                raise ValueError(f"unknown clue origin {part!r}")
        if not origin:
            raise ValueError("empty clue origin")
        return origin


class ClueStat(NamedTuple):
    """Frequency and origin of one clue inside one entity model."""

    frequency: int
    origin: ClueOrigin


@dataclass(frozen=True)
class EntityNode:
    entity_id: str
    name: str
    salience: TemporalSalience


@dataclass(frozen=True)
class ClueNode:
    clue_name: str
    specificity: float
    origin: ClueOrigin


class EMNEdge(NamedTuple):
    clue: str
    entity: str
    frequency: int


@dataclass(eq=True)
class EMNGraph:
    """Immutable-after-assembly bipartite graph of clues and entities.

    Adjacency is kept in both directions: clue -> {entity: frequency}
    and entity -> {clue: frequency}.  Instances are built by
    :func:`assemble` or :func:`load_snapshot` and never mutated after.
    """

    entities: dict[str, EntityNode]
    clues: dict[str, ClueNode]
    clue_to_entities: dict[str, dict[str, int]]
    entity_to_clues: dict[str, dict[str, int]]
    built_at: date
    entity_type: str = ""
    _phrase_vocab: PhraseDictionary | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def edges(self) -> Iterator[EMNEdge]:
        for clue_name in sorted(self.clue_to_entities):
            for entity_id in sorted(self.clue_to_entities[clue_name]):
                yield EMNEdge(
                    clue_name, entity_id, self.clue_to_entities[clue_name][entity_id]
                )

    def edge_count(self) -> int:
        return sum(len(adj) for adj in self.clue_to_entities.values())

    def phrase_vocabulary(self) -> PhraseDictionary:
        """Multi-word clue names, used to spot phrases in incoming tweets."""
        if self._phrase_vocab is None:
            self._phrase_vocab = PhraseDictionary(
                name for name in self.clues if " " in name
            )
        return self._phrase_vocab

    def salience_of(self, entity_id: str) -> int:
        return self.entities[entity_id].salience.value


def build_entity_model(
    entity: EntityRecord,
    factual: FactualKnowledge,
    contextual: ContextualKnowledge,
    dictionary: PhraseDictionary,
    stopwords: frozenset[str] | set[str],
) -> dict[str, ClueStat]:
    """Derive the clue map of one entity from its knowledge sources.

    Contextual tweets and factual texts are cleaned and clue-extracted in
    entity-model mode, where matched phrases also emit their component
    unigrams so partial mentions stay matchable.  A clue's frequency is
    its occurrence count across the contextual tweets; clues seen only in
    factual texts get a floor frequency of 1.
    """
    contextual_counts: dict[str, int] = {}
    for tweet in contextual.tweets:
        clues = extract_clues(
            clean(tweet.text), dictionary, stopwords, include_phrase_unigrams=True
        )
        for name, count in clues.counts().items():
            contextual_counts[name] = contextual_counts.get(name, 0) + count
    factual_names: set[str] = set()
    for text in factual.texts:
        clues = extract_clues(
            clean(text), dictionary, stopwords, include_phrase_unigrams=True
        )
        factual_names.update(clues.names())
    if not contextual_counts and not factual_names:
        raise EmptyModelError(
            f"entity {entity.entity_id!r} produced no clues from either source"
        )
    model: dict[str, ClueStat] = {}
    for name in sorted(set(contextual_counts) | factual_names):
        origin = ClueOrigin(0)
        if name in factual_names:
            origin |= ClueOrigin.FACTUAL
        if name in contextual_counts:
            origin |= ClueOrigin.CONTEXTUAL
        model[name] = ClueStat(max(contextual_counts.get(name, 0), 1), origin)
    return model


def assemble(
    models: Mapping[str, Mapping[str, ClueStat]],
    salience: Mapping[str, TemporalSalience],
    records: Mapping[str, EntityRecord],
    built_at: date,
    entity_type: str = "",
) -> EMNGraph:
    """Merge per-entity models into one graph and derive specificities.

    The three maps must share one key set.  Assembly is canonical (sorted
    by id and clue name), so any permutation of the inputs produces an
    identical graph.
    """
    if not (models.keys() == salience.keys() == records.keys()):
        raise KeyMismatchError(
            "models, salience, and records must cover the same entity ids"
        )
    entities: dict[str, EntityNode] = {}
    clue_to_entities: dict[str, dict[str, int]] = {}
    entity_to_clues: dict[str, dict[str, int]] = {}
    origins: dict[str, ClueOrigin] = {}
    for entity_id in sorted(models):
        record = records[entity_id]
        entities[entity_id] = EntityNode(
            entity_id=entity_id, name=record.label, salience=salience[entity_id]
        )
        entity_to_clues[entity_id] = {}
        for name in sorted(models[entity_id]):
            stat = models[entity_id][name]
            if stat.frequency < 1:
                raise ValueError(f"frequency must be >= 1 for clue {name!r}")
            clue_to_entities.setdefault(name, {})[entity_id] = stat.frequency
            entity_to_clues[entity_id][name] = stat.frequency
            origins[name] = origins.get(name, ClueOrigin(0)) | stat.origin
    n = len(entities)
    clues = {
        name: ClueNode(
            clue_name=name,
            specificity=math.log(n / len(adjacent)),
            origin=origins[name],
        )
        for name, adjacent in sorted(clue_to_entities.items())
    }
    return EMNGraph(
        entities=entities,
        clues=clues,
        clue_to_entities=clue_to_entities,
        entity_to_clues=entity_to_clues,
        built_at=built_at,
        entity_type=entity_type,
    )


def entity_vector(graph: EMNGraph, entity_id: str) -> dict[str, float]:
    """Sparse clue-space vector of an entity: specificity x edge frequency."""
    if entity_id not in graph.entities:
        raise UnknownEntityError(f"entity {entity_id!r} not in graph")
    return {
        name: graph.clues[name].specificity * frequency
        for name, frequency in graph.entity_to_clues[entity_id].items()
    }


def save_snapshot(graph: EMNGraph, path: str | Path) -> None:
    """Write the graph to a versioned three-section TSV snapshot.

    Output is byte-deterministic: rows are sorted and floats rendered
    with repr.  The stored specificity column is informational; loading
    recomputes it from the structure.
    """
    lines = [
        f"{SNAPSHOT_MAGIC}\t{SNAPSHOT_VERSION}",
        f"#entity_type\t{graph.entity_type}",
        f"#built_at\t{graph.built_at.isoformat()}",
        "#section\tentities",
    ]
    for entity_id in sorted(graph.entities):
        node = graph.entities[entity_id]
        lines.append(f"{entity_id}\t{node.name}\t{node.salience.value}")
    lines.append("#section\tclues")
    for name in sorted(graph.clues):
        node = graph.clues[name]
        lines.append(f"{name}\t{node.origin.render()}\t{node.specificity!r}")
    lines.append("#section\tedges")
    for edge in graph.edges():
        lines.append(f"{edge.clue}\t{edge.entity}\t{edge.frequency}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_snapshot(path: str | Path) -> EMNGraph:
    """Load a snapshot, recomputing specificities from the structure."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"{SNAPSHOT_MAGIC}\t"):
        raise FormatError("not an EMN snapshot", 1)
    version = lines[0].split("\t", 1)[1]
    if version != SNAPSHOT_VERSION:
        raise FormatError(f"unsupported snapshot version {version!r}", 1)
    entity_type = ""
    built_at: date | None = None
    section = ""
    entity_rows: list[tuple[str, str, int]] = []
    clue_rows: list[tuple[str, ClueOrigin]] = []
    edge_rows: list[tuple[str, str, int]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if fields[0] == "#entity_type":
            entity_type = fields[1] if len(fields) > 1 else ""
            continue
        if fields[0] == "#built_at":
            try:
                built_at = date.fromisoformat(fields[1])
            except (IndexError, ValueError):
                raise FormatError("bad built_at date", line_no) from None
            continue
        if fields[0] == "#section":
            if len(fields) != 2 or fields[1] not in ("entities", "clues", "edges"):
                raise FormatError("bad section header", line_no)
            section = fields[1]
            continue
        if section == "entities":
            if len(fields) != 3:
                raise FormatError("entity row needs 3 columns", line_no)
            try:
                salience = int(fields[2])
            except ValueError:
                raise FormatError(f"bad salience {fields[2]!r}", line_no) from None
            entity_rows.append((fields[0], fields[1], salience))
        elif section == "clues":
            if len(fields) != 3:
                raise FormatError("clue row needs 3 columns", line_no)
            try:
                origin = ClueOrigin.parse(fields[1])
            except ValueError as exc:
                raise FormatError(str(exc), line_no) from None
            clue_rows.append((fields[0], origin))
        elif section == "edges":
            if len(fields) != 3:
                raise FormatError("edge row needs 3 columns", line_no)
            try:
                frequency = int(fields[2])
            except ValueError:
                raise FormatError(f"bad frequency {fields[2]!r}", line_no) from None
            if frequency < 1:
                raise FormatError("edge frequency must be >= 1", line_no)
            edge_rows.append((fields[0], fields[1], frequency))
        else:
            raise FormatError("data row before any section header", line_no)
    if built_at is None:
        raise FormatError("snapshot is missing #built_at", 1)

    entities = {
        entity_id: EntityNode(entity_id, name, TemporalSalience(salience))
        for entity_id, name, salience in entity_rows
    }
    origins = dict(clue_rows)
    clue_to_entities: dict[str, dict[str, int]] = {}
    entity_to_clues: dict[str, dict[str, int]] = {entity_id: {} for entity_id in entities}
    for clue_name, entity_id, frequency in edge_rows:
        if clue_name not in origins:
            raise FormatError(f"edge references unknown clue {clue_name!r}")
        if entity_id not in entities:
            raise FormatError(f"edge references unknown entity {entity_id!r}")
        clue_to_entities.setdefault(clue_name, {})[entity_id] = frequency
        entity_to_clues[entity_id][clue_name] = frequency
    dangling = set(origins) - set(clue_to_entities)
    if dangling:
        raise FormatError(f"clues with no edges: {sorted(dangling)[:3]}")
    n = len(entities)
    clues = {
        name: ClueNode(name, math.log(n / len(adjacent)), origins[name])
        for name, adjacent in sorted(clue_to_entities.items())
    }
    return EMNGraph(
        entities=entities,
        clues=clues,
        clue_to_entities=clue_to_entities,
        entity_to_clues=entity_to_clues,
        built_at=built_at,
        entity_type=entity_type,
    )
