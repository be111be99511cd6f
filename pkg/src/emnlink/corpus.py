"""Loaders for all external data files.

Every loader is a pure function from a file path to immutable in-memory
records, reports malformed lines with their line number, and has a
matching ``dump_*`` writer so that load -> dump -> load round-trips to
an identical value.

File formats (UTF-8, LF line endings):
  * tweets.jsonl   one JSON object per line: ``id``, ``text``, optional
                   ``timestamp`` (RFC 3339), ``gold_entity``,
                   ``gold_label`` in {"explicit", "implicit", "nil"}
  * triples.tsv    subject, predicate, object, is_literal ("0"/"1")
  * labels.tsv     entity_id, label, comment, entity_type
  * pageviews.tsv  entity_id, ISO date, views
  * phrases.txt    one phrase per line
  * stopwords.txt  one lowercase token per line
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import DuplicateIdError, FormatError, NegativeCountError

__all__ = [
    "GoldLabel",
    "Tweet",
    "Triple",
    "EntityRecord",
    "PageViewRecord",
    "PhraseDictionary",
    "load_tweets",
    "load_triples",
    "load_entity_records",
    "load_page_views",
    "load_phrase_dictionary",
    "load_stopwords",
    "dump_tweets",
    "dump_triples",
    "dump_entity_records",
    "dump_page_views",
    "dump_phrases",
    "dump_stopwords",
]


class GoldLabel(str, Enum):
    """Annotation category of a tweet in a gold corpus."""

    EXPLICIT = "explicit"
    IMPLICIT = "implicit"
    NIL = "nil"


@dataclass(frozen=True)
class Tweet:
    """A short text with an opaque id and optional gold annotation."""

    id: str
    text: str
    timestamp: datetime | None = None
    gold_entity: str | None = None
    gold_label: GoldLabel | None = None


@dataclass(frozen=True)
class Triple:
    """A (subject, predicate, object) fact; the object may be a literal."""

    subject: str
    predicate: str
    object: str
    object_is_literal: bool = False


@dataclass(frozen=True)
class EntityRecord:
    """Display label, free-text description, and type of one entity."""

    entity_id: str
    label: str
    comment: str = ""
    entity_type: str = ""


@dataclass(frozen=True)
class PageViewRecord:
    """Daily page-view count for one entity."""

    entity_id: str
    date: date
    views: int


def _normalize_phrase(s: str) -> str:
    return " ".join(s.lower().split())


class PhraseDictionary:
    """Set of known phrases with case- and whitespace-insensitive lookup.

    Membership queries are normalized the same way entries are: lowercased
    with internal whitespace collapsed to single spaces.
    """

    def __init__(self, phrases: Iterable[str] = ()):
        self._phrases = frozenset(
            p for p in (_normalize_phrase(s) for s in phrases) if p
        )

    def __contains__(self, phrase: str) -> bool:
        return _normalize_phrase(phrase) in self._phrases

    def contains(self, phrase: str) -> bool:
        return phrase in self

    def __len__(self) -> int:
        return len(self._phrases)

    def __iter__(self):
        return iter(sorted(self._phrases))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhraseDictionary):
            return NotImplemented
        return self._phrases == other._phrases

    def __hash__(self) -> int:
        return hash(self._phrases)

    def __repr__(self) -> str:
        return f"PhraseDictionary({len(self._phrases)} phrases)"


def _parse_timestamp(value: str, line: int) -> datetime:
    # datetime.fromisoformat in 3.10 rejects the RFC 3339 "Z" suffix.
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        raise FormatError(f"bad timestamp {value!r}", line) from None


def _require_str(obj: dict, key: str, line: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise FormatError(f"missing or empty {key!r}", line)
    return value


def load_tweets(path: str | Path) -> list[Tweet]:
    """Load a JSONL tweet file, preserving file order.

    Raises FormatError on malformed lines and DuplicateIdError when an id
    reappears; both carry the offending line number.
    """
    tweets: list[Tweet] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(obj, dict):
                raise FormatError("record is not a JSON object", line_no)
            tweet_id = _require_str(obj, "id", line_no)
            text = _require_str(obj, "text", line_no)
            if tweet_id in seen:
                raise DuplicateIdError(f"duplicate tweet id {tweet_id!r}", line_no)
            seen[tweet_id] = line_no
            timestamp = None
            if obj.get("timestamp") is not None:
                if not isinstance(obj["timestamp"], str):
                    raise FormatError("timestamp must be a string", line_no)
                timestamp = _parse_timestamp(obj["timestamp"], line_no)
            gold_label = None
            if obj.get("gold_label") is not None:
                try:
                    gold_label = GoldLabel(obj["gold_label"])
                except ValueError:
                    raise FormatError(
                        f"bad gold_label {obj['gold_label']!r}", line_no
                    ) from None
            gold_entity = obj.get("gold_entity")
            if gold_entity is not None and not isinstance(gold_entity, str):
                raise FormatError("gold_entity must be a string", line_no)
            tweets.append(
                Tweet(
                    id=tweet_id,
                    text=text,
                    timestamp=timestamp,
                    gold_entity=gold_entity,
                    gold_label=gold_label,
                )
            )
    return tweets


def _split_columns(raw: str, n: int, line: int) -> list[str]:
    fields = raw.split("\t")
    if len(fields) != n:
        raise FormatError(f"expected {n} tab-separated columns, got {len(fields)}", line)
    return [f.strip() for f in fields]


def load_triples(path: str | Path) -> list[Triple]:
    """Load a 4-column TSV of facts: subject, predicate, object, literal flag."""
    triples: list[Triple] = []
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            raw = raw.rstrip("\n")
            if not raw.strip():
                continue
            subject, predicate, obj, flag = _split_columns(raw, 4, line_no)
            if not subject or not predicate or not obj:
                raise FormatError("empty triple component", line_no)
            if flag not in ("0", "1"):
                raise FormatError(f"literal flag must be 0 or 1, got {flag!r}", line_no)
            triples.append(Triple(subject, predicate, obj, flag == "1"))
    return triples


def load_entity_records(path: str | Path) -> list[EntityRecord]:
    """Load a 4-column TSV of entities: id, label, comment, type."""
    records: list[EntityRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            raw = raw.rstrip("\n")
            if not raw.strip():
                continue
            entity_id, label, comment, entity_type = _split_columns(raw, 4, line_no)
            if not entity_id:
                raise FormatError("empty entity_id", line_no)
            if not label:
                raise FormatError("empty label", line_no)
            if entity_id in seen:
                raise DuplicateIdError(f"duplicate entity id {entity_id!r}", line_no)
            seen.add(entity_id)
            records.append(EntityRecord(entity_id, label, comment, entity_type))
    return records


def load_page_views(path: str | Path) -> list[PageViewRecord]:
    """Load a 3-column TSV of daily page views: entity_id, ISO date, count."""
    records: list[PageViewRecord] = []
    seen: set[tuple[str, date]] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            raw = raw.rstrip("\n")
            if not raw.strip():
                continue
            entity_id, date_str, views_str = _split_columns(raw, 3, line_no)
            if not entity_id:
                raise FormatError("empty entity_id", line_no)
            try:
                day = date.fromisoformat(date_str)
            except ValueError:
                raise FormatError(f"bad date {date_str!r}", line_no) from None
            try:
                views = int(views_str)
            except ValueError:
                raise FormatError(f"bad view count {views_str!r}", line_no) from None
            if views < 0:
                raise NegativeCountError(f"negative view count {views}", line_no)
            key = (entity_id, day)
            if key in seen:
                raise DuplicateIdError(
                    f"duplicate page-view key ({entity_id!r}, {day})", line_no
                )
            seen.add(key)
            records.append(PageViewRecord(entity_id, day, views))
    return records


def load_phrase_dictionary(path: str | Path) -> PhraseDictionary:
    """Load one phrase per line into a normalized phrase set."""
    with open(path, encoding="utf-8") as f:
        return PhraseDictionary(line.strip() for line in f if line.strip())


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Load one lowercase token per line into a stopword set."""
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip().lower() for line in f if line.strip())


def _tweet_to_obj(tweet: Tweet) -> dict:
    obj: dict = {"id": tweet.id, "text": tweet.text}
    if tweet.timestamp is not None:
        obj["timestamp"] = tweet.timestamp.isoformat()
    if tweet.gold_entity is not None:
        obj["gold_entity"] = tweet.gold_entity
    if tweet.gold_label is not None:
        obj["gold_label"] = tweet.gold_label.value
    return obj


def dump_tweets(tweets: Iterable[Tweet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for tweet in tweets:
            f.write(json.dumps(_tweet_to_obj(tweet), ensure_ascii=False) + "\n")


def dump_triples(triples: Iterable[Triple], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in triples:
            flag = "1" if t.object_is_literal else "0"
            f.write(f"{t.subject}\t{t.predicate}\t{t.object}\t{flag}\n")


def dump_entity_records(records: Iterable[EntityRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(f"{r.entity_id}\t{r.label}\t{r.comment}\t{r.entity_type}\n")


def dump_page_views(records: Iterable[PageViewRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(f"{r.entity_id}\t{r.date.isoformat()}\t{r.views}\n")


def dump_phrases(dictionary: PhraseDictionary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for phrase in dictionary:
            f.write(phrase + "\n")


def dump_stopwords(stopwords: Iterable[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for word in sorted(set(stopwords)):
            f.write(word + "\n")
