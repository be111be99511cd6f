"""Run configuration: a flat key=value file mirroring the CLI flags.

Unknown keys are rejected so stale experiment files fail loudly, and
explicit CLI flags always win over file values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .errors import ConfigError

__all__ = ["Config", "load_config", "parse_value"]

_WEIGHTINGS = ("binary", "tf")


@dataclass(frozen=True)
class Config:
    m_relations: int = 15
    context_cap: int = 1000
    salience_window_days: int = 30
    k: int = 25
    c_tradeoff: float = 0.01
    folds: int = 5
    seed: int = 7
    epochs: int = 200
    threads: int = 1
    entity_type: str = ""
    type_keywords: tuple[str, ...] = ()
    as_of_date: date | None = None
    tweet_vector_weighting: str = "binary"
    triples: str = ""
    labels: str = ""
    tweets: str = ""
    pageviews: str = ""
    phrases: str = ""
    stopwords: str = ""

    def __post_init__(self):
        checks = [
            ("m_relations", self.m_relations >= 1, ">= 1"),
            ("context_cap", self.context_cap >= 1, ">= 1"),
            ("salience_window_days", self.salience_window_days >= 1, ">= 1"),
            ("k", self.k >= 1, ">= 1"),
            ("c_tradeoff", self.c_tradeoff > 0, "> 0"),
            ("folds", self.folds >= 2, ">= 2"),
            ("epochs", self.epochs >= 1, ">= 1"),
            ("threads", self.threads >= 1, ">= 1"),
            (
                "tweet_vector_weighting",
                self.tweet_vector_weighting in _WEIGHTINGS,
                f"one of {_WEIGHTINGS}",
            ),
        ]
        for name, ok, requirement in checks:
            if not ok:
                raise ConfigError(f"{name} must be {requirement}")

    def with_overrides(self, **overrides) -> "Config":
        """New Config with the non-None overrides applied."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **updates)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(Config)}


def parse_value(key: str, raw: str):
    """Convert one key=value string to the field's type."""
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if key == "type_keywords":
            return tuple(w.strip() for w in raw.split(",") if w.strip())
        if key == "as_of_date":
            return date.fromisoformat(raw) if raw else None
        if key == "c_tradeoff":
            return float(raw)
        if key in (
            "m_relations",
            "context_cap",
            "salience_window_days",
            "k",
            "folds",
            "seed",
            "epochs",
            "threads",
        ):
            return int(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


def load_config(path: str | Path) -> Config:
    """Parse a key=value file; # starts a comment, blank lines ignored."""
    values = {}
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = parse_value(key, value)
    return Config(**values)
