"""Tweet text cleaning and clue extraction.

Cleaning strips URLs, decomposes hashtags and mentions, rewrites digit
runs to the pseudo-token "number", drops punctuation/emoji, and
lowercases.  Clue extraction then matches 4-, 3-, and 2-grams against a
phrase dictionary (longest match first, non-overlapping) and emits the
leftover non-stopword tokens as unigrams.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from .corpus import PhraseDictionary
from .errors import EmptyTagError

__all__ = ["CleanText", "ClueSet", "clean", "decompose_tag", "extract_clues"]

# n-gram lengths tried for phrase matching, longest first.
PHRASE_NGRAM_SIZES = (4, 3, 2)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_TAG_RE = re.compile(r"(?<![\w@#])[@#]\w+")
# A digit run plus any embedded separators ("1,000", "3.5", "12:30").
_NUMBER_RE = re.compile(r"\d[\d,.:]*")


@dataclass(frozen=True)
class CleanText:
    """Ordered lowercase tokens of a cleaned text."""

    tokens: tuple[str, ...]

    def rendered(self) -> str:
        return " ".join(self.tokens)


@dataclass
class ClueSet:
    """Phrases and unigrams extracted from one text, with counts."""

    phrases: Counter = field(default_factory=Counter)
    unigrams: Counter = field(default_factory=Counter)

    def names(self) -> set[str]:
        """Distinct clue names, phrases and unigrams together."""
        return set(self.phrases) | set(self.unigrams)

    def counts(self) -> Counter:
        """Merged clue name -> occurrence count."""
        merged = Counter(self.phrases)
        merged.update(self.unigrams)
        return merged

    def __bool__(self) -> bool:
        return bool(self.phrases) or bool(self.unigrams)


def decompose_tag(tag: str) -> list[str]:
    """Split a hashtag or mention into lowercase word tokens.

    A camel-case body is split at every lowercase-to-uppercase boundary
    ("#MarkWahlberg" -> ["mark", "wahlberg"]); bodies without such a
    boundary come back whole ("@ISRO" -> ["isro"]).
    """
    if not tag or tag[0] not in "#@":
        raise ValueError(f"tag must start with '#' or '@': {tag!r}")
    body = tag[1:]
    if not body:
        raise EmptyTagError(f"empty tag body in {tag!r}")
    parts: list[str] = []
    start = 0
    for i in range(1, len(body)):
        if body[i - 1].islower() and body[i].isupper():
            parts.append(body[start:i])
            start = i
    parts.append(body[start:])
    return [p.lower() for p in parts if p]


def _replace_tags(text: str) -> str:
    def sub(match: re.Match) -> str:
        return " " + " ".join(decompose_tag(match.group(0))) + " "

    return _TAG_RE.sub(sub, text)


def clean(text: str) -> CleanText:
    """Normalize raw tweet text into lowercase word tokens.

    Order of operations: drop URLs, decompose #tags/@mentions, rewrite
    digit runs to "number", replace every remaining non-alphanumeric
    codepoint (punctuation, emoticons, emoji) with a space, lowercase,
    and split on whitespace.  Cleaning a rendered CleanText is a no-op.
    """
    work = _URL_RE.sub(" ", text)
    work = _replace_tags(work)
    work = _NUMBER_RE.sub(" number ", work)
    work = "".join(c if c.isalnum() or c.isspace() else " " for c in work)
    return CleanText(tokens=tuple(work.lower().split()))


def extract_clues(
    cleaned: CleanText,
    dictionary: PhraseDictionary,
    stopwords: frozenset[str] | set[str],
    include_phrase_unigrams: bool = False,
) -> ClueSet:
    """Extract phrase and unigram clues from cleaned tokens.

    All contiguous n-grams (n = 4, 3, 2) are tested against the
    dictionary, longest first, scanning left to right; a token consumed
    by a matched phrase is never reused by a shorter one.  Tokens outside
    every matched phrase become unigrams unless they are stopwords.  With
    ``include_phrase_unigrams`` (the entity-model side) the component
    tokens of matched phrases are emitted as unigrams too, so partial
    mentions of a phrase can still be matched later.
    """
    tokens = cleaned.tokens
    taken = [False] * len(tokens)
    phrases: Counter = Counter()
    for n in PHRASE_NGRAM_SIZES:
        i = 0
        while i + n <= len(tokens):
            if any(taken[i : i + n]):
                i += 1
                continue
            candidate = " ".join(tokens[i : i + n])
            if candidate in dictionary:
                phrases[candidate] += 1
                for j in range(i, i + n):
                    taken[j] = True
                i += n
            else:
                i += 1
    unigrams: Counter = Counter()
    for idx, token in enumerate(tokens):
        if token in stopwords:
            continue
        if taken[idx] and not include_phrase_unigrams:
            continue
        unigrams[token] += 1
    return ClueSet(phrases=phrases, unigrams=unigrams)
