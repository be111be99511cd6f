"""Exception types shared across the package.

Everything raised on a domain-level contract violation derives from
:class:`LinkerError` so the CLI can map it to exit code 1; malformed
input files raise :class:`FormatError` and friends with a line number
when one is known.
"""

from __future__ import annotations


class LinkerError(Exception):
    """Base class for all domain errors raised by this package."""


class FormatError(LinkerError):
    """A record in an input file does not match the expected schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class DuplicateIdError(FormatError):
    """An identifier (or key pair) appears more than once in a file."""


class NegativeCountError(FormatError):
    """A count field that must be non-negative is below zero."""


class EmptyTagError(LinkerError):
    """A hashtag or mention has no body after its leading symbol."""


class EmptyCorpusError(LinkerError):
    """An operation that needs triples received an empty triple store."""


class UnknownEntityError(LinkerError):
    """An entity id is not present in the record set or graph."""


class EmptyModelError(LinkerError):
    """Neither knowledge source produced a single clue for an entity."""


class KeyMismatchError(LinkerError):
    """Parallel per-entity maps do not share the same key set."""


class NoCandidateError(LinkerError):
    """No tweet clue carried any evidence toward any entity."""


class InsufficientDataError(LinkerError):
    """Training produced zero usable preference pairs."""


class EmptySetError(LinkerError):
    """An evaluation was requested over an empty tweet set."""


class ConfigError(LinkerError):
    """A configuration file or value is invalid."""
