"""Implicit entity linking over an entity model network.

Entities of one domain type (movies, books, ...) are modeled by clues
harvested from knowledge-base facts, recent tweets that mention them
explicitly, and page-view popularity.  The per-entity models are merged
into a bipartite clue/entity graph that supports candidate retrieval and
learned pairwise ranking for tweets that mention an entity without
naming it.
"""

__version__ = "0.1.0"
