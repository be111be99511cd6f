"""HTTP service wrapping the linker: load a graph and a ranker once,
answer linking queries over JSON."""

from .app import create_app

__all__ = ["create_app"]
