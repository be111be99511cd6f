"""FastAPI application: one loaded graph + ranker served over JSON.

The graph and model are read once at startup; every request is a pure
lookup against them, so the service scales by replication without any
shared mutable state.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from ..emn import EMNGraph, load_snapshot
from ..errors import NoCandidateError
from ..linker import LinkRequest, TrainedRanker, link, load_ranker
from .schemas import (
    ClueRow,
    EntityModelResponse,
    HealthResponse,
    LinkRequestBody,
    LinkResponse,
    MetaResponse,
    RankedCandidate,
)

__all__ = ["create_app"]


def create_app(
    emn_path: str | Path | None = None,
    ranker_path: str | Path | None = None,
    graph: EMNGraph | None = None,
    ranker: TrainedRanker | None = None,
) -> FastAPI:
    """Build the app around a graph and ranker, given as paths or objects."""
    if graph is None:
        if emn_path is None:
            raise ValueError("either graph or emn_path is required")
        graph = load_snapshot(emn_path)
    if ranker is None:
        if ranker_path is None:
            raise ValueError("either ranker or ranker_path is required")
        ranker = load_ranker(ranker_path)

    app = FastAPI(title="emn-linker", version="0.1.0")

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok")

    @app.get("/meta", response_model=MetaResponse)
    def meta() -> MetaResponse:
        return MetaResponse(
            entity_type=graph.entity_type,
            built_at=graph.built_at.isoformat(),
            entities=len(graph.entities),
            clues=len(graph.clues),
            edges=graph.edge_count(),
            ranker_weights=ranker.weights,
        )

    @app.post("/link", response_model=LinkResponse)
    def link_endpoint(body: LinkRequestBody) -> LinkResponse:
        try:
            ranked = link(
                graph,
                ranker,
                LinkRequest(entity_type=body.entity_type, text=body.text),
                k=body.k,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except NoCandidateError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return LinkResponse(
            entity_type=graph.entity_type,
            candidates_considered=len(ranked),
            results=[
                RankedCandidate(
                    entity_id=r.entity_id,
                    name=graph.entities[r.entity_id].name,
                    score=r.score,
                    cosine=r.cosine,
                    rel_salience=r.rel_salience,
                    evidence=r.evidence,
                )
                for r in ranked[: body.top]
            ],
        )

    @app.get("/entities/{entity_id}", response_model=EntityModelResponse)
    def entity_model(entity_id: str) -> EntityModelResponse:
        node = graph.entities.get(entity_id)
        if node is None:
            raise HTTPException(status_code=404, detail=f"unknown entity {entity_id!r}")
        rows = [
            ClueRow(
                clue=name,
                specificity=graph.clues[name].specificity,
                frequency=frequency,
                origin=graph.clues[name].origin.render(),
            )
            for name, frequency in graph.entity_to_clues[entity_id].items()
        ]
        rows.sort(key=lambda r: (-r.specificity, r.clue))
        return EntityModelResponse(
            entity_id=entity_id,
            name=node.name,
            salience=node.salience.value,
            clues=rows,
        )

    return app
