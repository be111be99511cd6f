"""Request and response bodies for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class LinkRequestBody(BaseModel):
    entity_type: str = ""
    text: str = Field(min_length=1)
    k: int = Field(default=25, ge=1)
    top: int = Field(default=5, ge=1)


class RankedCandidate(BaseModel):
    entity_id: str
    name: str
    score: float
    cosine: float
    rel_salience: float
    evidence: float


class LinkResponse(BaseModel):
    entity_type: str
    candidates_considered: int
    results: list[RankedCandidate]


class ClueRow(BaseModel):
    clue: str
    specificity: float
    frequency: int
    origin: str


class EntityModelResponse(BaseModel):
    entity_id: str
    name: str
    salience: int
    clues: list[ClueRow]


class HealthResponse(BaseModel):
    status: str


class MetaResponse(BaseModel):
    entity_type: str
    built_at: str
    entities: int
    clues: int
    edges: int
    ranker_weights: tuple[float, float]
