"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel

from ..config import RunConfig


class HealthResponse(BaseModel):
    status: str


class LexiconEntryModel(BaseModel):
    label: str
    phrase: str


class LexiconResponse(BaseModel):
    entries: list[LexiconEntryModel]


class TickersResponse(BaseModel):
    tickers: list[str]


class ScanTextRequest(BaseModel):
    text: str
    word_boundary: bool = False


class ScanTextResponse(BaseModel):
    counts: dict[str, int]
    total: int


class RunRequest(BaseModel):
    config: RunConfig


class FetchResponse(BaseModel):
    mode: str
    records: int
    companies: int
    cache_hits: int
    network_calls: int
    unresolved: list[str]
    index_path: str


class StageResponse(BaseModel):
    stage: str
    summary: dict


class TableModel(BaseModel):
    name: str
    format: str
    path: str


class AnalyzeResponse(BaseModel):
    report_dir: str
    tables: list[TableModel]
    stages: list[str]


class ErrorResponse(BaseModel):
    kind: str
    message: str
    stage: str | None = None
