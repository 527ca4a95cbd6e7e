"""FastAPI service wrapping the pipeline; the CLI is a thin client of it.

Every pipeline stage is an endpoint taking the full run config inline,
so a long-lived service can serve several workspaces. Errors map to
status codes by kind: input 400, network 502, numerical 500; the body
always carries the kind so clients can translate to exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import keywords as kw
from .. import pipeline
from ..config import STAGES, load_example_tickers
from ..errors import (
    FilingsMinerError,
    InputError,
    NetworkError,
    NumericalError,
    StageError,
)
from .schemas import (
    AnalyzeResponse,
    FetchResponse,
    HealthResponse,
    LexiconEntryModel,
    LexiconResponse,
    RunRequest,
    ScanTextRequest,
    ScanTextResponse,
    StageResponse,
    TickersResponse,
)


def _error_payload(exc: FilingsMinerError) -> tuple[int, dict]:
    stage = None
    cause: Exception = exc
    if isinstance(exc, StageError):
        stage = exc.stage
        cause = exc.cause
    if isinstance(cause, NetworkError):
        return 502, {"kind": "network", "message": str(exc), "stage": stage}
    if isinstance(cause, NumericalError):
        return 500, {"kind": "numerical", "message": str(exc), "stage": stage}
    if isinstance(cause, InputError):
        return 400, {"kind": "input", "message": str(exc), "stage": stage}
    return 500, {"kind": "internal", "message": str(exc), "stage": stage}


def create_app() -> FastAPI:
    app = FastAPI(title="filings-factor-miner", version="0.1.0")

    @app.exception_handler(FilingsMinerError)
    async def _handle_miner_error(request, exc: FilingsMinerError):
        status, payload = _error_payload(exc)
        return JSONResponse(status_code=status, content=payload)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok")

    @app.get("/lexicon", response_model=LexiconResponse)
    def lexicon():
        lex = kw.default_lexicon()
        return LexiconResponse(
            entries=[LexiconEntryModel(label=e.label, phrase=e.phrase) for e in lex.entries]
        )

    @app.get("/tickers/example", response_model=TickersResponse)
    def example_tickers():
        return TickersResponse(tickers=load_example_tickers())

    @app.post("/scan", response_model=ScanTextResponse)
    def scan(req: ScanTextRequest):
        lex = kw.default_lexicon()
        counts = kw.scan_text(req.text, lex, req.word_boundary)
        mapping = {label: int(c) for label, c in zip(lex.labels, counts)}
        return ScanTextResponse(counts=mapping, total=int(counts.sum()))

    @app.post("/fetch", response_model=FetchResponse)
    def fetch(req: RunRequest):
        return FetchResponse(**pipeline.run_fetch(req.config))

    @app.post("/stage/{stage_name}", response_model=StageResponse)
    def stage(stage_name: str, req: RunRequest):
        if stage_name not in STAGES:
            raise InputError(f"unknown stage {stage_name!r}; expected one of {STAGES}")
        summary = pipeline.run_stage(req.config, stage_name)
        return StageResponse(stage=stage_name, summary=summary)

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(req: RunRequest):
        summary = pipeline.run_analyze(req.config)
        return AnalyzeResponse(
            report_dir=summary["report_dir"],
            tables=summary["tables"],
            stages=summary["stages"],
        )

    return app


app = create_app()
