"""HTTP task service: hands out annotation tasks and validates submissions.

All pipeline rules live in the store and the crowd module; the service is a
thin JSON layer plus static hosting for the browser UI.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .dialogue import dialogue_to_dict
from .errors import ConvforgeError, EmptyCorpusError
from .metrics import compute_report
from .store import (
    DuplicateSubmissionError,
    MalformedSubmissionError,
    PipelineStore,
    UnknownTaskError,
)

TASK_TYPES = ("paraphrase", "validate", "span", "rate")


def _http_status(exc: ConvforgeError) -> int:
    if isinstance(exc, UnknownTaskError):
        return 404
    if isinstance(exc, DuplicateSubmissionError):
        return 409
    if isinstance(exc, MalformedSubmissionError):
        return 400
    return 422


def make_app(store: PipelineStore, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="convforge task service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ConvforgeError)
    async def _convforge_error(request: Request, exc: ConvforgeError):
        return JSONResponse(
            status_code=_http_status(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/api/status")
    def status():
        return store.status()

    @app.get("/api/tasks/next")
    def next_task(type: str, worker: str = ""):
        if type not in TASK_TYPES:
            raise UnknownTaskError(f"unknown task type '{type}'; expected one of {TASK_TYPES}")
        return {"task": store.next_task(type, worker)}

    @app.post("/api/tasks/{task_id:path}")
    async def submit(task_id: str, request: Request):
        try:
            payload = await request.json()
        except Exception as exc:
            raise MalformedSubmissionError("request body must be JSON") from exc
        if not isinstance(payload, dict):
            raise MalformedSubmissionError("request body must be a JSON object")
        worker_id = str(payload.get("worker_id", ""))
        return store.submit(task_id, worker_id, payload)

    @app.get("/api/corpus")
    def corpus():
        result = store.finalize()
        return {
            "dialogues": [dialogue_to_dict(d) for d in result.dialogues],
            "drop_report": result.drop_report.to_dict(),
        }

    @app.get("/api/report")
    def report():
        dialogues = list(store.finalize().dialogues)
        if not dialogues:
            raise EmptyCorpusError("no finalized dialogues yet")
        return compute_report(dialogues).to_dict()

    @app.get("/api/ratings/summary")
    def ratings_summary():
        return store.rating_summary()

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(state_dir: str, port: int, ui_dir: str | None = None) -> None:
    import uvicorn

    store = PipelineStore(state_dir)
    app = make_app(store, ui_dir=ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
