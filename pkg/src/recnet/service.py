"""HTTP surface over the engine, plus the long-running serve loop.

All endpoints are thin: they validate the payload, call one engine method,
and map KeyError to 404 and ValueError to 400.  A background thread runs the
adaptation cycle on a fixed period; shutdown snapshots the engine when a
snapshot directory is configured.
"""

from __future__ import annotations

import contextlib
import threading
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import CorpusError
from .engine import Engine, EngineConfig


class SessionBody(BaseModel):
    user: str = "anon"
    auto_answer_level: float = 0.0


class QueryBody(BaseModel):
    keywords: list[str]


class AnswerBody(BaseModel):
    keyword: str
    relevant: bool


class ClickBody(BaseModel):
    document_id: str
    t: float | None = None


class ContextBody(BaseModel):
    record_file: str
    context_id: str | None = None


class SnapshotBody(BaseModel):
    directory: str


def _guard(fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc.args[0] if exc.args else exc))
    except (ValueError, CorpusError, FileNotFoundError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="recnet", version="0.1.0")
    app.state.engine = engine

    @app.post("/sessions")
    def create_session(body: SessionBody) -> dict:
        session = _guard(lambda: engine.create_session(body.user, body.auto_answer_level))
        return {"session_id": session.id, "user": session.user}

    @app.post("/sessions/{session_id}/query")
    def query(session_id: str, body: QueryBody) -> dict:
        return _guard(lambda: engine.query(session_id, body.keywords))

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody) -> dict:
        return _guard(lambda: engine.answer(session_id, body.keyword, body.relevant))

    @app.get("/sessions/{session_id}/recommendations")
    def recommendations(session_id: str, n: int = 20) -> dict:
        return {"recommendations": _guard(lambda: engine.recommendations(session_id, n))}

    @app.post("/sessions/{session_id}/click")
    def click(session_id: str, body: ClickBody) -> dict:
        return {"related": _guard(lambda: engine.click(session_id, body.document_id, body.t))}

    @app.get("/documents/{document_id}/related")
    def related(document_id: str, network: str = "composite", n: int = 10, context: str | None = None) -> dict:
        return _guard(lambda: engine.related(document_id, network, n, context))

    @app.get("/admin/contexts")
    def list_contexts() -> dict:
        return {"contexts": list(engine.contexts)}

    @app.post("/admin/contexts")
    def add_context(body: ContextBody) -> dict:
        cid = _guard(lambda: engine.add_context(body.record_file, body.context_id))
        return engine.stats(cid)

    @app.get("/admin/contexts/{context_id}/stats")
    def stats(context_id: str) -> dict:
        return _guard(lambda: engine.stats(context_id))

    @app.get("/admin/contexts/{context_id}/proximity")
    def proximity(context_id: str, kind: str = "working", nodes: str | None = None) -> dict:
        node_list = None if nodes is None else [n for n in nodes.split(",") if n]
        return _guard(lambda: engine.proximity_entries(context_id, kind, node_list))

    @app.post("/admin/adapt-now")
    def adapt_now() -> dict:
        return engine.run_adaptation_cycle()

    @app.post("/admin/snapshot")
    def snapshot(body: SnapshotBody) -> dict:
        return {"directory": str(_guard(lambda: engine.snapshot(body.directory)))}

    static = engine.config.static_dir
    if static and Path(static).is_dir():
        app.mount("/", StaticFiles(directory=static, html=True), name="ui")

    return app


class AdaptationTimer:
    """Runs the adaptation cycle every `period` seconds until stopped."""

    def __init__(self, engine: Engine, period: float):
        self._engine = engine
        self._period = period
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self) -> None:
        while not self._stop.wait(self._period):
            with contextlib.suppress(Exception):
                self._engine.run_adaptation_cycle()

    def start(self) -> None:
        if self._period > 0:
            self._thread.start()

    def stop(self) -> None:
        self._stop.set()


def build_engine(config: EngineConfig) -> Engine:
    """Restore from the configured snapshot directory when one exists there,
    otherwise ingest the configured context files."""
    snap = config.snapshot_dir
    if snap and (Path(snap) / "manifest.json").is_file():
        return Engine.restore(snap, config)
    if not config.context_files:
        raise ValueError("no context files configured and no snapshot to restore")
    return Engine.from_config(config)


def serve(config: EngineConfig) -> None:
    import uvicorn

    engine = build_engine(config)
    app = create_app(engine)
    timer = AdaptationTimer(engine, config.adapt_period)

    @app.on_event("startup")
    def _start() -> None:
        timer.start()

    @app.on_event("shutdown")
    def _shutdown() -> None:
        timer.stop()
        engine.run_adaptation_cycle()
        if config.snapshot_dir:
            engine.snapshot(config.snapshot_dir)

    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
