"""HTTP API backing the browser workbench.

Endpoints (all JSON unless noted):

* ``GET  /api/docs`` — list of document ids found in the docs directory
* ``GET  /api/docs/{doc_id}`` — the full ``.llmie`` document
* ``POST /api/extract`` — synchronous extraction: ``{text, template, extractor, config?}``
* ``POST /api/editor/session`` — ``{extractor_kind}`` -> ``{session_id}``
* ``POST /api/editor/{session_id}/chat`` — ``{text}`` -> ``{reply}``
* ``GET  /`` — the built workbench assets when available, a plain index otherwise

The server never writes to the docs directory; documents produced by
``/api/extract`` exist only in the response.
"""

from __future__ import annotations

import logging
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import prompt_editor
from .datamodel import FILE_SUFFIX, SchemaError, document_to_dict, load
from .engine import EngineError, GenerationConfig, InferenceEngine
from .extractors import DEFAULT_REVIEW_INSTRUCTION, FRAME_EXTRACTORS
from .pipeline import run_pipeline

logger = logging.getLogger(__name__)


class ExtractRequest(BaseModel):
    text: str
    template: str
    extractor: str
    config: dict = {}


class SessionRequest(BaseModel):
    extractor_kind: str


class EditorChatRequest(BaseModel):
    text: str


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


_FALLBACK_INDEX = """<!DOCTYPE html>
<html><head><meta charset="utf-8"/><title>framekit</title></head>
<body>
<h1>framekit API</h1>
<p>The workbench assets are not built. The JSON API is live under <code>/api</code>:</p>
<ul>
<li>GET /api/docs</li>
<li>GET /api/docs/{id}</li>
<li>POST /api/extract</li>
<li>POST /api/editor/session</li>
<li>POST /api/editor/{session_id}/chat</li>
</ul>
</body></html>
"""


def create_app(docs_dir: str | Path, engine: InferenceEngine, *,
               static_dir: str | Path | None = None) -> FastAPI:
    docs_dir = Path(docs_dir)
    app = FastAPI(title="framekit", docs_url=None, redoc_url=None)
    sessions: dict[str, tuple[prompt_editor.ChatSession, threading.Lock]] = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return _error(400, "bad-request", str(exc.errors()[:3]))

    def scan_docs() -> dict[str, Path]:
        found: dict[str, Path] = {}
        for path in sorted(docs_dir.glob(f"*{FILE_SUFFIX}")):
            try:
                doc = load(path)
            except (SchemaError, OSError) as exc:
                logger.warning("skipping unreadable document %s: %s", path, exc)
                continue
            found[doc.doc_id] = path
        return found

    @app.get("/api/docs")
    def list_docs():
        return sorted(scan_docs())

    @app.get("/api/docs/{doc_id}")
    def get_doc(doc_id: str):
        path = scan_docs().get(doc_id)
        if path is None:
            return _error(404, "unknown-document", f"no document with id {doc_id!r}")
        return document_to_dict(load(path))

    @app.post("/api/extract")
    def extract(body: ExtractRequest):
        if body.extractor not in FRAME_EXTRACTORS:
            return _error(400, "unknown-extractor",
                          f"extractor must be one of {sorted(FRAME_EXTRACTORS)}")
        config = body.config or {}
        try:
            from .prompting import MalformedPlaceholder, PromptTemplate
            try:
                template = PromptTemplate(body.template)
            except MalformedPlaceholder as exc:
                return _error(400, "bad-template", str(exc))
            generation = GenerationConfig(
                temperature=float(config.get("temperature", 0.0)),
                max_tokens=int(config.get("max_tokens", 4096)),
            )
            result = run_pipeline(
                engine, template, body.extractor,
                body.text, str(config.get("doc_id", "api-extract")),
                generation=generation,
                max_concurrency=int(config.get("max_concurrency", 1)),
                review_mode=str(config.get("review_mode", "addition")),
                review_instruction=str(config.get("review_instruction",
                                                  DEFAULT_REVIEW_INSTRUCTION)),
            )
        except EngineError as exc:
            return _error(502, "engine-failure", str(exc))
        except (ValueError, KeyError) as exc:
            return _error(400, "bad-request", str(exc))
        return document_to_dict(result.document)

    @app.post("/api/editor/session")
    def create_session(body: SessionRequest):
        try:
            session = prompt_editor.new_session(body.extractor_kind, engine)
        except prompt_editor.UnknownExtractorKind:
            return _error(400, "unknown-extractor-kind",
                          f"no guideline for {body.extractor_kind!r}")
        session_id = uuid.uuid4().hex
        with sessions_lock:
            sessions[session_id] = (session, threading.Lock())
        return {"session_id": session_id}

    @app.post("/api/editor/{session_id}/chat")
    def editor_chat(session_id: str, body: EditorChatRequest):
        with sessions_lock:
            entry = sessions.get(session_id)
        if entry is None:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        session, lock = entry
        try:
            with lock:  # one request at a time per session
                reply = prompt_editor.chat_turn(session, body.text)
        except EngineError as exc:
            return _error(502, "engine-failure", str(exc))
        except ValueError as exc:
            return _error(400, "bad-request", str(exc))
        return {"reply": reply}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="workbench")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_INDEX

    return app
