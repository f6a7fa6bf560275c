"""HTTP/WebSocket gateway: sessions, message and frame ingestion, event stream.

Request handlers only enqueue events or read snapshots; per-session ordering is
guaranteed by the session itself. The WebSocket stream, the transcript file and
GET /state are all derived from the same event sequence.
"""

from __future__ import annotations

import base64
import binascii
import functools
import logging
import threading
import uuid
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path

import anyio
from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .backend import BackendConfig, BackendError, HttpBackend, LLMBackend, MockBackend
from .context import DialogueLine, Frame, Speaker, Summary, SummarisationPolicy
from .frames import FrameDecodeError, thumbnail_b64
from .session import MessageQueueFullError, Session, SessionConfig

logger = logging.getLogger(__name__)

MAX_FRAME_BYTES = 8 * 1024 * 1024
_EVENT_POLL_S = 0.25


class GatewayConfigError(ValueError):
    """Invalid gateway configuration; the message names the offending field."""


@dataclass(frozen=True)
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    backend_kind: str = "mock"  # "mock" or "http"
    backend: BackendConfig | None = None
    session: SessionConfig = field(default_factory=SessionConfig)
    transcript_dir: Path | None = None
    cors_allow_origins: tuple[str, ...] = ("*",)
    static_dir: Path | None = None

    def validate(self) -> None:
        if self.backend_kind not in ("mock", "http"):
            raise GatewayConfigError(
                f"backend_kind must be 'mock' or 'http', got {self.backend_kind!r}"
            )
        if self.backend_kind == "http":
            if self.backend is None or not self.backend.base_url:
                raise GatewayConfigError("backend.base_url is required for the http backend")
        if not 0 < self.port < 65536:
            raise GatewayConfigError(f"port must be in 1..65535, got {self.port}")


class CreateSessionBody(BaseModel):
    n: int | None = None
    m: int | None = None


class MessageBody(BaseModel):
    text: str


def _make_backend(config: GatewayConfig) -> LLMBackend:
    if config.backend_kind == "mock":
        return MockBackend()
    if config.backend is None or not config.backend.base_url:
        raise GatewayConfigError("backend.base_url is required for the http backend")
    return HttpBackend(config.backend)


def _element_view(element) -> dict:
    if isinstance(element, Frame):
        return {
            "kind": "frame",
            "frame_id": element.frame_id,
            "width": element.width,
            "height": element.height,
            "is_full_resolution": element.is_full_resolution,
            "thumbnail_b64": thumbnail_b64(element),
        }
    if isinstance(element, Summary):
        return {
            "kind": "summary",
            "text": element.text,
            "covers": list(element.covers_frame_ids),
        }
    assert isinstance(element, DialogueLine)
    kind = "user" if element.speaker is Speaker.USER else "agent"
    return {"kind": kind, "text": element.text}


def create_app(config: GatewayConfig | None = None) -> FastAPI:
    cfg = config or GatewayConfig()
    app = FastAPI(title="framechat gateway")
    if cfg.cors_allow_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cfg.cors_allow_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()
    app.state.sessions = sessions
    app.state.config = cfg

    def get_session(session_id: str) -> Session:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/api/session", status_code=201)
    def create_session(body: CreateSessionBody | None = None) -> dict:
        session_cfg = cfg.session
        overrides = body or CreateSessionBody()
        if overrides.n is not None or overrides.m is not None:
            try:
                policy = SummarisationPolicy(
                    n=overrides.n if overrides.n is not None else session_cfg.policy.n,
                    m=overrides.m if overrides.m is not None else session_cfg.policy.m,
                )
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            session_cfg = dc_replace(session_cfg, policy=policy)
        try:
            backend = _make_backend(cfg)
        except (GatewayConfigError, ValueError) as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        session_id = uuid.uuid4().hex[:12]
        transcript_path = None
        if cfg.transcript_dir is not None:
            cfg.transcript_dir.mkdir(parents=True, exist_ok=True)
            transcript_path = cfg.transcript_dir / f"session-{session_id}.jsonl"
        session = Session(backend, config=session_cfg, transcript_path=transcript_path)
        with sessions_lock:
            sessions[session_id] = session
        return {"session_id": session_id}

    @app.post("/api/session/{session_id}/message")
    def post_message(session_id: str, body: MessageBody) -> dict:
        session = get_session(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=400, detail="text must not be empty")
        try:
            reply = session.handle_user_message(body.text)
        except MessageQueueFullError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except BackendError as exc:
            raise HTTPException(
                status_code=502, detail={"kind": exc.kind, "detail": str(exc)}
            ) from exc
        return {"reply": reply.text, "latency_ms": reply.latency_ms}

    @app.post("/api/session/{session_id}/frame")
    async def post_frame(session_id: str, request: Request) -> dict:
        session = get_session(session_id)
        content_length = request.headers.get("content-length")
        if content_length and content_length.isdigit() and int(content_length) > MAX_FRAME_BYTES:
            raise HTTPException(status_code=413, detail="frame exceeds 8 MiB")
        body = await request.body()
        if len(body) > MAX_FRAME_BYTES:
            raise HTTPException(status_code=413, detail="frame exceeds 8 MiB")
        content_type = request.headers.get("content-type", "").split(";")[0].strip()
        if content_type == "application/json":
            try:
                payload = await request.json()
                data = base64.b64decode(payload["image_b64"], validate=True)
            except (ValueError, KeyError, TypeError, binascii.Error) as exc:
                raise HTTPException(
                    status_code=415, detail="expected JSON with base64 image_b64"
                ) from exc
        else:
            data = body
        if len(data) > MAX_FRAME_BYTES:
            raise HTTPException(status_code=413, detail="frame exceeds 8 MiB")
        try:
            frame = await anyio.to_thread.run_sync(session.push_image, data)
        except FrameDecodeError as exc:
            raise HTTPException(status_code=415, detail=str(exc)) from exc
        return {"frame_id": frame.frame_id}

    @app.websocket("/api/session/{session_id}/events")
    async def events_ws(websocket: WebSocket, session_id: str) -> None:
        await websocket.accept()
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            await websocket.close(code=1008, reason="unknown session")
            return
        cursor = -1
        try:
            while True:
                poll = functools.partial(session.events_after, cursor, _EVENT_POLL_S)
                events = await anyio.to_thread.run_sync(poll)
                for event in events:
                    await websocket.send_text(event.to_json())
                    cursor = event.seq
        except (WebSocketDisconnect, RuntimeError):
            return

    @app.get("/api/session/{session_id}/state")
    def get_state(session_id: str) -> dict:
        session = get_session(session_id)
        view = session.snapshot()
        metrics = session.metrics()
        return {
            "elements": [_element_view(element) for element in view.elements],
            "frame_count": view.frame_count,
            "token_estimate": metrics["prompt_token_estimate"],
        }

    @app.get("/api/session/{session_id}/metrics")
    def get_metrics(session_id: str) -> dict:
        return get_session(session_id).metrics()

    if cfg.static_dir is not None and cfg.static_dir.is_dir():
        app.mount("/", StaticFiles(directory=cfg.static_dir, html=True), name="ui")

    return app
