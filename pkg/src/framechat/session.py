"""Event-serialised conversation manager.

One session owns one buffer. Producers (frame sources, gateway handlers) may
call in from any thread; buffer mutations happen under a single lock in arrival
order, reply generation is serialised FIFO with the backend call outside the
lock so frames keep landing while a reply is in flight. Every processed event
is appended to an in-memory, sequence-numbered transcript and optionally to a
JSONL file.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field, replace as dc_replace
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

from .backend import (
    BackendError,
    DEFAULT_MODEL_ID,
    DEFAULT_REPLY_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    LLMBackend,
    MalformedResponseError,
    estimate_tokens,
    render_prompt,
)
from .context import (
    ContextBuffer,
    DEFAULT_SYSTEM_INSTRUCTIONS,
    DialogueLine,
    Frame,
    PromptView,
    Speaker,
    Summary,
    SummarisationPolicy,
    SummarisationRun,
)
from .frames import (
    FrameDecodeError,
    ResolutionPolicyConfig,
    apply_resolution_policy,
    normalize_image,
)
from .summarize import (
    DEFAULT_SUMMARY_INSTRUCTION,
    SUMMARY_MAX_TOKENS,
    run_summarisation,
)

logger = logging.getLogger(__name__)

TRANSCRIPT_HEADER = {"transcript": "framechat", "version": 1}


class EventKind(str, Enum):
    FRAME_ARRIVED = "frame_arrived"
    USER_MESSAGE = "user_message"
    AGENT_REPLY = "agent_reply"
    SUMMARY_CREATED = "summary_created"
    BACKEND_ERROR = "backend_error"


class MessageQueueFullError(Exception):
    """A message is in flight and the waiting queue is at capacity."""


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    at: int
    kind: EventKind
    payload: dict

    def to_json(self) -> str:
        record = {"seq": self.seq, "at": self.at, "kind": self.kind.value, **self.payload}
        return json.dumps(record, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Reply:
    text: str
    latency_ms: int


class Clock(Protocol):
    def now_ms(self) -> int: ...


class WallClock:
    """Milliseconds since the first observed event (monotonic)."""

    def __init__(self) -> None:
        self._origin: int | None = None

    def now_ms(self) -> int:
        now = time.monotonic_ns() // 1_000_000
        if self._origin is None:
            self._origin = now
        return now - self._origin


class LogicalClock:
    """Externally driven clock for deterministic replay; never sleeps."""

    def __init__(self, start_ms: int = 0) -> None:
        self._now = start_ms

    def set(self, now_ms: int) -> None:
        self._now = now_ms

    def now_ms(self) -> int:
        return self._now


@dataclass(frozen=True)
class SessionConfig:
    policy: SummarisationPolicy = field(default_factory=SummarisationPolicy)
    resolution: ResolutionPolicyConfig = field(default_factory=ResolutionPolicyConfig)
    system_instructions: str = DEFAULT_SYSTEM_INSTRUCTIONS
    model_id: str = DEFAULT_MODEL_ID
    summary_model_id: str = ""
    reply_max_tokens: int = DEFAULT_REPLY_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    summary_instruction: str = DEFAULT_SUMMARY_INSTRUCTION
    summary_max_tokens: int = SUMMARY_MAX_TOKENS
    message_queue_depth: int = 4
    # Degraded mode for backends without vision support: frames render as a
    # text placeholder in reply prompts.
    text_only_prompts: bool = False

    def effective_summary_model(self) -> str:
        return self.summary_model_id or self.model_id


class _FifoLock:
    """Mutual exclusion with strict arrival-order handoff.

    Plain locks do not guarantee FIFO wakeup; queued user messages must be
    answered in the order they were submitted.
    """

    def __init__(self) -> None:
        self._mutex = threading.Lock()
        self._waiters: deque[threading.Event] = deque()

    def acquire(self) -> None:
        gate = threading.Event()
        with self._mutex:
            self._waiters.append(gate)
            if len(self._waiters) == 1:
                gate.set()
        gate.wait()

    def release(self) -> None:
        with self._mutex:
            self._waiters.popleft()
            if self._waiters:
                self._waiters[0].set()

    def __enter__(self) -> "_FifoLock":
        self.acquire()
        return self

    def __exit__(self, *exc_info) -> None:
        self.release()


class Session:
    """Serialises frame and dialogue events, drives summarisation and replies."""

    def __init__(
        self,
        backend: LLMBackend,
        *,
        config: SessionConfig | None = None,
        transcript_path: Path | str | None = None,
        clock: Clock | None = None,
    ) -> None:
        self._backend = backend
        self.config = config or SessionConfig()
        self._clock = clock or WallClock()
        self._buffer = ContextBuffer(
            policy=self.config.policy,
            system_instructions=self.config.system_instructions,
        )
        self._lock = threading.RLock()
        self._event_cond = threading.Condition(self._lock)
        self._events: list[TranscriptEvent] = []
        self._reply_gate = _FifoLock()
        self._reply_in_flight = False
        self._pending_summarise = False
        self._reply_backlog = 0
        self._next_frame_id = 1
        self._latencies: list[int] = []
        self._frames_received = 0
        self._frames_summarised = 0
        self._transcript = None
        if transcript_path is not None:
            self._transcript = open(transcript_path, "w", encoding="utf-8")
            self._transcript.write(
                json.dumps(TRANSCRIPT_HEADER, sort_keys=True, separators=(",", ":")) + "\n"
            )

    # -- events ---------------------------------------------------------

    @property
    def events(self) -> list[TranscriptEvent]:
        with self._lock:
            return list(self._events)

    def events_after(self, seq: int, timeout: float | None = None) -> list[TranscriptEvent]:
        """Events with seq strictly greater than ``seq``; blocks up to ``timeout``."""
        with self._event_cond:
            self._event_cond.wait_for(lambda: len(self._events) > seq + 1, timeout)
            return self._events[seq + 1 :]

    def _emit(self, kind: EventKind, payload: dict) -> TranscriptEvent:
        event = TranscriptEvent(
            seq=len(self._events), at=self._clock.now_ms(), kind=kind, payload=payload
        )
        self._events.append(event)
        if self._transcript is not None:
            self._transcript.write(event.to_json() + "\n")
            self._transcript.flush()
        self._event_cond.notify_all()
        return event

    def record_error(self, stage: str, kind: str, detail: str) -> None:
        """Record an out-of-band failure (for example an unreadable script frame)."""
        with self._lock:
            self._emit(
                EventKind.BACKEND_ERROR, {"stage": stage, "kind": kind, "detail": detail}
            )

    # -- frame ingestion --------------------------------------------------

    def push_image(self, data: bytes) -> Frame:
        """Decode raw image bytes, stamp id and clock, and process the arrival."""
        image = normalize_image(data)  # decode outside the lock; may raise
        with self._lock:
            frame = Frame(
                frame_id=self._next_frame_id,
                captured_at=self._clock.now_ms(),
                data=image.data,
                media_type=image.media_type,
                width=image.width,
                height=image.height,
                is_full_resolution=True,
            )
            self._next_frame_id += 1
            self._handle_frame_locked(frame)
            return frame

    def handle_frame(self, frame: Frame) -> None:
        with self._lock:
            if frame.frame_id >= self._next_frame_id:
                self._next_frame_id = frame.frame_id + 1
            self._handle_frame_locked(frame)

    def _handle_frame_locked(self, frame: Frame) -> None:
        trigger = self._buffer.append_frame(frame)
        self._frames_received += 1
        apply_resolution_policy(self._buffer, self.config.resolution)
        self._emit(
            EventKind.FRAME_ARRIVED,
            {"frame_id": frame.frame_id, "width": frame.width, "height": frame.height},
        )
        if trigger is None:
            return
        if self._reply_in_flight:
            # The summariser call must not race the in-flight reply call.
            self._pending_summarise = True
            return
        self._run_summarisation(trigger)

    def _run_summarisation(self, run: SummarisationRun) -> bool:
        # Caller holds the lock: the buffer stays frozen for the duration of
        # the summariser call, so the run cannot go stale.
        try:
            summary = run_summarisation(
                self._buffer,
                run,
                self._backend,
                instruction=self.config.summary_instruction,
                model_id=self.config.effective_summary_model(),
                max_tokens=self.config.summary_max_tokens,
                temperature=self.config.temperature,
                created_at=self._clock.now_ms(),
            )
        except BackendError as exc:
            logger.warning("summarisation failed, buffer kept intact: %s", exc)
            self._emit(
                EventKind.BACKEND_ERROR,
                {"stage": "summary", "kind": exc.kind, "detail": str(exc)},
            )
            return False
        self._frames_summarised += len(summary.covers_frame_ids)
        self._emit(
            EventKind.SUMMARY_CREATED,
            {"covers_frame_ids": list(summary.covers_frame_ids), "text": summary.text},
        )
        return True

    # -- dialogue ---------------------------------------------------------

    @property
    def reply_backlog(self) -> int:
        """User messages currently queued or in flight."""
        with self._lock:
            return self._reply_backlog

    def handle_user_message(self, text: str) -> Reply:
        """Append the user line, generate a reply from a snapshot, append the reply.

        Backend failures leave the user line in the buffer, emit a
        backend_error event, and re-raise for the caller.
        """
        with self._lock:
            if self._reply_backlog >= 1 + self.config.message_queue_depth:
                raise MessageQueueFullError(
                    f"one reply in flight and {self.config.message_queue_depth} queued"
                )
            self._reply_backlog += 1
        try:
            with self._reply_gate:
                with self._lock:
                    line = DialogueLine(Speaker.USER, text, at=self._clock.now_ms())
                    self._buffer.append_dialogue(line)
                    self._emit(EventKind.USER_MESSAGE, {"text": line.text})
                    view = self._buffer.snapshot()
                    self._reply_in_flight = True
                request = render_prompt(
                    view,
                    model_id=self.config.model_id,
                    max_tokens=self.config.reply_max_tokens,
                    temperature=self.config.temperature,
                    text_only=self.config.text_only_prompts,
                )
                started = self._clock.now_ms()
                try:
                    backend_reply = self._backend.complete(request)
                    if not backend_reply.text.strip():
                        raise MalformedResponseError("backend returned an empty reply")
                except BackendError as exc:
                    with self._lock:
                        self._reply_in_flight = False
                        self._emit(
                            EventKind.BACKEND_ERROR,
                            {"stage": "reply", "kind": exc.kind, "detail": str(exc)},
                        )
                        self._resolve_deferred_trigger_locked()
                    raise
                latency_ms = max(0, self._clock.now_ms() - started)
                with self._lock:
                    self._reply_in_flight = False
                    reply_line = DialogueLine(
                        Speaker.AGENT, backend_reply.text, at=self._clock.now_ms()
                    )
                    self._buffer.append_dialogue(reply_line)
                    self._latencies.append(latency_ms)
                    self._emit(
                        EventKind.AGENT_REPLY,
                        {
                            "text": reply_line.text,
                            "latency_ms": latency_ms,
                            "token_estimate": estimate_tokens(request),
                        },
                    )
                    self._resolve_deferred_trigger_locked()
                return Reply(reply_line.text, latency_ms)
        finally:
            with self._lock:
                self._reply_backlog -= 1

    def _resolve_deferred_trigger_locked(self) -> None:
        if not self._pending_summarise:
            return
        self._pending_summarise = False
        # Re-select from the current buffer: it changed while the reply call
        # was in flight, and several trigger points may have accumulated.
        while self._buffer.frame_count >= self.config.policy.n:
            if not self._run_summarisation(self._buffer.select_run()):
                return  # backend failing; re-arm on the next frame append

    # -- inspection ---------------------------------------------------------

    def snapshot(self) -> PromptView:
        with self._lock:
            return self._buffer.snapshot()

    def metrics(self) -> dict:
        with self._lock:
            view = self._buffer.snapshot()
            latencies = list(self._latencies)
            frames_received = self._frames_received
            frames_summarised = self._frames_summarised
        request = render_prompt(
            view,
            model_id=self.config.model_id,
            max_tokens=self.config.reply_max_tokens,
            temperature=self.config.temperature,
            text_only=self.config.text_only_prompts,
        )
        return {
            "reply_count": len(latencies),
            "mean_latency_ms": sum(latencies) / len(latencies) if latencies else 0.0,
            "max_latency_ms": max(latencies) if latencies else 0,
            "prompt_token_estimate": estimate_tokens(request),
            "frames_received": frames_received,
            "frames_summarised": frames_summarised,
        }

    def trace(self) -> str:
        """Compact element trace like ``[S(1,2), F3, L, R]`` (L user, R agent)."""
        parts = []
        for element in self.snapshot().elements:
            if isinstance(element, Frame):
                parts.append(f"F{element.frame_id}")
            elif isinstance(element, Summary):
                parts.append("S(" + ",".join(str(i) for i in element.covers_frame_ids) + ")")
            else:
                parts.append("L" if element.speaker is Speaker.USER else "R")
        return "[" + ", ".join(parts) + "]"

    def close(self) -> None:
        with self._lock:
            if self._transcript is not None:
                self._transcript.close()
                self._transcript = None


# -- scripted replay ---------------------------------------------------------


@dataclass(frozen=True)
class ScriptEvent:
    at_ms: int
    say: str | None = None
    frame: Path | None = None


@dataclass(frozen=True)
class SessionScript:
    events: tuple[ScriptEvent, ...]
    n: int | None = None
    m: int | None = None
    interval_ms: int | None = None


class ScriptError(ValueError):
    """A session script file that does not match the documented format."""


def _parse_script_event(record: dict, index: int, base_dir: Path) -> ScriptEvent:
    if "at_ms" not in record:
        raise ScriptError(f"event {index}: missing at_ms")
    at_ms = record["at_ms"]
    if not isinstance(at_ms, int) or at_ms < 0:
        raise ScriptError(f"event {index}: at_ms must be a non-negative integer")
    has_say = "say" in record
    has_frame = "frame" in record
    if has_say == has_frame:
        raise ScriptError(f"event {index}: exactly one of say/frame is required")
    if has_say:
        if not isinstance(record["say"], str) or not record["say"].strip():
            raise ScriptError(f"event {index}: say must be a non-empty string")
        return ScriptEvent(at_ms=at_ms, say=record["say"])
    frame_path = Path(record["frame"])
    if not frame_path.is_absolute():
        frame_path = base_dir / frame_path
    return ScriptEvent(at_ms=at_ms, frame=frame_path)


def load_session_script(path: Path | str) -> SessionScript:
    """Parse a script file: a JSON array of {at_ms, say?|frame?} records.

    Policy overrides (n, m, interval_ms) may appear either in a leading object
    without at_ms, or in a wrapping object {"n", "m", "interval_ms", "events"}.
    Frame paths are resolved relative to the script file.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScriptError(f"not valid JSON: {exc}") from exc
    overrides: dict = {}
    if isinstance(raw, dict):
        records = raw.get("events")
        if not isinstance(records, list):
            raise ScriptError('object form requires an "events" array')
        overrides = raw
    elif isinstance(raw, list):
        records = raw
        if records and isinstance(records[0], dict) and "at_ms" not in records[0]:
            overrides = records[0]
            records = records[1:]
    else:
        raise ScriptError("script must be a JSON array or object")
    events = [
        _parse_script_event(record, i, path.parent) for i, record in enumerate(records)
    ]
    for earlier, later in zip(events, events[1:]):
        if later.at_ms < earlier.at_ms:
            raise ScriptError("at_ms must be non-decreasing")
    return SessionScript(
        events=tuple(events),
        n=overrides.get("n"),
        m=overrides.get("m"),
        interval_ms=overrides.get("interval_ms"),
    )


def replay(
    script: SessionScript,
    backend: LLMBackend,
    *,
    config: SessionConfig | None = None,
    transcript_path: Path | str | None = None,
    on_event: Callable[[Session, ScriptEvent], None] | None = None,
) -> Session:
    """Execute the script on logical time: deterministic, no real sleeping."""
    base = config or SessionConfig()
    if script.n is not None or script.m is not None:
        policy = SummarisationPolicy(
            n=script.n if script.n is not None else base.policy.n,
            m=script.m if script.m is not None else base.policy.m,
        )
        base = dc_replace(base, policy=policy)
    clock = LogicalClock()
    session = Session(backend, config=base, transcript_path=transcript_path, clock=clock)
    try:
        for event in script.events:
            clock.set(event.at_ms)
            if event.say is not None:
                try:
                    session.handle_user_message(event.say)
                except BackendError:
                    pass  # backend_error event already recorded
            else:
                assert event.frame is not None
                try:
                    data = event.frame.read_bytes()
                    session.push_image(data)
                except OSError as exc:
                    session.record_error("frame", "unreadable", str(exc))
                except FrameDecodeError as exc:
                    session.record_error("frame", "undecodable", str(exc))
            if on_event is not None:
                on_event(session, event)
    finally:
        session.close()
    return session
