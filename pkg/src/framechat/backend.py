"""Prompt rendering and pluggable chat backends.

Renders a PromptView into an ordered multimodal request, executes it against a
deterministic mock or an OpenAI-compatible HTTP endpoint, and estimates the
request's token cost for prompt-growth monitoring.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import math
import os
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Protocol, Union

import httpx

from .context import Frame, PromptView, Speaker, Summary

logger = logging.getLogger(__name__)

DEFAULT_MODEL_ID = "gpt-4o"
DEFAULT_REPLY_MAX_TOKENS = 256
DEFAULT_TEMPERATURE = 0.7

# Per-image token estimate; a documented heuristic, not billing truth.
IMAGE_TOKEN_ESTIMATE = 170

SUMMARY_NOTE_PREFIX = "[You saw]: "
IMAGE_UNAVAILABLE_TEXT = "[image unavailable]"


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    data: bytes
    media_type: str

    def data_uri(self) -> str:
        encoded = base64.b64encode(self.data).decode("ascii")
        return f"data:{self.media_type};base64,{encoded}"


MessagePart = Union[TextPart, ImagePart]


@dataclass(frozen=True)
class Message:
    role: Role
    parts: tuple[MessagePart, ...]


@dataclass(frozen=True)
class ChatVisionRequest:
    """Rendered, ordered multimodal message list ready for a backend."""

    messages: tuple[Message, ...]
    model_id: str = DEFAULT_MODEL_ID
    max_tokens: int = DEFAULT_REPLY_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")


@dataclass(frozen=True)
class BackendReply:
    text: str
    usage: dict[str, int] | None = None


@dataclass(frozen=True)
class ReplyResult:
    text: str
    usage: dict[str, int] | None
    latency_ms: int


class BackendError(Exception):
    """Base class for backend failures; ``kind`` is the wire-visible category."""

    kind = "backend"


class BackendTimeoutError(BackendError):
    kind = "timeout"


class UpstreamError(BackendError):
    kind = "upstream"

    def __init__(self, message: str, status: int | None = None) -> None:
        super().__init__(message)
        self.status = status


class MalformedResponseError(BackendError):
    kind = "malformed"


class LLMBackend(Protocol):
    def complete(self, request: ChatVisionRequest) -> BackendReply: ...


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for an OpenAI-compatible vision endpoint.

    The API key is read from the named environment variable at request time and
    is never logged or persisted.
    """

    base_url: str
    api_key_env: str = "OPENAI_API_KEY"
    model_id: str = DEFAULT_MODEL_ID
    summary_model_id: str = ""
    timeout_ms: int = 30_000
    max_retries: int = 2
    retry_backoff_ms: int = 250

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("base_url is required")
        if self.timeout_ms < 1:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not self.summary_model_id:
            object.__setattr__(self, "summary_model_id", self.model_id)


def render_prompt(
    view: PromptView,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    max_tokens: int = DEFAULT_REPLY_MAX_TOKENS,
    temperature: float = DEFAULT_TEMPERATURE,
    text_only: bool = False,
) -> ChatVisionRequest:
    """Map buffer elements onto chat messages, preserving element order exactly.

    The system instructions always come first. Frames become user-role image
    parts, summaries become "[You saw]: ..." user text, dialogue lines keep
    their speaker's role. Consecutive same-role parts coalesce into one message.
    With ``text_only`` frames degrade to a placeholder text part (for backends
    without vision support).
    """
    messages: list[Message] = [
        Message(Role.SYSTEM, (TextPart(view.system_instructions),))
    ]
    for element in view.elements:
        if isinstance(element, Frame):
            part: MessagePart = (
                TextPart(IMAGE_UNAVAILABLE_TEXT)
                if text_only
                else ImagePart(element.data, element.media_type)
            )
            role = Role.USER
        elif isinstance(element, Summary):
            part = TextPart(SUMMARY_NOTE_PREFIX + element.text)
            role = Role.USER
        else:
            part = TextPart(element.text)
            role = Role.USER if element.speaker is Speaker.USER else Role.ASSISTANT
        last = messages[-1]
        if last.role is role:
            messages[-1] = Message(role, last.parts + (part,))
        else:
            messages.append(Message(role, (part,)))
    return ChatVisionRequest(
        messages=tuple(messages),
        model_id=model_id,
        max_tokens=max_tokens,
        temperature=temperature,
    )


def estimate_tokens(request: ChatVisionRequest) -> int:
    """Heuristic prompt size: ceil(text chars / 4) + a constant per image."""
    text_chars = 0
    images = 0
    for message in request.messages:
        for part in message.parts:
            if isinstance(part, TextPart):
                text_chars += len(part.text)
            else:
                images += 1
    return math.ceil(text_chars / 4) + IMAGE_TOKEN_ESTIMATE * images


def request_to_wire(request: ChatVisionRequest) -> dict:
    """OpenAI-compatible chat.completions JSON body.

    Text-only messages carry a plain content string; messages with images use
    the content-part array with base64 data URIs.
    """
    messages: list[dict] = []
    for message in request.messages:
        if any(isinstance(part, ImagePart) for part in message.parts):
            content: object = [
                {"type": "text", "text": part.text}
                if isinstance(part, TextPart)
                else {"type": "image_url", "image_url": {"url": part.data_uri()}}
                for part in message.parts
            ]
        else:
            content = "\n".join(part.text for part in message.parts)
        messages.append({"role": message.role.value, "content": content})
    return {
        "model": request.model_id,
        "messages": messages,
        "max_tokens": request.max_tokens,
        "temperature": request.temperature,
    }


def request_digest(request: ChatVisionRequest) -> str:
    """Stable hash of the wire shape, used to script mock replies per request."""
    canonical = json.dumps(request_to_wire(request), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def generate_reply(
    request: ChatVisionRequest,
    backend: LLMBackend,
    *,
    now_ms: Callable[[], int] | None = None,
) -> ReplyResult:
    """Execute the request and measure request-to-response latency.

    Backend errors propagate untouched; ``now_ms`` lets callers supply a logical
    clock (replay) instead of wall time.
    """
    clock = now_ms or (lambda: time.monotonic_ns() // 1_000_000)
    start = clock()
    reply = backend.complete(request)
    return ReplyResult(
        text=reply.text, usage=reply.usage, latency_ms=max(0, clock() - start)
    )


class MockBackend:
    """Deterministic, scriptable stand-in for the LLM.

    Records every request verbatim in ``requests`` so tests can assert exact
    prompt composition. Replies come, in priority order, from a digest map, a
    reply function, a FIFO reply queue, then a deterministic counter-based
    default. ``delay_ms`` simulates backend latency with a real sleep.
    """

    def __init__(
        self,
        replies: Iterable[str] | None = None,
        *,
        reply_fn: Callable[[ChatVisionRequest], str] | None = None,
        by_digest: dict[str, str] | None = None,
        delay_ms: int = 0,
        default: str = "mock-reply-{seq}",
    ) -> None:
        self.requests: list[ChatVisionRequest] = []
        self._replies = deque(replies or ())
        self._reply_fn = reply_fn
        self._by_digest = dict(by_digest or {})
        self._delay_ms = delay_ms
        self._default = default

    def complete(self, request: ChatVisionRequest) -> BackendReply:
        self.requests.append(request)
        if self._delay_ms:
            time.sleep(self._delay_ms / 1000)
        if self._by_digest:
            digest = request_digest(request)
            if digest in self._by_digest:
                return BackendReply(self._by_digest[digest])
        if self._reply_fn is not None:
            return BackendReply(self._reply_fn(request))
        if self._replies:
            return BackendReply(self._replies.popleft())
        return BackendReply(self._default.format(seq=len(self.requests)))


class HttpBackend:
    """OpenAI-compatible HTTP client with bounded retries on 429/5xx."""

    def __init__(self, config: BackendConfig, *, sleep: Callable[[float], None] = time.sleep) -> None:
        self.config = config
        self._sleep = sleep
        self._client = httpx.Client(timeout=config.timeout_ms / 1000)

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    def complete(self, request: ChatVisionRequest) -> BackendReply:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        body = request_to_wire(request)
        attempt = 0
        while True:
            try:
                response = self._client.post(url, json=body, headers=self._headers())
            except httpx.TimeoutException as exc:
                raise BackendTimeoutError(
                    f"no response within {self.config.timeout_ms} ms"
                ) from exc
            except httpx.HTTPError as exc:
                raise UpstreamError(f"transport failure: {exc}") from exc
            if response.status_code == 200:
                return self._parse(response)
            retryable = response.status_code == 429 or response.status_code >= 500
            if retryable and attempt < self.config.max_retries:
                backoff_s = self.config.retry_backoff_ms / 1000 * (2**attempt)
                attempt += 1
                logger.warning(
                    "backend returned %d, retry %d/%d in %.2fs",
                    response.status_code,
                    attempt,
                    self.config.max_retries,
                    backoff_s,
                )
                self._sleep(backoff_s)
                continue
            raise UpstreamError(
                f"backend returned HTTP {response.status_code}",
                status=response.status_code,
            )

    @staticmethod
    def _parse(response: httpx.Response) -> BackendReply:
        try:
            payload = response.json()
        except ValueError as exc:
            raise MalformedResponseError("response body is not JSON") from exc
        try:
            choice = payload["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(
                "response is missing choices[0].message.content"
            ) from exc
        if not isinstance(text, str):
            raise MalformedResponseError("choices[0].message.content is not a string")
        usage = payload.get("usage")
        return BackendReply(text=text, usage=usage if isinstance(usage, dict) else None)
