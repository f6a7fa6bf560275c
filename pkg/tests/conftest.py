from __future__ import annotations

import io
from functools import lru_cache

import pytest
from PIL import Image

from framechat.context import (
    ContextBuffer,
    DialogueLine,
    Frame,
    Speaker,
    SummarisationPolicy,
    Summary,
)


@lru_cache(maxsize=None)
def make_jpeg(width: int = 16, height: int = 12, color: tuple[int, int, int] = (30, 90, 200)) -> bytes:
    buffer = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buffer, "JPEG", quality=85)
    return buffer.getvalue()


@lru_cache(maxsize=None)
def make_png(width: int = 16, height: int = 12, color: tuple[int, int, int] = (200, 40, 40)) -> bytes:
    buffer = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buffer, "PNG")
    return buffer.getvalue()


def frame(frame_id: int, at: int = 0, **overrides) -> Frame:
    """Lightweight frame for buffer-level tests; bytes need not decode."""
    fields = {
        "frame_id": frame_id,
        "captured_at": at,
        "data": f"img-{frame_id}".encode(),
        "media_type": "image/jpeg",
        "width": 4,
        "height": 3,
        "is_full_resolution": True,
    }
    fields.update(overrides)
    return Frame(**fields)


def user_line(text: str = "hi", at: int = 0) -> DialogueLine:
    return DialogueLine(Speaker.USER, text, at)


def agent_line(text: str = "hello there", at: int = 0) -> DialogueLine:
    return DialogueLine(Speaker.AGENT, text, at)


def summary(*frame_ids: int, text: str = "a summary", at: int = 0) -> Summary:
    return Summary(text=text, covers_frame_ids=tuple(frame_ids), created_at=at)


def buffer_with(*elements, n: int = 4, m: int = 3) -> ContextBuffer:
    buf = ContextBuffer(policy=SummarisationPolicy(n=n, m=m))
    buf.elements = list(elements)
    frame_ids = [e.frame_id for e in elements if isinstance(e, Frame)]
    covered = [i for e in elements if isinstance(e, Summary) for i in e.covers_frame_ids]
    buf.last_frame_id = max(frame_ids + covered, default=0)
    return buf


@pytest.fixture
def jpeg_bytes() -> bytes:
    return make_jpeg()


@pytest.fixture
def png_bytes() -> bytes:
    return make_png()


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] {name}: {outcome}")
