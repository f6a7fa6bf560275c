"""Frame sources, image normalisation, and the newest-frame-full-resolution policy."""

from __future__ import annotations

import base64
import io
import logging
import queue
import time
from dataclasses import dataclass, replace as dc_replace
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

import cv2
from PIL import Image

from .context import ContextBuffer, Frame

logger = logging.getLogger(__name__)

DEFAULT_INTERVAL_MS = 5000
DEFAULT_DOWNSCALE_LONG_SIDE = 512
THUMBNAIL_LONG_SIDE = 96

_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


class FrameDecodeError(Exception):
    """Bytes that do not decode as a JPEG or PNG image."""


class SourceOpenError(Exception):
    """A frame source could not be opened; fatal for that source."""


class SourceKind(str, Enum):
    VIDEO_FILE = "video"
    IMAGE_DIRECTORY = "dir"
    PUSH = "push"


@dataclass(frozen=True)
class FrameSourceConfig:
    kind: SourceKind
    interval_ms: int = DEFAULT_INTERVAL_MS
    path: Path | None = None
    max_frames: int | None = None

    def __post_init__(self) -> None:
        if self.interval_ms < 100:
            raise ValueError("interval_ms must be >= 100")
        if self.kind in (SourceKind.VIDEO_FILE, SourceKind.IMAGE_DIRECTORY) and not self.path:
            raise ValueError(f"path is required for a {self.kind.value} source")
        if self.max_frames is not None and self.max_frames < 1:
            raise ValueError("max_frames must be positive")


@dataclass(frozen=True)
class ResolutionPolicyConfig:
    downscale_long_side: int = DEFAULT_DOWNSCALE_LONG_SIDE
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.downscale_long_side < 64:
            raise ValueError("downscale_long_side must be >= 64")


@dataclass(frozen=True)
class RawCapture:
    """One captured image as produced by a source, before id/clock stamping."""

    data: bytes
    media_type: str


@dataclass(frozen=True)
class NormalizedImage:
    data: bytes
    media_type: str
    width: int
    height: int


def normalize_image(data: bytes) -> NormalizedImage:
    """Validate JPEG/PNG bytes and normalise to JPEG for prompt transport."""
    try:
        with Image.open(io.BytesIO(data)) as image:
            image.load()
            fmt = (image.format or "").upper()
            if fmt == "JPEG":
                return NormalizedImage(data, "image/jpeg", image.width, image.height)
            if fmt == "PNG":
                rgb = image.convert("RGB")
                buffer = io.BytesIO()
                rgb.save(buffer, "JPEG", quality=90)
                return NormalizedImage(
                    buffer.getvalue(), "image/jpeg", rgb.width, rgb.height
                )
            raise FrameDecodeError(f"unsupported image format: {fmt or 'unknown'}")
    except FrameDecodeError:
        raise
    except (OSError, ValueError) as exc:
        raise FrameDecodeError(f"undecodable image: {exc}") from exc


def encode_frame(
    data: bytes, *, frame_id: int, captured_at: int, is_full_resolution: bool = True
) -> Frame:
    """Decode, measure, and normalise raw bytes into a buffer-ready Frame."""
    image = normalize_image(data)
    return Frame(
        frame_id=frame_id,
        captured_at=captured_at,
        data=image.data,
        media_type=image.media_type,
        width=image.width,
        height=image.height,
        is_full_resolution=is_full_resolution,
    )


def downscale_frame(frame: Frame, long_side: int) -> Frame:
    """Re-encode so the long side fits ``long_side``; never upscale.

    A re-encode failure keeps the original bytes (logged), only the flag flips.
    """
    if max(frame.width, frame.height) <= long_side:
        return dc_replace(frame, is_full_resolution=False)
    if frame.width >= frame.height:
        new_w = long_side
        new_h = max(1, round(frame.height * long_side / frame.width))
    else:
        new_h = long_side
        new_w = max(1, round(frame.width * long_side / frame.height))
    try:
        with Image.open(io.BytesIO(frame.data)) as image:
            small = image.convert("RGB").resize((new_w, new_h), Image.LANCZOS)
            buffer = io.BytesIO()
            small.save(buffer, "JPEG", quality=85)
    except (OSError, ValueError) as exc:
        logger.warning("downscale failed for frame %d: %s", frame.frame_id, exc)
        return dc_replace(frame, is_full_resolution=False)
    return dc_replace(
        frame,
        data=buffer.getvalue(),
        media_type="image/jpeg",
        width=new_w,
        height=new_h,
        is_full_resolution=False,
    )


def apply_resolution_policy(buffer: ContextBuffer, policy: ResolutionPolicyConfig) -> None:
    """Keep only the newest frame at full resolution; downscale all older ones.

    Call immediately after each frame append.
    """
    if not policy.enabled:
        return
    frame_indices = [
        i for i, element in enumerate(buffer.elements) if isinstance(element, Frame)
    ]
    if not frame_indices:
        return
    for index in frame_indices[:-1]:
        frame = buffer.elements[index]
        assert isinstance(frame, Frame)
        if frame.is_full_resolution:
            buffer.elements[index] = downscale_frame(frame, policy.downscale_long_side)


def thumbnail_b64(frame: Frame, long_side: int = THUMBNAIL_LONG_SIDE) -> str:
    """Small base64 JPEG for UI inspection; visual identity, not fidelity."""
    with Image.open(io.BytesIO(frame.data)) as image:
        small = image.convert("RGB")
        small.thumbnail((long_side, long_side))
        buffer = io.BytesIO()
        small.save(buffer, "JPEG", quality=70)
    return base64.b64encode(buffer.getvalue()).decode("ascii")


class FrameSource(Protocol):
    interval_ms: int

    def next_frame(self) -> RawCapture | None: ...

    def close(self) -> None: ...


class PushSource:
    """Frames submitted over the network (gateway endpoint) rather than read locally."""

    def __init__(self, interval_ms: int = DEFAULT_INTERVAL_MS) -> None:
        self.interval_ms = interval_ms
        self._queue: queue.Queue[RawCapture] = queue.Queue()

    def submit(self, capture: RawCapture) -> None:
        self._queue.put(capture)

    def next_frame(self) -> RawCapture | None:
        try:
            return self._queue.get_nowait()
        except queue.Empty:
            return None

    def close(self) -> None:
        pass


class ImageDirectorySource:
    """Emits directory images in lexicographic order, one per tick."""

    def __init__(
        self,
        path: Path,
        interval_ms: int = DEFAULT_INTERVAL_MS,
        max_frames: int | None = None,
    ) -> None:
        path = Path(path)
        if not path.is_dir():
            raise SourceOpenError(f"not a directory: {path}")
        self.interval_ms = interval_ms
        self._files = sorted(
            p for p in path.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
        )
        self._position = 0
        self._emitted = 0
        self._max_frames = max_frames

    def next_frame(self) -> RawCapture | None:
        while self._position < len(self._files):
            if self._max_frames is not None and self._emitted >= self._max_frames:
                return None
            file = self._files[self._position]
            self._position += 1
            try:
                data = file.read_bytes()
                image = normalize_image(data)
            except (OSError, FrameDecodeError) as exc:
                logger.warning("skipping unreadable image %s: %s", file, exc)
                continue
            self._emitted += 1
            return RawCapture(image.data, image.media_type)
        return None

    def close(self) -> None:
        pass


class VideoFileSource:
    """Decodes the frame nearest t = k * interval on the file's own timeline."""

    def __init__(
        self,
        path: Path,
        interval_ms: int = DEFAULT_INTERVAL_MS,
        max_frames: int | None = None,
    ) -> None:
        path = Path(path)
        self._capture = cv2.VideoCapture(str(path))
        if not self._capture.isOpened():
            raise SourceOpenError(f"cannot open video file: {path}")
        self.interval_ms = interval_ms
        self._fps = self._capture.get(cv2.CAP_PROP_FPS) or 30.0
        self._total_frames = int(self._capture.get(cv2.CAP_PROP_FRAME_COUNT))
        self._tick = 0
        self._emitted = 0
        self._max_frames = max_frames

    def next_frame(self) -> RawCapture | None:
        while True:
            if self._max_frames is not None and self._emitted >= self._max_frames:
                return None
            target = round(self._tick * self.interval_ms / 1000 * self._fps)
            if self._total_frames > 0 and target >= self._total_frames:
                return None
            self._tick += 1
            self._capture.set(cv2.CAP_PROP_POS_FRAMES, target)
            ok, image = self._capture.read()
            if not ok:
                if self._total_frames <= 0:
                    return None
                logger.warning("skipping undecodable video frame at index %d", target)
                continue
            ok, encoded = cv2.imencode(".jpg", image)
            if not ok:
                logger.warning("failed to encode video frame at index %d", target)
                continue
            self._emitted += 1
            return RawCapture(encoded.tobytes(), "image/jpeg")

    def close(self) -> None:
        self._capture.release()


def open_source(config: FrameSourceConfig) -> FrameSource:
    if config.kind is SourceKind.PUSH:
        return PushSource(config.interval_ms)
    if config.kind is SourceKind.IMAGE_DIRECTORY:
        assert config.path is not None
        return ImageDirectorySource(config.path, config.interval_ms, config.max_frames)
    assert config.path is not None
    return VideoFileSource(config.path, config.interval_ms, config.max_frames)


class Ticker:
    """Paces a live loop to one tick per interval (replay uses logical time instead)."""

    def __init__(
        self,
        interval_ms: int,
        *,
        sleep: Callable[[float], None] = time.sleep,
        monotonic: Callable[[], float] = time.monotonic,
    ) -> None:
        self._interval_s = interval_ms / 1000
        self._sleep = sleep
        self._monotonic = monotonic
        self._next: float | None = None

    def wait(self) -> None:
        now = self._monotonic()
        if self._next is None:
            self._next = now
        delay = self._next - now
        if delay > 0:
            self._sleep(delay)
        self._next += self._interval_s
