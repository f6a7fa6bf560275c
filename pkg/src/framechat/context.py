"""Interleaved frame/dialogue/summary buffer and the summarisation trigger logic.

The buffer is the conversation manager's entire state: an ordered sequence of
frames, dialogue lines and summaries, plus the system instructions and the
frame-budget policy. All mutations are single-writer; the owning session
serialises them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Union

logger = logging.getLogger(__name__)

DEFAULT_SYSTEM_INSTRUCTIONS = (
    "You are impersonating a friendly kid. "
    "In this conversation, what you see is represented by the images. "
    "For example, the images will show you the environment you are in and "
    "possibly the person you are talking to. "
    "Try to start the conversation by saying something about the person you are "
    "talking to if there is one, based on accessories, clothes, etc. "
    "If there is no person, try to say something about the environment, but do "
    "not describe the environment! "
    "Have a nice conversation and try to be curious! "
    "It is important that you keep your answers short and to the point. "
    "DO NOT INCLUDE EMOTICONS OR SMILEYS IN YOUR ANSWERS."
)


class Speaker(str, Enum):
    USER = "user"
    AGENT = "agent"


class NoFramesError(Exception):
    """A summarisation run was requested on a buffer that holds no frames."""


class StaleRunError(Exception):
    """A summarisation run no longer matches the buffer it was selected from.

    Signals an orchestration sequencing bug: the buffer changed between run
    selection and replacement.
    """


@dataclass(frozen=True)
class SummarisationPolicy:
    """Frame budget: trigger once the buffer holds ``n`` frames, summarise up to ``m``.

    ``m < n`` guarantees at least one frame survives every summarisation, so the
    prompt never loses its current visual context.
    """

    n: int = 4
    m: int = 3

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.m >= self.n:
            raise ValueError("m must be < n")


@dataclass(frozen=True)
class Frame:
    """One still image sampled from a video feed, as stored in the buffer."""

    frame_id: int
    captured_at: int  # ms since session start
    data: bytes
    media_type: str  # "image/jpeg" or "image/png"
    width: int
    height: int
    is_full_resolution: bool = True

    def __post_init__(self) -> None:
        if self.frame_id < 1:
            raise ValueError("frame_id must be a positive integer")
        if self.captured_at < 0:
            raise ValueError("captured_at must be >= 0")
        if self.media_type not in ("image/jpeg", "image/png"):
            raise ValueError(f"unsupported media type: {self.media_type!r}")
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be >= 1 pixel")


@dataclass(frozen=True)
class DialogueLine:
    speaker: Speaker
    text: str
    at: int  # ms since session start

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", self.text.strip())
        if not self.text:
            raise ValueError("dialogue text is empty")


@dataclass(frozen=True)
class Summary:
    """Textual stand-in for a contiguous run of frames it replaced."""

    text: str
    covers_frame_ids: tuple[int, ...]
    created_at: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", self.text.strip())
        object.__setattr__(self, "covers_frame_ids", tuple(self.covers_frame_ids))
        if not self.text:
            raise ValueError("summary text is empty")
        if not self.covers_frame_ids:
            raise ValueError("summary must cover at least one frame")
        if any(b <= a for a, b in zip(self.covers_frame_ids, self.covers_frame_ids[1:])):
            raise ValueError("covered frame ids must be strictly increasing")


ContextElement = Union[Frame, DialogueLine, Summary]


@dataclass(frozen=True)
class SummarisationRun:
    """The earliest consecutive run of frames chosen for one summarisation pass."""

    start_index: int
    frames: tuple[Frame, ...]

    def __post_init__(self) -> None:
        if self.start_index < 0:
            raise ValueError("start_index must be >= 0")
        if not self.frames:
            raise ValueError("a summarisation run must contain at least one frame")

    @property
    def frame_ids(self) -> tuple[int, ...]:
        return tuple(frame.frame_id for frame in self.frames)


@dataclass(frozen=True)
class PromptView:
    """Immutable copy of the buffer, safe to hand to concurrent readers."""

    system_instructions: str
    elements: tuple[ContextElement, ...]

    @property
    def frame_count(self) -> int:
        return count_frames(self.elements)


def count_frames(elements) -> int:
    return sum(1 for element in elements if isinstance(element, Frame))


class ContextBuffer:
    """Ordered conversation state with the frame-summarisation trigger.

    Element order is insertion-chronological; a summary occupies exactly the
    position of the first frame it replaced. After every fully processed event
    the buffer holds at most ``policy.n`` frames (transient overflow is possible
    only while summarisation is failing, hard-capped at ``2n``).
    """

    def __init__(
        self,
        policy: SummarisationPolicy | None = None,
        system_instructions: str = DEFAULT_SYSTEM_INSTRUCTIONS,
    ) -> None:
        self.policy = policy or SummarisationPolicy()
        self.system_instructions = system_instructions
        self.elements: list[ContextElement] = []
        self.last_frame_id = 0

    @property
    def frame_count(self) -> int:
        return count_frames(self.elements)

    def append_dialogue(self, line: DialogueLine) -> None:
        """Append a dialogue line. Never triggers summarisation."""
        if not isinstance(line, DialogueLine):
            raise TypeError("append_dialogue expects a DialogueLine")
        self.elements.append(line)

    def append_frame(self, frame: Frame) -> SummarisationRun | None:
        """Append a frame; return the summarisation run to resolve, if triggered.

        The buffer is not mutated beyond the append: the caller is responsible
        for resolving the returned run (or re-arming on failure via the next
        append). Frames past twice the budget are dropped oldest-first so a
        backend outage cannot grow the prompt without bound.
        """
        if frame.frame_id <= self.last_frame_id:
            raise ValueError(
                f"frame_id {frame.frame_id} is not greater than the last seen id "
                f"{self.last_frame_id}"
            )
        self.elements.append(frame)
        self.last_frame_id = frame.frame_id
        if self.frame_count > 2 * self.policy.n:
            index = next(i for i, e in enumerate(self.elements) if isinstance(e, Frame))
            dropped = self.elements.pop(index)
            logger.warning(
                "frame buffer overflow: dropped frame %d (hard cap %d frames)",
                dropped.frame_id,
                2 * self.policy.n,
            )
        if self.frame_count >= self.policy.n:
            return self.select_run()
        return None

    def select_run(self) -> SummarisationRun:
        """Pick the earliest consecutive frame run, truncated to at most ``m``."""
        start = next(
            (i for i, e in enumerate(self.elements) if isinstance(e, Frame)), None
        )
        if start is None:
            raise NoFramesError("buffer contains no frames")
        frames: list[Frame] = []
        for element in self.elements[start:]:
            if not isinstance(element, Frame) or len(frames) >= self.policy.m:
                break
            frames.append(element)
        return SummarisationRun(start_index=start, frames=tuple(frames))

    def replace_run_with_summary(self, run: SummarisationRun, summary: Summary) -> None:
        """Splice the summary into the position of the run's first frame."""
        end = run.start_index + len(run.frames)
        current = self.elements[run.start_index : end]
        current_ids = tuple(
            e.frame_id for e in current if isinstance(e, Frame)
        )
        if len(current) != len(run.frames) or current_ids != run.frame_ids:
            raise StaleRunError(
                "buffer changed since run selection; re-select before replacing"
            )
        if summary.covers_frame_ids != run.frame_ids:
            raise ValueError("summary does not cover exactly the run's frame ids")
        self.elements[run.start_index : end] = [summary]

    def snapshot(self) -> PromptView:
        """Immutable copy: later buffer mutations do not affect it."""
        return PromptView(
            system_instructions=self.system_instructions,
            elements=tuple(self.elements),
        )
