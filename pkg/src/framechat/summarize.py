"""Frame summarisation: prompt the backend with the conversation prefix plus the
run's frames, then substitute the frames with the resulting summary in place."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace as dc_replace

from .backend import (
    BackendError,
    ChatVisionRequest,
    DEFAULT_MODEL_ID,
    DEFAULT_TEMPERATURE,
    LLMBackend,
    Message,
    Role,
    TextPart,
    render_prompt,
)
from .context import (
    ContextBuffer,
    ContextElement,
    Frame,
    PromptView,
    StaleRunError,
    Summary,
    SummarisationRun,
)

logger = logging.getLogger(__name__)

DEFAULT_SUMMARY_INSTRUCTION = (
    "Briefly describe, in at most two sentences, what you saw in these images, "
    "as a memory note to yourself. Do not mention that they are images."
)

# The summary must stay much smaller than the frames it replaces.
SUMMARY_MAX_TOKENS = 80


class EmptySummaryError(BackendError):
    kind = "empty_summary"


@dataclass(frozen=True)
class SummaryRequestContext:
    """Everything strictly before the run, plus the frames to summarise.

    Elements at or past the run's end are never included: the summary sees the
    conversation only up to the frames being summarised.
    """

    system_instructions: str
    prefix_elements: tuple[ContextElement, ...]
    run_frames: tuple[Frame, ...]
    instruction: str


def build_summary_request(
    view: PromptView,
    run: SummarisationRun,
    *,
    instruction: str = DEFAULT_SUMMARY_INSTRUCTION,
) -> SummaryRequestContext:
    end = run.start_index + len(run.frames)
    if end > len(view.elements):
        raise StaleRunError("run is out of range for this snapshot")
    for offset, frame in enumerate(run.frames):
        element = view.elements[run.start_index + offset]
        if not isinstance(element, Frame) or element.frame_id != frame.frame_id:
            raise StaleRunError("run does not match the snapshot at its position")
    return SummaryRequestContext(
        system_instructions=view.system_instructions,
        prefix_elements=view.elements[: run.start_index],
        run_frames=run.frames,
        instruction=instruction,
    )


def render_summary_request(
    ctx: SummaryRequestContext,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    max_tokens: int = SUMMARY_MAX_TOKENS,
    temperature: float = DEFAULT_TEMPERATURE,
) -> ChatVisionRequest:
    """Render prefix + run frames, with the instruction as the final user turn."""
    view = PromptView(
        system_instructions=ctx.system_instructions,
        elements=ctx.prefix_elements + ctx.run_frames,
    )
    request = render_prompt(
        view, model_id=model_id, max_tokens=max_tokens, temperature=temperature
    )
    instruction = TextPart(ctx.instruction)
    messages = list(request.messages)
    if messages[-1].role is Role.USER:
        messages[-1] = Message(Role.USER, messages[-1].parts + (instruction,))
    else:
        messages.append(Message(Role.USER, (instruction,)))
    return dc_replace(request, messages=tuple(messages))


def summarise_frames(
    ctx: SummaryRequestContext,
    backend: LLMBackend,
    *,
    model_id: str = DEFAULT_MODEL_ID,
    max_tokens: int = SUMMARY_MAX_TOKENS,
    temperature: float = DEFAULT_TEMPERATURE,
    created_at: int = 0,
) -> Summary:
    """Ask the backend for the summary. Backend errors propagate untouched."""
    if not ctx.run_frames:
        raise ValueError("no frames to summarise")
    request = render_summary_request(
        ctx, model_id=model_id, max_tokens=max_tokens, temperature=temperature
    )
    reply = backend.complete(request)
    text = reply.text.strip()
    if not text:
        raise EmptySummaryError("backend returned an empty summary")
    return Summary(
        text=text,
        covers_frame_ids=tuple(frame.frame_id for frame in ctx.run_frames),
        created_at=created_at,
    )


def run_summarisation(
    buffer: ContextBuffer,
    run: SummarisationRun,
    backend: LLMBackend,
    *,
    instruction: str = DEFAULT_SUMMARY_INSTRUCTION,
    model_id: str = DEFAULT_MODEL_ID,
    max_tokens: int = SUMMARY_MAX_TOKENS,
    temperature: float = DEFAULT_TEMPERATURE,
    created_at: int = 0,
) -> Summary:
    """Full routine: build request, summarise, replace the run in the buffer.

    On any backend failure the buffer is left untouched, so the trigger re-arms
    on the next frame append.
    """
    ctx = build_summary_request(buffer.snapshot(), run, instruction=instruction)
    summary = summarise_frames(
        ctx,
        backend,
        model_id=model_id,
        max_tokens=max_tokens,
        temperature=temperature,
        created_at=created_at,
    )
    buffer.replace_run_with_summary(run, summary)
    return summary
