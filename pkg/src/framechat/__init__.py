"""framechat: a vision-enabled dialogue orchestrator.

Interleaves video frames and dialogue turns into a single bounded LLM prompt,
summarising the oldest frames in place once a configurable budget is reached.
"""

from .backend import (
    BackendConfig,
    BackendError,
    BackendReply,
    BackendTimeoutError,
    ChatVisionRequest,
    HttpBackend,
    MalformedResponseError,
    MockBackend,
    UpstreamError,
    estimate_tokens,
    generate_reply,
    render_prompt,
)
from .context import (
    ContextBuffer,
    DEFAULT_SYSTEM_INSTRUCTIONS,
    DialogueLine,
    Frame,
    NoFramesError,
    PromptView,
    Speaker,
    StaleRunError,
    SummarisationPolicy,
    SummarisationRun,
    Summary,
)
from .frames import (
    FrameDecodeError,
    FrameSourceConfig,
    ResolutionPolicyConfig,
    SourceKind,
    apply_resolution_policy,
    encode_frame,
)
from .session import (
    EventKind,
    LogicalClock,
    Session,
    SessionConfig,
    SessionScript,
    TranscriptEvent,
    load_session_script,
    replay,
)
from .summarize import (
    DEFAULT_SUMMARY_INSTRUCTION,
    EmptySummaryError,
    SummaryRequestContext,
    build_summary_request,
    run_summarisation,
    summarise_frames,
)

__version__ = "0.1.0"

__all__ = [
    "BackendConfig",
    "BackendError",
    "BackendReply",
    "BackendTimeoutError",
    "ChatVisionRequest",
    "ContextBuffer",
    "DEFAULT_SUMMARY_INSTRUCTION",
    "DEFAULT_SYSTEM_INSTRUCTIONS",
    "DialogueLine",
    "EmptySummaryError",
    "EventKind",
    "Frame",
    "FrameDecodeError",
    "FrameSourceConfig",
    "HttpBackend",
    "LogicalClock",
    "MalformedResponseError",
    "MockBackend",
    "NoFramesError",
    "PromptView",
    "ResolutionPolicyConfig",
    "Session",
    "SessionConfig",
    "SessionScript",
    "SourceKind",
    "Speaker",
    "StaleRunError",
    "SummarisationPolicy",
    "SummarisationRun",
    "Summary",
    "SummaryRequestContext",
    "TranscriptEvent",
    "UpstreamError",
    "apply_resolution_policy",
    "build_summary_request",
    "encode_frame",
    "estimate_tokens",
    "generate_reply",
    "load_session_script",
    "render_prompt",
    "replay",
    "run_summarisation",
    "summarise_frames",
]
