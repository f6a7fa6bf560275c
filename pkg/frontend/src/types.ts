// Mirrors of the gateway's wire formats (WS events and GET /state).

export type EventKind =
  | "frame_arrived"
  | "user_message"
  | "agent_reply"
  | "summary_created"
  | "backend_error";

export type TranscriptEvent = {
  seq: number;
  at: number;
  kind: EventKind;
  frame_id?: number;
  width?: number;
  height?: number;
  text?: string;
  latency_ms?: number;
  token_estimate?: number;
  covers_frame_ids?: number[];
  stage?: string;
  detail?: string;
};

export type FrameElement = {
  kind: "frame";
  frame_id: number;
  width: number;
  height: number;
  is_full_resolution: boolean;
  thumbnail_b64: string;
};

export type SummaryElement = {
  kind: "summary";
  text: string;
  covers: number[];
};

export type DialogueElement = {
  kind: "user" | "agent";
  text: string;
};

export type StateElement = FrameElement | SummaryElement | DialogueElement;

export type StateView = {
  elements: StateElement[];
  frame_count: number;
  token_estimate: number;
};

export type ConnectionStatus = "connecting" | "open" | "closed";
