// UI session state. The WebSocket event handler is the only mutator; capture
// timers and send actions never touch state directly, they just issue HTTP.

import type { ConnectionStatus, StateView, TranscriptEvent } from "./types.js";

export type UiState = {
  sessionId: string | null;
  connection: ConnectionStatus;
  events: TranscriptEvent[]; // seq-gapless by construction
  lastSeq: number;
  needsResync: boolean;
  bufferStale: boolean; // set when the inspector view must be re-fetched
  buffer: StateView | null;
  capture: { intervalMs: number; enabled: boolean; error: string | null };
  sendFailure: string | null; // last failed message text, for the retry affordance
};

export function initialState(intervalMs = 5000): UiState {
  return {
    sessionId: null,
    connection: "connecting",
    events: [],
    lastSeq: -1,
    needsResync: false,
    bufferStale: false,
    buffer: null,
    capture: { intervalMs, enabled: false, error: null },
    sendFailure: null,
  };
}

// The server replays the backlog from seq 0 on every (re)connect, so
// duplicates are expected and dropped; a gap means we missed something and
// must resubscribe.
export function applyEvent(state: UiState, event: TranscriptEvent): UiState {
  if (event.seq <= state.lastSeq) {
    return state;
  }
  if (event.seq !== state.lastSeq + 1) {
    return { ...state, needsResync: true };
  }
  const bufferStale =
    state.bufferStale ||
    event.kind === "frame_arrived" ||
    event.kind === "summary_created";
  return {
    ...state,
    events: [...state.events, event],
    lastSeq: event.seq,
    bufferStale,
  };
}

export function applyBufferView(state: UiState, view: StateView): UiState {
  return { ...state, buffer: view, bufferStale: false };
}

export function setConnection(state: UiState, connection: ConnectionStatus): UiState {
  // A fresh subscription replays from seq 0; reset the cursor so the replay
  // is not mistaken for duplicates after a resync.
  if (connection === "connecting" && state.needsResync) {
    return { ...state, connection, events: [], lastSeq: -1, needsResync: false };
  }
  return { ...state, connection };
}

export function setCaptureEnabled(state: UiState, enabled: boolean): UiState {
  return { ...state, capture: { ...state.capture, enabled, error: null } };
}

export function setCaptureError(state: UiState, error: string): UiState {
  return { ...state, capture: { ...state.capture, enabled: false, error } };
}

export function setSendFailure(state: UiState, text: string | null): UiState {
  return { ...state, sendFailure: text };
}

export function canSend(text: string): boolean {
  return text.trim().length > 0;
}
