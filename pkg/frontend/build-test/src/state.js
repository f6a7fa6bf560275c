// UI session state. The WebSocket event handler is the only mutator; capture
// timers and send actions never touch state directly, they just issue HTTP.
export function initialState(intervalMs = 5000) {
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
export function applyEvent(state, event) {
    if (event.seq <= state.lastSeq) {
        return state;
    }
    if (event.seq !== state.lastSeq + 1) {
        return { ...state, needsResync: true };
    }
    const bufferStale = state.bufferStale ||
        event.kind === "frame_arrived" ||
        event.kind === "summary_created";
    return {
        ...state,
        events: [...state.events, event],
        lastSeq: event.seq,
        bufferStale,
    };
}
export function applyBufferView(state, view) {
    return { ...state, buffer: view, bufferStale: false };
}
export function setConnection(state, connection) {
    // A fresh subscription replays from seq 0; reset the cursor so the replay
    // is not mistaken for duplicates after a resync.
    if (connection === "connecting" && state.needsResync) {
        return { ...state, connection, events: [], lastSeq: -1, needsResync: false };
    }
    return { ...state, connection };
}
export function setCaptureEnabled(state, enabled) {
    return { ...state, capture: { ...state.capture, enabled, error: null } };
}
export function setCaptureError(state, error) {
    return { ...state, capture: { ...state.capture, enabled: false, error } };
}
export function setSendFailure(state, text) {
    return { ...state, sendFailure: text };
}
export function canSend(text) {
    return text.trim().length > 0;
}
