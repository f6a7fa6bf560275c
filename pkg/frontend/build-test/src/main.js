// Wiring: one UiState, mutated only by the WS handler; buttons and timers
// issue HTTP requests and nothing else.
import { EventSocket, GatewayClient, GatewayError } from "./api.js";
import { latencyBadge, latencyLabel } from "./badges.js";
import { CaptureLoop, openWebcam, webcamGrabber } from "./capture.js";
import { buildInspectorModel, renderInspector } from "./inspector.js";
import { applyBufferView, applyEvent, canSend, initialState, setCaptureEnabled, setCaptureError, setConnection, setSendFailure, } from "./state.js";
const client = new GatewayClient();
let state = initialState();
let capture = null;
const el = {
    status: document.getElementById("connection-status"),
    log: document.getElementById("chat-log"),
    input: document.getElementById("chat-input"),
    send: document.getElementById("send-button"),
    retry: document.getElementById("retry-button"),
    captureToggle: document.getElementById("capture-toggle"),
    captureBanner: document.getElementById("capture-banner"),
    video: document.getElementById("preview"),
    strip: document.getElementById("inspector-strip"),
    tokens: document.getElementById("token-estimate"),
    interval: document.getElementById("capture-interval"),
};
function update(next) {
    state = next;
    render();
}
function render() {
    el.status.textContent = state.connection;
    el.status.dataset.status = state.connection;
    el.send.disabled = !canSend(el.input.value);
    el.retry.hidden = state.sendFailure === null;
    el.captureBanner.hidden = state.capture.error === null;
    el.captureBanner.textContent = state.capture.error ?? "";
    el.captureToggle.textContent = state.capture.enabled
        ? "Stop camera"
        : "Start camera";
    const model = buildInspectorModel(state.buffer);
    renderInspector(model, el.strip);
    el.tokens.textContent = `~${model.tokenEstimate} tokens, ${model.frameCount} frame(s)`;
    el.log.replaceChildren();
    for (const event of state.events) {
        const row = renderEvent(event);
        if (row !== null)
            el.log.append(row);
    }
    el.log.scrollTop = el.log.scrollHeight;
}
function renderEvent(event) {
    if (event.kind === "user_message") {
        const row = document.createElement("div");
        row.className = "chat-row user";
        row.textContent = event.text ?? "";
        return row;
    }
    if (event.kind === "agent_reply") {
        const row = document.createElement("div");
        row.className = "chat-row agent";
        row.textContent = event.text ?? "";
        const badge = document.createElement("span");
        const latency = event.latency_ms ?? 0;
        badge.className = `latency-badge ${latencyBadge(latency)}`;
        badge.textContent = latencyLabel(latency);
        row.append(badge);
        return row;
    }
    if (event.kind === "backend_error") {
        const row = document.createElement("div");
        row.className = "chat-row error";
        row.textContent = `backend error (${event.stage ?? "?"}): ${event.detail ?? ""}`;
        return row;
    }
    return null; // frame/summary events render in the inspector instead
}
async function refreshBufferIfStale() {
    if (!state.bufferStale || state.sessionId === null)
        return;
    try {
        const view = await client.fetchState(state.sessionId);
        update(applyBufferView(state, view));
    }
    catch {
        // transient; the next event will mark the buffer stale again
    }
}
async function sendCurrentMessage(text) {
    if (!canSend(text) || state.sessionId === null)
        return;
    el.input.value = "";
    update(setSendFailure(state, null));
    try {
        await client.sendMessage(state.sessionId, text);
        // The reply arrives through the event stream; nothing to do here.
    }
    catch (error) {
        const hint = error instanceof GatewayError ? ` (${error.message})` : "";
        update(setSendFailure(state, text));
        el.captureBanner.hidden = true;
        console.warn(`message failed${hint}`);
    }
}
async function toggleCapture() {
    if (state.capture.enabled) {
        capture?.stop();
        capture = null;
        update(setCaptureEnabled(state, false));
        return;
    }
    try {
        await openWebcam(el.video);
    }
    catch (error) {
        update(setCaptureError(state, `camera unavailable: ${error instanceof Error ? error.message : error}`));
        return;
    }
    const intervalMs = Number(el.interval.value) || 5000;
    capture = new CaptureLoop({
        grab: webcamGrabber(el.video),
        post: async (frame) => {
            if (state.sessionId !== null)
                await client.postFrame(state.sessionId, frame);
        },
        setTimer: (fn, ms) => window.setTimeout(fn, ms),
        clearTimer: (id) => window.clearTimeout(id),
        onError: (message) => console.warn(`capture: ${message}`),
    }, intervalMs);
    capture.start();
    update(setCaptureEnabled(state, true));
}
async function start() {
    const sessionId = await client.createSession();
    update({ ...state, sessionId });
    const socket = new EventSocket(client.eventsUrl(sessionId), {
        onEvent: (event) => {
            update(applyEvent(state, event));
            void refreshBufferIfStale();
        },
        onStatus: (status) => update(setConnection(state, status)),
    });
    socket.connect();
    el.send.addEventListener("click", () => void sendCurrentMessage(el.input.value));
    el.input.addEventListener("keydown", (key) => {
        if (key.key === "Enter")
            void sendCurrentMessage(el.input.value);
    });
    el.input.addEventListener("input", render);
    el.retry.addEventListener("click", () => {
        const text = state.sendFailure;
        if (text !== null)
            void sendCurrentMessage(text);
    });
    el.captureToggle.addEventListener("click", () => void toggleCapture());
    render();
}
void start();
