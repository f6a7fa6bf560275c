// Thin client for the gateway REST/WS API.
export class GatewayError extends Error {
    status;
    kind;
    constructor(message, status, kind = null) {
        super(message);
        this.status = status;
        this.kind = kind;
    }
}
async function errorFrom(response) {
    let kind = null;
    let message = `HTTP ${response.status}`;
    try {
        const body = await response.json();
        const detail = body.detail;
        if (typeof detail === "string")
            message = detail;
        else if (detail && typeof detail === "object") {
            kind = detail.kind ?? null;
            message = detail.detail ?? message;
        }
    }
    catch {
        // non-JSON error body; keep the status message
    }
    return new GatewayError(message, response.status, kind);
}
export class GatewayClient {
    baseUrl;
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    async createSession(overrides) {
        const response = await fetch(`${this.baseUrl}/api/session`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(overrides ?? {}),
        });
        if (!response.ok)
            throw await errorFrom(response);
        const body = await response.json();
        return body.session_id;
    }
    async sendMessage(sessionId, text) {
        const response = await fetch(`${this.baseUrl}/api/session/${sessionId}/message`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ text }),
        });
        if (!response.ok)
            throw await errorFrom(response);
        return response.json();
    }
    async postFrame(sessionId, frame) {
        const response = await fetch(`${this.baseUrl}/api/session/${sessionId}/frame`, {
            method: "POST",
            headers: { "Content-Type": "image/jpeg" },
            body: frame,
        });
        if (!response.ok)
            throw await errorFrom(response);
        const body = await response.json();
        return body.frame_id;
    }
    async fetchState(sessionId) {
        const response = await fetch(`${this.baseUrl}/api/session/${sessionId}/state`);
        if (!response.ok)
            throw await errorFrom(response);
        return response.json();
    }
    eventsUrl(sessionId) {
        const base = this.baseUrl || window.location.origin;
        const url = new URL(`/api/session/${sessionId}/events`, base);
        url.protocol = url.protocol === "https:" ? "wss:" : "ws:";
        return url.toString();
    }
}
// WebSocket subscription with automatic reconnect. The server replays the
// whole backlog from seq 0 on every connect; deduplication happens in the
// state reducer.
export class EventSocket {
    url;
    handlers;
    retryDelayMs;
    socket = null;
    closed = false;
    retryTimer = null;
    constructor(url, handlers, retryDelayMs = 1000) {
        this.url = url;
        this.handlers = handlers;
        this.retryDelayMs = retryDelayMs;
    }
    connect() {
        this.closed = false;
        this.open();
    }
    open() {
        this.handlers.onStatus("connecting");
        this.socket = new WebSocket(this.url);
        this.socket.onopen = () => this.handlers.onStatus("open");
        this.socket.onmessage = (message) => {
            this.handlers.onEvent(JSON.parse(message.data));
        };
        this.socket.onclose = () => {
            this.handlers.onStatus("closed");
            if (!this.closed) {
                this.retryTimer = window.setTimeout(() => this.open(), this.retryDelayMs);
            }
        };
    }
    close() {
        this.closed = true;
        if (this.retryTimer !== null)
            window.clearTimeout(this.retryTimer);
        this.socket?.close();
    }
}
