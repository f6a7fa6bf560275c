// Thin client for the gateway REST/WS API.

import type { StateView, TranscriptEvent } from "./types.js";

export class GatewayError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly kind: string | null = null,
  ) {
    super(message);
  }
}

async function errorFrom(response: Response): Promise<GatewayError> {
  let kind: string | null = null;
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    const detail = body.detail;
    if (typeof detail === "string") message = detail;
    else if (detail && typeof detail === "object") {
      kind = detail.kind ?? null;
      message = detail.detail ?? message;
    }
  } catch {
    // non-JSON error body; keep the status message
  }
  return new GatewayError(message, response.status, kind);
}

export class GatewayClient {
  constructor(readonly baseUrl: string = "") {}

  async createSession(overrides?: { n?: number; m?: number }): Promise<string> {
    const response = await fetch(`${this.baseUrl}/api/session`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(overrides ?? {}),
    });
    if (!response.ok) throw await errorFrom(response);
    const body = await response.json();
    return body.session_id as string;
  }

  async sendMessage(
    sessionId: string,
    text: string,
  ): Promise<{ reply: string; latency_ms: number }> {
    const response = await fetch(`${this.baseUrl}/api/session/${sessionId}/message`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (!response.ok) throw await errorFrom(response);
    return response.json();
  }

  async postFrame(sessionId: string, frame: Blob): Promise<number> {
    const response = await fetch(`${this.baseUrl}/api/session/${sessionId}/frame`, {
      method: "POST",
      headers: { "Content-Type": "image/jpeg" },
      body: frame,
    });
    if (!response.ok) throw await errorFrom(response);
    const body = await response.json();
    return body.frame_id as number;
  }

  async fetchState(sessionId: string): Promise<StateView> {
    const response = await fetch(`${this.baseUrl}/api/session/${sessionId}/state`);
    if (!response.ok) throw await errorFrom(response);
    return response.json();
  }

  eventsUrl(sessionId: string): string {
    const base = this.baseUrl || window.location.origin;
    const url = new URL(`/api/session/${sessionId}/events`, base);
    url.protocol = url.protocol === "https:" ? "wss:" : "ws:";
    return url.toString();
  }
}

export type EventSocketHandlers = {
  onEvent: (event: TranscriptEvent) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
};

// WebSocket subscription with automatic reconnect. The server replays the
// whole backlog from seq 0 on every connect; deduplication happens in the
// state reducer.
export class EventSocket {
  private socket: WebSocket | null = null;
  private closed = false;
  private retryTimer: number | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: EventSocketHandlers,
    private readonly retryDelayMs = 1000,
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    this.handlers.onStatus("connecting");
    this.socket = new WebSocket(this.url);
    this.socket.onopen = () => this.handlers.onStatus("open");
    this.socket.onmessage = (message) => {
      this.handlers.onEvent(JSON.parse(message.data as string) as TranscriptEvent);
    };
    this.socket.onclose = () => {
      this.handlers.onStatus("closed");
      if (!this.closed) {
        this.retryTimer = window.setTimeout(() => this.open(), this.retryDelayMs);
      }
    };
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) window.clearTimeout(this.retryTimer);
    this.socket?.close();
  }
}
