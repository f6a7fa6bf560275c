// Mirrors of the gateway's wire formats (WS events and GET /state).
export {};
