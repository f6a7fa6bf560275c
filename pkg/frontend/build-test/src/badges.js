// Latency badge thresholds: live replies were observed between about one and
// seven seconds depending on backend load, so up to 1 s reads as healthy and
// beyond 5 s as strained.
export const FAST_REPLY_MS = 1000;
export const SLOW_REPLY_MS = 5000;
export function latencyBadge(latencyMs) {
    if (latencyMs <= FAST_REPLY_MS)
        return "green";
    if (latencyMs > SLOW_REPLY_MS)
        return "amber";
    return "yellow";
}
export function latencyLabel(latencyMs) {
    return latencyMs >= 1000
        ? `${(latencyMs / 1000).toFixed(1)} s`
        : `${latencyMs} ms`;
}
