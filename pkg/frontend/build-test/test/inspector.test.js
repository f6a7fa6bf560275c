import assert from "node:assert/strict";
import test from "node:test";
import { latencyBadge, latencyLabel } from "../src/badges.js";
import { buildInspectorModel } from "../src/inspector.js";
const frameElement = (id, fullRes) => ({
    kind: "frame",
    frame_id: id,
    width: 480,
    height: 360,
    is_full_resolution: fullRes,
    thumbnail_b64: "QUJD",
});
test("inspector mirrors the buffer strip after the reference flow", () => {
    // Two summaries, one exchange, two frames: the gateway state right after
    // the second summarisation pass.
    const view = {
        elements: [
            { kind: "summary", text: "a desk by a window", covers: [1, 2] },
            { kind: "summary", text: "the same desk", covers: [3] },
            { kind: "user", text: "what do you see?" },
            { kind: "agent", text: "a tidy desk" },
            frameElement(4, false),
            frameElement(5, true),
        ],
        frame_count: 2,
        token_estimate: 618,
    };
    const model = buildInspectorModel(view);
    assert.deepEqual(model.items.map((item) => item.type), ["summary-card", "summary-card", "bubble", "bubble", "thumbnail", "thumbnail"]);
    const thumbs = model.items.filter((item) => item.type === "thumbnail");
    assert.deepEqual(thumbs.map((t) => t.type === "thumbnail" && t.highlighted), [false, true]);
    assert.equal(model.tokenEstimate, 618);
    assert.equal(model.frameCount, 2);
});
test("a summarisation pass collapses thumbnails into a card", () => {
    const before = {
        elements: [frameElement(1, false), frameElement(2, false), frameElement(3, true)],
        frame_count: 3,
        token_estimate: 700,
    };
    const after = {
        elements: [
            { kind: "summary", text: "three frames of a kitchen", covers: [1, 2, 3] },
            frameElement(4, true),
        ],
        frame_count: 1,
        token_estimate: 340,
    };
    const beforeModel = buildInspectorModel(before);
    assert.equal(beforeModel.items.filter((i) => i.type === "thumbnail").length, 3);
    const afterModel = buildInspectorModel(after);
    const cards = afterModel.items.filter((i) => i.type === "summary-card");
    assert.equal(cards.length, 1);
    assert.ok(cards[0]?.type === "summary-card" && cards[0].covers.join(",") === "1,2,3");
    const remainingThumbs = afterModel.items.filter((i) => i.type === "thumbnail");
    assert.equal(remainingThumbs.length, 1);
    assert.ok(remainingThumbs[0]?.type === "thumbnail" && remainingThumbs[0].frameId === 4);
});
test("an empty session renders an empty strip", () => {
    const model = buildInspectorModel(null);
    assert.deepEqual(model.items, []);
    const empty = buildInspectorModel({ elements: [], frame_count: 0, token_estimate: 120 });
    assert.deepEqual(empty.items, []);
});
test("latency badges follow the observed healthy-to-strained range", () => {
    assert.equal(latencyBadge(250), "green");
    assert.equal(latencyBadge(1000), "green");
    assert.equal(latencyBadge(1001), "yellow");
    assert.equal(latencyBadge(5000), "yellow");
    assert.equal(latencyBadge(5001), "amber");
    assert.equal(latencyBadge(7200), "amber");
});
test("latency labels read naturally", () => {
    assert.equal(latencyLabel(420), "420 ms");
    assert.equal(latencyLabel(6400), "6.4 s");
});
