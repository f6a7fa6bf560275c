// Prompt inspector: a pure projection of the gateway's buffer view into
// render descriptors, plus the DOM renderer. No conversation logic lives
// here; killing the UI loses nothing.
function itemFor(element) {
    if (element.kind === "frame") {
        return {
            type: "thumbnail",
            frameId: element.frame_id,
            highlighted: element.is_full_resolution,
            imageSrc: `data:image/jpeg;base64,${element.thumbnail_b64}`,
            caption: `frame ${element.frame_id} (${element.width}×${element.height})`,
        };
    }
    if (element.kind === "summary") {
        return {
            type: "summary-card",
            text: element.text,
            covers: element.covers,
            caption: `frames ${element.covers.join(", ")}`,
        };
    }
    return { type: "bubble", who: element.kind, text: element.text };
}
export function buildInspectorModel(view) {
    if (view === null) {
        return { items: [], frameCount: 0, tokenEstimate: 0 };
    }
    return {
        items: view.elements.map(itemFor),
        frameCount: view.frame_count,
        tokenEstimate: view.token_estimate,
    };
}
export function renderInspector(model, container) {
    container.replaceChildren();
    for (const item of model.items) {
        if (item.type === "thumbnail") {
            const cell = document.createElement("figure");
            cell.className = item.highlighted ? "thumb full-res" : "thumb";
            const image = document.createElement("img");
            image.src = item.imageSrc;
            image.alt = item.caption;
            const caption = document.createElement("figcaption");
            caption.textContent = item.caption;
            cell.append(image, caption);
            container.append(cell);
        }
        else if (item.type === "summary-card") {
            const card = document.createElement("div");
            card.className = "summary-card";
            const header = document.createElement("div");
            header.className = "summary-covers";
            header.textContent = item.caption;
            const body = document.createElement("div");
            body.textContent = item.text;
            card.append(header, body);
            container.append(card);
        }
        else {
            const bubble = document.createElement("div");
            bubble.className = `bubble ${item.who}`;
            bubble.textContent = item.text;
            container.append(bubble);
        }
    }
}
