"""Regenerate the placeholder scenario images.

The demo scripts reference these labeled placeholders so they run out of the
box. Swap in real photos of the corresponding scenes for meaningful replies
from a live backend.
"""

from __future__ import annotations

from pathlib import Path

from PIL import Image, ImageDraw

SCENES = {
    "lab_desks.jpg": ((52, 58, 76), "LAB: DESKS, MONITORS"),
    "lab_dark_window.jpg": ((28, 30, 44), "LAB: DARK WINDOW"),
    "kitchen_counter.jpg": ((168, 128, 84), "KITCHEN COUNTER, CHOPPED VEGETABLES"),
    "kitchen_cooking.jpg": ((178, 110, 70), "PERSON COOKING AT THE COUNTER"),
    "kitchen_coffee_machine.jpg": ((120, 88, 66), "COFFEE MACHINE, CLOSE UP"),
    "entrance_rain_jacket.jpg": ((220, 180, 40), "ENTRANCE: BRIGHT RAIN JACKET"),
    "bathroom_floor.jpg": ((190, 196, 204), "BATHROOM: PERSON LYING ON THE FLOOR"),
    "bedroom_jacket_tshirt.jpg": ((96, 122, 96), "BEDROOM: JACKET AND T-SHIRT HELD UP"),
}


def main() -> None:
    out_dir = Path(__file__).parent / "images"
    out_dir.mkdir(exist_ok=True)
    for name, (color, label) in SCENES.items():
        image = Image.new("RGB", (480, 360), color)
        draw = ImageDraw.Draw(image)
        for y in range(0, 360, 4):  # faint banding so frames are not flat color
            shade = tuple(max(0, c - y // 12) for c in color)
            draw.line([(0, y), (480, y)], fill=shade)
        draw.rectangle([16, 150, 464, 210], fill=(0, 0, 0))
        draw.text((24, 172), label, fill=(240, 240, 240))
        image.save(out_dir / name, "JPEG", quality=80)
        print(f"wrote {out_dir / name}")


if __name__ == "__main__":
    main()
