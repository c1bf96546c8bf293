"""Parse the built-in fonts and inspect extracted glyph outlines.

Writes an SVG per glyph to demos/out/outlines/.
"""

from pathlib import Path

from wordart import fontbuild, fontparse, svgio

OUT = Path(__file__).parent / "out" / "outlines"
OUT.mkdir(parents=True, exist_ok=True)

face = fontparse.load_font(fontbuild.builtin_font_bytes("demo"))
print(f"units_per_em: {face.units_per_em}")
print(f"mapped characters: {sorted(face.glyph_index_map)}")

for ch in "AOICD":
    outline = fontparse.extract_glyph(face, ch, 64.0)
    outline = fontparse.normalize_outline(outline)
    total_segments = sum(len(c.segments) for c in outline.contours)
    print(
        f"{ch!r}: {len(outline.contours)} contour(s), {total_segments} cubic "
        f"segments, advance {outline.advance_px:.1f}px"
    )
    for i, contour in enumerate(outline.contours):
        print(f"   contour {i}: {len(contour.segments)} segments, {contour.orientation}")
    (OUT / f"glyph_{ch}.svg").write_text(svgio.svg_document(outline, 64, 64))

print(f"\nSVGs written to {OUT}")
