"""Condition maps and the deterministic mock backends.

Depth (distance transform) feeds stylization; Sobel edges feed texturing;
the legibility scorer gates the results.
"""

from pathlib import Path

from wordart import fontbuild, fontparse
from wordart.diffrast import RasterConfig, rasterize
from wordart.genbackends import (
    MockBackend,
    StylizeRequest,
    TexturizeRequest,
    control_map,
    depth_map,
    legibility_score,
)
from wordart.image import write_png
from wordart.shapeparam import to_params

OUT = Path(__file__).parent / "out" / "mocks"
OUT.mkdir(parents=True, exist_ok=True)

face = fontparse.load_font(fontbuild.builtin_font_bytes("demo"))
outline = fontparse.normalize_outline(fontparse.extract_glyph(face, "C", 64.0))
render = rasterize(to_params(outline), RasterConfig(64, 64))
write_png(render, OUT / "glyph.png")

depth = depth_map(render)
write_png(depth, OUT / "depth.png")
print(f"depth peak at distance-transform ridge: {depth.data.max():.2f}")

mock = MockBackend()
for seed in (1, 2, 3):
    stylized = mock.stylize(
        StylizeRequest("sparkling jewelry", depth, seed=seed, strength=0.8)
    )
    write_png(stylized, OUT / f"stylized_seed{seed}.png")
    report = legibility_score(stylized, render, threshold=0.55)
    print(f"seed {seed}: legibility {report.legibility:.3f} "
          f"{'PASS' if report.passed else 'FAIL'}")

stylized = mock.stylize(StylizeRequest("sparkling jewelry", depth, seed=1, strength=0.8))
control = control_map(stylized)
write_png(control, OUT / "control.png")
textured = mock.texturize(TexturizeRequest("gold inlay", control, seed=1))
write_png(textured, OUT / "textured.png")
print(f"\nartifacts in {OUT}")
