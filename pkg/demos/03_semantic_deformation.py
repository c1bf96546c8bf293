"""The square-to-circle reference deformation, step by step.

Writes before/after renders, the target mask, and the deformed SVG.
"""

from pathlib import Path

from wordart import fontbuild, fontparse, svgio
from wordart.diffrast import RasterConfig, rasterize
from wordart.image import write_png
from wordart.deform import DeformConfig, make_target, optimize_deformation
from wordart.shapeparam import RegionPolicy, from_params, to_params

OUT = Path(__file__).parent / "out" / "deform"
OUT.mkdir(parents=True, exist_ok=True)

face = fontparse.load_font(fontbuild.builtin_font_bytes("square"))
outline = fontparse.normalize_outline(fontparse.extract_glyph(face, "A", 64.0))
raster = RasterConfig(64, 64)
target = make_target("circle", 64, 64, scale=0.8)

write_png(rasterize(to_params(outline), raster), OUT / "before.png")
write_png(target.mask, OUT / "target.png")

cfg = DeformConfig(raster=raster)
result = optimize_deformation(
    outline, RegionPolicy("all", deform_ratio=1.0), target, cfg
)
print(f"IoU: {result.target_iou_before:.4f} -> {result.target_iou_after:.4f}")
print(f"loss: {result.loss_trace[0]:.4f} -> {result.loss_trace[-1]:.4f} "
      f"over {len(result.loss_trace)} steps")

deformed = from_params(result.final_params, outline.em_size_px, outline.advance_px)
write_png(rasterize(result.final_params, raster), OUT / "after.png")
(OUT / "deformed.svg").write_text(svgio.svg_document(deformed, 64, 64))

# Partial freedom: saliency-ranked points only, anchored points frozen
partial = optimize_deformation(
    outline, RegionPolicy("saliency_ratio", deform_ratio=0.5), target,
    DeformConfig(raster=raster, steps=100),
)
write_png(rasterize(partial.final_params, raster), OUT / "after_partial.png")
print(f"partial freedom (ratio 0.5): IoU -> {partial.target_iou_after:.4f}")
print(f"\nartifacts in {OUT}")
