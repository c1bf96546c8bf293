"""SVG export of deformed outlines.

One ``<path>`` element per contour, cubic ``C`` commands only, even-odd
fill, coordinates printed with exactly six decimal places:
``M x y C x1 y1, x2 y2, x3 y3 ... Z``.
"""

from __future__ import annotations

from .fontparse import Contour, GlyphOutline


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def path_data(contour: Contour) -> str:
    if not contour.segments:
        return ""
    start = contour.segments[0].p0
    parts = [f"M {_fmt(start[0])} {_fmt(start[1])}"]
    for seg in contour.segments:
        parts.append(
            "C "
            f"{_fmt(seg.p1[0])} {_fmt(seg.p1[1])}, "
            f"{_fmt(seg.p2[0])} {_fmt(seg.p2[1])}, "
            f"{_fmt(seg.p3[0])} {_fmt(seg.p3[1])}"
        )
    parts.append("Z")
    return " ".join(parts)


def svg_document(
    outline: GlyphOutline, width: float, height: float, fill: str = "black"
) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">',
    ]
    for contour in outline.contours:
        d = path_data(contour)
        if d:
            lines.append(
                f'  <path d="{d}" fill="{fill}" fill-rule="evenodd"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
