import numpy as np
import pytest

from wordart import fontbuild, fontparse
from wordart.errors import (
    DegenerateOutline,
    MalformedFont,
    MissingGlyph,
    UnsupportedFont,
)
from wordart.fontparse import (
    GlyphOutline,
    elevate_quadratic,
    extract_glyph,
    load_font,
    make_contour,
    normalize_outline,
)

from oracles import cubic_point, quad_point


def _bbox(outline):
    pts = [p for c in outline.contours for s in c.segments for p in s.points()]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return min(xs), min(ys), max(xs), max(ys)


class TestLoadFont:
    def test_synthetic_square_font_maps_glyph(self, square100_face):
        assert "A" in square100_face.glyph_index_map
        assert square100_face.units_per_em == 1000

    def test_empty_bytes(self):
        with pytest.raises(MalformedFont):
            load_font(b"")

    def test_truncated_directory(self, square100_font_bytes):
        with pytest.raises(MalformedFont):
            load_font(square100_font_bytes[:20])

    def test_glyf_offset_past_eof(self, square100_font_bytes):
        corrupt = fontbuild.patch_table_offset(
            square100_font_bytes, b"glyf", len(square100_font_bytes) + 1000
        )
        with pytest.raises(MalformedFont):
            load_font(corrupt)

    def test_zero_units_per_em(self):
        data = fontbuild.build_font({"A": [[(0, 0, 1), (9, 0, 1), (9, 9, 1)]]},
                                    units_per_em=0)
        with pytest.raises(MalformedFont):
            load_font(data)

    def test_missing_outline_table(self, square100_font_bytes):
        # Blow away the glyf tag in the directory so it cannot be found.
        mangled = square100_font_bytes.replace(b"glyf", b"blah", 1)
        with pytest.raises(UnsupportedFont):
            load_font(mangled)

    def test_unknown_sfnt_version(self):
        with pytest.raises(MalformedFont):
            load_font(b"\x00\x02\x00\x00" + b"\x00" * 20)


class TestExtractGlyph:
    def test_square_scaled_to_20px(self, square100_face):
        outline = extract_glyph(square100_face, "A", 200.0)
        assert len(outline.contours) == 1
        assert len(outline.contours[0].segments) == 4
        x0, y0, x1, y1 = _bbox(outline)
        assert x1 - x0 == pytest.approx(20.0, abs=1e-12)
        assert y1 - y0 == pytest.approx(20.0, abs=1e-12)

    def test_space_has_no_contours(self, square100_face):
        outline = extract_glyph(square100_face, " ", 200.0)
        assert outline.contours == ()

    def test_missing_codepoint(self, square100_face):
        with pytest.raises(MissingGlyph):
            extract_glyph(square100_face, "Z", 200.0)

    def test_contours_closed_exactly(self, demo_face):
        for ch in "AOICD":
            outline = extract_glyph(demo_face, ch, 64.0)
            for contour in outline.contours:
                first = contour.segments[0].p0
                last = contour.segments[-1].p3
                assert first == last

    def test_consecutive_segments_share_endpoints(self, demo_face):
        for ch in "AOICD":
            outline = extract_glyph(demo_face, ch, 64.0)
            for contour in outline.contours:
                for a, b in zip(contour.segments, contour.segments[1:]):
                    assert a.p3 == b.p0

    def test_scale_linearity_is_exact(self, demo_face):
        for ch in "AOD":
            small = extract_glyph(demo_face, ch, 32.0)
            large = extract_glyph(demo_face, ch, 64.0)
            for cs, cl in zip(small.contours, large.contours):
                for ss, sl in zip(cs.segments, cl.segments):
                    for ps, pl in zip(ss.points(), sl.points()):
                        assert pl[0] == 2.0 * ps[0]
                        assert pl[1] == 2.0 * ps[1]

    def test_all_offcurve_ring_uses_midpoints(self, demo_face):
        outline = extract_glyph(demo_face, "D", 64.0)
        assert len(outline.contours) == 1
        # 4 off-curve points -> 4 quadratic arcs between implied midpoints
        assert len(outline.contours[0].segments) == 4

    def test_y_axis_points_down(self, demo_face):
        # 'I' is a tall bar: in font units it rises from y=100 to y=900;
        # in image space its top must have the smaller y.
        outline = extract_glyph(demo_face, "I", 64.0)
        _, y0, _, y1 = _bbox(outline)
        assert y0 < y1
        assert y0 == pytest.approx((1000 - 900) / 1000 * 64.0)
        assert y1 == pytest.approx((1000 - 100) / 1000 * 64.0)


class TestComposites:
    def test_translation_component_resolves(self):
        base = [[(0, 0, 1), (100, 0, 1), (100, 100, 1), (0, 100, 1)]]
        data = fontbuild.build_font(
            {"A": base, "B": ("composite", [("A", 200, 0)])}
        )
        face = load_font(data)
        plain = extract_glyph(face, "A", 1000.0)
        shifted = extract_glyph(face, "B", 1000.0)
        x0p, _, _, _ = _bbox(plain)
        x0s, _, _, _ = _bbox(shifted)
        assert x0s - x0p == pytest.approx(200.0)

    def test_scaled_component_rejected(self):
        base = [[(0, 0, 1), (100, 0, 1), (100, 100, 1), (0, 100, 1)]]
        data = fontbuild.build_font(
            {"A": base, "B": ("composite", [("A", 0, 0)])},
            scaled_composites=True,
        )
        face = load_font(data)
        with pytest.raises(UnsupportedFont):
            extract_glyph(face, "B", 1000.0)

    def test_nested_composite_rejected(self):
        base = [[(0, 0, 1), (100, 0, 1), (100, 100, 1), (0, 100, 1)]]
        data = fontbuild.build_font(
            {
                "A": base,
                "B": ("composite", [("A", 10, 0)]),
                "C": ("composite", [("B", 0, 10)]),
            }
        )
        face = load_font(data)
        with pytest.raises(UnsupportedFont):
            extract_glyph(face, "C", 1000.0)


class TestElevateQuadratic:
    def test_collinear_thirds(self):
        seg = elevate_quadratic((0, 0), (3, 0), (6, 0))
        assert seg.p1 == (2.0, 0.0)
        assert seg.p2 == (4.0, 0.0)

    def test_degenerate_point(self):
        seg = elevate_quadratic((5, 5), (5, 5), (5, 5))
        assert seg.points() == ((5, 5), (5, 5), (5, 5), (5, 5))

    def test_same_curve_at_sample_points(self):
        q0, q1, q2 = (0.0, 0.0), (0.0, 3.0), (6.0, 0.0)
        seg = elevate_quadratic(q0, q1, q2)
        for t in (0.25, 0.5, 0.75):
            expected = quad_point(q0, q1, q2, t)
            got = cubic_point(*seg.points(), t)
            assert np.allclose(got, expected, atol=1e-12)

    def test_elevation_exactness_1000_random(self):
        rng = np.random.default_rng(7)
        ts = np.arange(0.0, 1.0001, 0.01)
        for _ in range(1000):
            pts = rng.uniform(-100.0, 100.0, size=(3, 2))
            seg = elevate_quadratic(tuple(pts[0]), tuple(pts[1]), tuple(pts[2]))
            scale = max(1.0, np.abs(pts).max())
            worst = 0.0
            for t in ts:
                q = quad_point(pts[0], pts[1], pts[2], t)
                c = cubic_point(*seg.points(), t)
                worst = max(worst, float(np.hypot(*(q - c))))
            assert worst < 1e-9 * scale


def _square_contour(ccw: bool, lo=0.0, hi=10.0):
    corners = [(lo, lo), (hi, lo), (hi, hi), (lo, hi)]
    if not ccw:
        corners.reverse()
    segs = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        segs.append(fontparse._line_cubic(a, b))
    return make_contour(segs)


class TestNormalizeOutline:
    def test_reverses_outer_to_positive(self):
        contour = _square_contour(ccw=False)
        outline = GlyphOutline((contour,), 64.0, 0.0)
        fixed = normalize_outline(outline)
        assert fixed.contours[0].orientation == fontparse.ORIENT_POSITIVE
        before = {s.p0 for s in contour.segments}
        after = {s.p0 for s in fixed.contours[0].segments}
        assert before == after

    def test_hole_gets_opposite_orientation(self):
        outer = _square_contour(ccw=True, lo=0.0, hi=10.0)
        inner = _square_contour(ccw=True, lo=3.0, hi=7.0)
        assert outer.orientation == inner.orientation
        outline = GlyphOutline((outer, inner), 64.0, 0.0)
        fixed = normalize_outline(outline)
        assert fixed.contours[0].orientation == fontparse.ORIENT_POSITIVE
        assert fixed.contours[1].orientation == fontparse.ORIENT_NEGATIVE

    def test_all_zero_area_degenerate(self):
        segs = [
            fontparse._line_cubic((0.0, 0.0), (5.0, 0.0)),
            fontparse._line_cubic((5.0, 0.0), (0.0, 0.0)),
        ]
        outline = GlyphOutline((make_contour(segs),), 64.0, 0.0)
        with pytest.raises(DegenerateOutline):
            normalize_outline(outline)

    def test_idempotent(self, ring_outline):
        once = normalize_outline(ring_outline)
        twice = normalize_outline(once)
        assert once == twice

    def test_empty_outline_passthrough(self):
        outline = GlyphOutline((), 64.0, 0.0)
        assert normalize_outline(outline) == outline
