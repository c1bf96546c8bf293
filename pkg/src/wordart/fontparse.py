"""TrueType outline extraction.

Parses the binary sfnt container (character map, quadratic glyph outlines,
em metadata) and turns one character into closed cubic-Bezier contours in
pixel space, y-down.  Supported subset: cmap formats 0/4/6/12, simple glyphs,
and one level of translation-only composites.  Hinting, kerning, CFF, color
and variable fonts are out of scope.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import DegenerateOutline, MalformedFont, MissingGlyph, UnsupportedFont

ORIENT_POSITIVE = "positive-area"
ORIENT_NEGATIVE = "negative-area"

_ON_CURVE = 0x01
_X_SHORT = 0x02
_Y_SHORT = 0x04
_REPEAT = 0x08
_X_SAME_OR_POS = 0x10
_Y_SAME_OR_POS = 0x20

_ARG_WORDS = 0x0001
_ARGS_XY = 0x0002
_HAS_SCALE = 0x0008
_MORE_COMPONENTS = 0x0020
_HAS_XY_SCALE = 0x0040
_HAS_2X2 = 0x0080

Point = tuple[float, float]


@dataclass(frozen=True)
class CubicSegment:
    """One cubic Bezier arc, control points in pixels."""

    p0: Point
    p1: Point
    p2: Point
    p3: Point

    def points(self) -> tuple[Point, Point, Point, Point]:
        return (self.p0, self.p1, self.p2, self.p3)

    def at(self, t: float) -> Point:
        u = 1.0 - t
        b0 = u * u * u
        b1 = 3.0 * u * u * t
        b2 = 3.0 * u * t * t
        b3 = t * t * t
        return (
            b0 * self.p0[0] + b1 * self.p1[0] + b2 * self.p2[0] + b3 * self.p3[0],
            b0 * self.p0[1] + b1 * self.p1[1] + b2 * self.p2[1] + b3 * self.p3[1],
        )


@dataclass(frozen=True)
class Contour:
    segments: tuple[CubicSegment, ...]
    orientation: str

    def reversed(self) -> "Contour":
        segs = tuple(
            CubicSegment(s.p3, s.p2, s.p1, s.p0) for s in reversed(self.segments)
        )
        return Contour(segs, _flip(self.orientation))


@dataclass(frozen=True)
class GlyphOutline:
    contours: tuple[Contour, ...]
    em_size_px: float
    advance_px: float


def _flip(orientation: str) -> str:
    return ORIENT_NEGATIVE if orientation == ORIENT_POSITIVE else ORIENT_POSITIVE


def make_contour(segments) -> Contour:
    """Build a contour, deriving the orientation flag from its signed area."""
    segs = tuple(segments)
    area = _signed_area(segs)
    return Contour(segs, ORIENT_POSITIVE if area > 0 else ORIENT_NEGATIVE)


def _signed_area(segments, subdiv: int = 16) -> float:
    acc = 0.0
    for seg in segments:
        prev = seg.at(0.0)
        for k in range(1, subdiv + 1):
            cur = seg.at(k / subdiv)
            acc += prev[0] * cur[1] - cur[0] * prev[1]
            prev = cur
    return 0.5 * acc


def elevate_quadratic(q0: Point, q1: Point, q2: Point) -> CubicSegment:
    """Exact degree elevation of a quadratic Bezier to a cubic."""
    p1 = (q0[0] + 2.0 / 3.0 * (q1[0] - q0[0]), q0[1] + 2.0 / 3.0 * (q1[1] - q0[1]))
    p2 = (q2[0] + 2.0 / 3.0 * (q1[0] - q2[0]), q2[1] + 2.0 / 3.0 * (q1[1] - q2[1]))
    return CubicSegment(q0, p1, p2, q2)


def _line_cubic(a: Point, b: Point) -> CubicSegment:
    p1 = (a[0] + (b[0] - a[0]) / 3.0, a[1] + (b[1] - a[1]) / 3.0)
    p2 = (a[0] + 2.0 * (b[0] - a[0]) / 3.0, a[1] + 2.0 * (b[1] - a[1]) / 3.0)
    return CubicSegment(a, p1, p2, b)


class FontFace:
    """Read-only parsed font; safe to share across threads."""

    def __init__(self, units_per_em, glyph_index_map, glyph_records, advances):
        self.units_per_em = units_per_em
        self.glyph_index_map = glyph_index_map
        self.glyph_table = glyph_records
        self._advances = advances

    def advance_for(self, gid: int) -> int:
        if not self._advances:
            return self.units_per_em
        if gid < len(self._advances):
            return self._advances[gid]
        return self._advances[-1]


def load_font(data: bytes) -> FontFace:
    """Parse a TrueType binary into a FontFace.

    Raises MalformedFont on truncation, bad offsets or bad metadata, and
    UnsupportedFont when no quadratic outline table is present.
    """
    if len(data) < 12:
        raise MalformedFont("container shorter than offset table")
    (version, num_tables) = struct.unpack(">IH", data[:6])
    if version == 0x4F54544F:  # 'OTTO': CFF outlines only
        raise UnsupportedFont("CFF outline table not supported")
    if version not in (0x00010000, 0x74727565):
        raise MalformedFont(f"unrecognized sfnt version 0x{version:08x}")
    if len(data) < 12 + 16 * num_tables:
        raise MalformedFont("truncated table directory")

    tables: dict[bytes, bytes] = {}
    for i in range(num_tables):
        base = 12 + 16 * i
        tag, _checksum, offset, length = struct.unpack(
            ">4sIII", data[base : base + 16]
        )
        if offset + length > len(data):
            raise MalformedFont(f"table {tag!r} extends past end of file")
        tables[tag] = data[offset : offset + length]

    if b"glyf" not in tables or b"loca" not in tables:
        raise UnsupportedFont("no quadratic outline table present")
    for required in (b"head", b"cmap", b"maxp"):
        if required not in tables:
            raise MalformedFont(f"missing {required.decode()} table")

    units_per_em, loca_format = _parse_head(tables[b"head"])
    if units_per_em < 16:
        raise MalformedFont(f"units_per_em {units_per_em} below minimum")

    num_glyphs = _parse_maxp(tables[b"maxp"])
    offsets = _parse_loca(tables[b"loca"], loca_format, num_glyphs)
    glyf = tables[b"glyf"]
    if offsets[-1] > len(glyf):
        raise MalformedFont("loca offsets exceed glyf table")

    cmap = _parse_cmap(tables[b"cmap"])
    for ch, gid in cmap.items():
        if gid >= num_glyphs:
            raise MalformedFont(f"character {ch!r} maps to out-of-range glyph {gid}")

    advances = ()
    if b"hhea" in tables and b"hmtx" in tables:
        advances = _parse_hmtx(tables[b"hmtx"], _parse_hhea(tables[b"hhea"]))

    records = tuple(
        glyf[offsets[i] : offsets[i + 1]] for i in range(num_glyphs)
    )
    return FontFace(units_per_em, cmap, records, advances)


def _parse_head(data: bytes):
    if len(data) < 54:
        raise MalformedFont("head table truncated")
    fields = struct.unpack(">IIIIHHqqhhhhHHhhh", data[:54])
    return fields[5], fields[15]


def _parse_maxp(data: bytes) -> int:
    if len(data) < 6:
        raise MalformedFont("maxp table truncated")
    return struct.unpack(">H", data[4:6])[0]


def _parse_hhea(data: bytes) -> int:
    if len(data) < 36:
        raise MalformedFont("hhea table truncated")
    return struct.unpack(">H", data[34:36])[0]


def _parse_hmtx(data: bytes, num_metrics: int):
    if len(data) < 4 * num_metrics:
        raise MalformedFont("hmtx table truncated")
    return [
        struct.unpack(">Hh", data[4 * i : 4 * i + 4])[0] for i in range(num_metrics)
    ]


def _parse_loca(data: bytes, loca_format: int, num_glyphs: int):
    if loca_format == 0:
        need = 2 * (num_glyphs + 1)
        if len(data) < need:
            raise MalformedFont("loca table truncated")
        offsets = [
            2 * v for (v,) in struct.iter_unpack(">H", data[:need])
        ]
    elif loca_format == 1:
        need = 4 * (num_glyphs + 1)
        if len(data) < need:
            raise MalformedFont("loca table truncated")
        offsets = [v for (v,) in struct.iter_unpack(">I", data[:need])]
    else:
        raise MalformedFont(f"bad indexToLocFormat {loca_format}")
    for a, b in zip(offsets, offsets[1:]):
        if b < a:
            raise MalformedFont("loca offsets not monotonic")
    return offsets


def _parse_cmap(data: bytes) -> dict[str, int]:
    if len(data) < 4:
        raise MalformedFont("cmap table truncated")
    _version, count = struct.unpack(">HH", data[:4])
    if len(data) < 4 + 8 * count:
        raise MalformedFont("cmap encoding records truncated")
    subtables = {}
    for i in range(count):
        pid, eid, off = struct.unpack(">HHI", data[4 + 8 * i : 12 + 8 * i])
        subtables[(pid, eid)] = off
    for key in ((3, 10), (3, 1), (0, 6), (0, 4), (0, 3), (0, 2), (0, 1), (0, 0)):
        if key in subtables:
            off = subtables[key]
            if off >= len(data):
                raise MalformedFont("cmap subtable offset out of range")
            mapping = _parse_cmap_subtable(data[off:])
            if mapping is not None:
                return mapping
    raise MalformedFont("no parseable cmap subtable")


def _parse_cmap_subtable(data: bytes):
    if len(data) < 2:
        raise MalformedFont("cmap subtable truncated")
    fmt = struct.unpack(">H", data[:2])[0]
    if fmt == 0:
        if len(data) < 6 + 256:
            raise MalformedFont("cmap format 0 truncated")
        return {chr(i): data[6 + i] for i in range(256) if data[6 + i] != 0}
    if fmt == 4:
        return _parse_cmap4(data)
    if fmt == 6:
        if len(data) < 10:
            raise MalformedFont("cmap format 6 truncated")
        first, count = struct.unpack(">HH", data[6:10])
        if len(data) < 10 + 2 * count:
            raise MalformedFont("cmap format 6 truncated")
        gids = struct.unpack(f">{count}H", data[10 : 10 + 2 * count])
        return {chr(first + i): g for i, g in enumerate(gids) if g != 0}
    if fmt == 12:
        if len(data) < 16:
            raise MalformedFont("cmap format 12 truncated")
        (n_groups,) = struct.unpack(">I", data[12:16])
        if len(data) < 16 + 12 * n_groups:
            raise MalformedFont("cmap format 12 truncated")
        mapping = {}
        for i in range(n_groups):
            s, e, g = struct.unpack(">III", data[16 + 12 * i : 28 + 12 * i])
            for c in range(s, min(e, 0x10FFFF) + 1):
                mapping[chr(c)] = g + (c - s)
        return mapping
    return None


def _parse_cmap4(data: bytes) -> dict[str, int]:
    if len(data) < 14:
        raise MalformedFont("cmap format 4 truncated")
    seg_x2 = struct.unpack(">H", data[6:8])[0]
    seg_count = seg_x2 // 2
    need = 14 + 2 + seg_x2 * 4
    if len(data) < need:
        raise MalformedFont("cmap format 4 truncated")
    ends = struct.unpack(f">{seg_count}H", data[14 : 14 + seg_x2])
    base = 14 + seg_x2 + 2
    starts = struct.unpack(f">{seg_count}H", data[base : base + seg_x2])
    base += seg_x2
    deltas = struct.unpack(f">{seg_count}h", data[base : base + seg_x2])
    base += seg_x2
    offsets = struct.unpack(f">{seg_count}H", data[base : base + seg_x2])
    mapping: dict[str, int] = {}
    for seg in range(seg_count):
        start, end = starts[seg], ends[seg]
        if start == 0xFFFF:
            continue
        for c in range(start, end + 1):
            if c == 0xFFFF:
                continue
            if offsets[seg] == 0:
                gid = (c + deltas[seg]) & 0xFFFF
            else:
                idx = base + 2 * seg + offsets[seg] + 2 * (c - start)
                if idx + 2 > len(data):
                    raise MalformedFont("cmap format 4 glyph index out of range")
                gid = struct.unpack(">H", data[idx : idx + 2])[0]
                if gid != 0:
                    gid = (gid + deltas[seg]) & 0xFFFF
            if gid != 0:
                mapping[chr(c)] = gid
    return mapping


# ---------------------------------------------------------------------------
# Glyph record decoding
# ---------------------------------------------------------------------------


def _decode_record(face: FontFace, gid: int, depth: int = 0):
    """Record -> list of point rings [(x, y, on_curve), ...] in font units."""
    record = face.glyph_table[gid]
    if not record:
        return []
    if len(record) < 10:
        raise MalformedFont(f"glyph {gid} record truncated")
    num_contours = struct.unpack(">h", record[:2])[0]
    if num_contours >= 0:
        return _decode_simple(record, num_contours)
    if depth > 0:
        raise UnsupportedFont(f"glyph {gid}: nested composite")
    return _decode_composite(face, record)


def _decode_simple(record: bytes, num_contours: int):
    pos = 10
    if len(record) < pos + 2 * num_contours + 2:
        raise MalformedFont("simple glyph truncated")
    end_pts = struct.unpack(
        f">{num_contours}H", record[pos : pos + 2 * num_contours]
    )
    pos += 2 * num_contours
    (inst_len,) = struct.unpack(">H", record[pos : pos + 2])
    pos += 2 + inst_len
    if num_contours == 0:
        return []
    num_points = end_pts[-1] + 1

    flags = []
    while len(flags) < num_points:
        if pos >= len(record):
            raise MalformedFont("glyph flags truncated")
        flag = record[pos]
        pos += 1
        flags.append(flag)
        if flag & _REPEAT:
            if pos >= len(record):
                raise MalformedFont("glyph repeat count truncated")
            flags.extend([flag] * record[pos])
            pos += 1
    flags = flags[:num_points]

    xs, pos = _decode_deltas(record, pos, flags, _X_SHORT, _X_SAME_OR_POS)
    ys, pos = _decode_deltas(record, pos, flags, _Y_SHORT, _Y_SAME_OR_POS)

    rings = []
    start = 0
    for end in end_pts:
        if end >= num_points:
            raise MalformedFont("contour endpoint out of range")
        ring = [
            (xs[i], ys[i], bool(flags[i] & _ON_CURVE))
            for i in range(start, end + 1)
        ]
        if ring:
            rings.append(ring)
        start = end + 1
    return rings


def _decode_deltas(record, pos, flags, short_bit, same_bit):
    values = []
    value = 0
    for flag in flags:
        if flag & short_bit:
            if pos >= len(record):
                raise MalformedFont("glyph coordinates truncated")
            delta = record[pos]
            pos += 1
            value += delta if flag & same_bit else -delta
        elif not flag & same_bit:
            if pos + 2 > len(record):
                raise MalformedFont("glyph coordinates truncated")
            value += struct.unpack(">h", record[pos : pos + 2])[0]
            pos += 2
        values.append(value)
    return values, pos


def _decode_composite(face: FontFace, record: bytes):
    pos = 10
    rings = []
    more = True
    while more:
        if pos + 4 > len(record):
            raise MalformedFont("composite component truncated")
        flags, comp_gid = struct.unpack(">HH", record[pos : pos + 4])
        pos += 4
        if flags & (_HAS_SCALE | _HAS_XY_SCALE | _HAS_2X2):
            raise UnsupportedFont("scaled composite component")
        if not flags & _ARGS_XY:
            raise UnsupportedFont("point-matching composite component")
        if flags & _ARG_WORDS:
            if pos + 4 > len(record):
                raise MalformedFont("composite arguments truncated")
            dx, dy = struct.unpack(">hh", record[pos : pos + 4])
            pos += 4
        else:
            if pos + 2 > len(record):
                raise MalformedFont("composite arguments truncated")
            dx, dy = struct.unpack(">bb", record[pos : pos + 2])
            pos += 2
        if comp_gid >= len(face.glyph_table):
            raise MalformedFont("composite references unknown glyph")
        for ring in _decode_record(face, comp_gid, depth=1):
            rings.append([(x + dx, y + dy, on) for (x, y, on) in ring])
        more = bool(flags & _MORE_COMPONENTS)
    return rings


def _ring_to_quad_path(ring):
    """TrueType ring -> list of ('L', a, b) and ('Q', a, ctrl, b) primitives.

    Consecutive off-curve points get the standard implied on-curve midpoint.
    The path is closed: the last primitive ends at the first one's start.
    """
    mid = lambda a, b: ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
    xy = [(float(x), float(y)) for (x, y, _) in ring]
    on = [bool(o) for (_, _, o) in ring]
    n = len(ring)

    if any(on):
        k = on.index(True)
        pts = xy[k:] + xy[:k]
        flags = on[k:] + on[:k]
        anchor = pts[0]
        walk = list(zip(pts[1:], flags[1:]))
    else:
        anchor = mid(xy[-1], xy[0])
        walk = list(zip(xy, on))

    prims = []
    cur = anchor
    ctrl = None
    for p, p_on in walk:
        if p_on:
            if ctrl is None:
                prims.append(("L", cur, p))
            else:
                prims.append(("Q", cur, ctrl, p))
                ctrl = None
            cur = p
        else:
            if ctrl is not None:
                m = mid(ctrl, p)
                prims.append(("Q", cur, ctrl, m))
                cur = m
            ctrl = p
    if ctrl is not None:
        prims.append(("Q", cur, ctrl, anchor))
    elif cur != anchor:
        prims.append(("L", cur, anchor))
    return prims


def extract_glyph(face: FontFace, codepoint: str, em_size_px: float) -> GlyphOutline:
    """Extract one character as closed cubic contours in pixel space.

    Quadratic arcs are degree-elevated to cubics; coordinates scale by
    ``em_size_px / units_per_em`` and the y axis points down.
    """
    if em_size_px <= 0:
        raise ValueError("em_size_px must be positive")
    if codepoint not in face.glyph_index_map:
        raise MissingGlyph(f"codepoint {codepoint!r} not mapped")
    gid = face.glyph_index_map[codepoint]
    rings = _decode_record(face, gid)

    scale = em_size_px / face.units_per_em
    upem = float(face.units_per_em)

    def to_px(p: Point) -> Point:
        return (p[0] * scale, (upem - p[1]) * scale)

    contours = []
    for ring in rings:
        segs = []
        for prim in _ring_to_quad_path(ring):
            if prim[0] == "L":
                seg = _line_cubic(prim[1], prim[2])
            else:
                seg = elevate_quadratic(prim[1], prim[2], prim[3])
            segs.append(
                CubicSegment(to_px(seg.p0), to_px(seg.p1), to_px(seg.p2), to_px(seg.p3))
            )
        if segs:
            contours.append(make_contour(segs))
    return GlyphOutline(
        tuple(contours), float(em_size_px), face.advance_for(gid) * scale
    )


def normalize_outline(outline: GlyphOutline) -> GlyphOutline:
    """Canonical winding: the largest contour positive, all others negative.

    Even-odd filling ignores winding, so this only pins a stable convention.
    Raises DegenerateOutline when every contour has zero area.
    """
    if not outline.contours:
        return outline
    areas = [_signed_area(c.segments) for c in outline.contours]
    if all(a == 0.0 for a in areas):
        raise DegenerateOutline("all contours have zero area")
    outer = max(range(len(areas)), key=lambda i: abs(areas[i]))
    fixed = []
    for i, (contour, area) in enumerate(zip(outline.contours, areas)):
        want_positive = i == outer
        if area == 0.0:
            fixed.append(contour)
        elif (area > 0.0) != want_positive:
            fixed.append(contour.reversed())
        else:
            fixed.append(contour)
    return GlyphOutline(tuple(fixed), outline.em_size_px, outline.advance_px)
