"""Minimal TrueType font writer.

Constructs valid binary fonts from explicit point lists, straight from the
public sfnt format layout: offset table, head/hhea/maxp/cmap/loca/glyf/hmtx.
Used to generate the built-in fonts and the synthetic fixtures in the test
suite.  Deliberately shares no code with the parser so the two sides can
check each other.

Glyph geometry is given in font units, y-up, as TrueType point triples
``(x, y, on_curve)``.  Composite glyphs are ``("composite", [(glyph_name,
dx, dy), ...])``.
"""

from __future__ import annotations

import struct

ON_CURVE = 0x01

ARG_1_AND_2_ARE_WORDS = 0x0001
ARGS_ARE_XY_VALUES = 0x0002
WE_HAVE_A_SCALE = 0x0008
MORE_COMPONENTS = 0x0020


def _pad4(data: bytes) -> bytes:
    return data + b"\x00" * (-len(data) % 4)


def _checksum(data: bytes) -> int:
    data = _pad4(data)
    total = 0
    for (word,) in struct.iter_unpack(">I", data):
        total = (total + word) & 0xFFFFFFFF
    return total


def _simple_glyph(contours) -> bytes:
    xs = [p[0] for c in contours for p in c]
    ys = [p[1] for c in contours for p in c]
    header = struct.pack(
        ">hhhhh", len(contours), min(xs), min(ys), max(xs), max(ys)
    )
    end_pts = []
    total = 0
    for c in contours:
        total += len(c)
        end_pts.append(total - 1)
    body = struct.pack(f">{len(end_pts)}H", *end_pts)
    body += struct.pack(">H", 0)  # no instructions

    # One flag byte per point, all deltas written as full int16 values.
    flags = bytes(
        (ON_CURVE if p[2] else 0) for c in contours for p in c
    )
    body += flags

    prev = 0
    for c in contours:
        for p in c:
            body += struct.pack(">h", p[0] - prev)
            prev = p[0]
    prev = 0
    for c in contours:
        for p in c:
            body += struct.pack(">h", p[1] - prev)
            prev = p[1]
    return header + body


def _composite_glyph(components, glyph_ids, bbox, scaled=False) -> bytes:
    data = struct.pack(">hhhhh", -1, *bbox)
    for i, (name, dx, dy) in enumerate(components):
        flags = ARG_1_AND_2_ARE_WORDS | ARGS_ARE_XY_VALUES
        if i + 1 < len(components):
            flags |= MORE_COMPONENTS
        if scaled:
            flags |= WE_HAVE_A_SCALE
        data += struct.pack(">HHhh", flags, glyph_ids[name], dx, dy)
        if scaled:
            data += struct.pack(">h", 1 << 14)  # F2Dot14 1.0
    return data


def _cmap_format4(char_to_gid: dict[str, int]) -> bytes:
    codes = sorted(ord(ch) for ch in char_to_gid)
    segments = []  # (start, end)
    for code in codes:
        if segments and code == segments[-1][1] + 1:
            # contiguous run only when glyph ids also run in step
            prev_delta = (char_to_gid[chr(segments[-1][0])] - segments[-1][0]) & 0xFFFF
            delta = (char_to_gid[chr(code)] - code) & 0xFFFF
            if delta == prev_delta:
                segments[-1] = (segments[-1][0], code)
                continue
        segments.append((code, code))
    starts = [s for s, _ in segments] + [0xFFFF]
    ends = [e for _, e in segments] + [0xFFFF]
    deltas = [(char_to_gid[chr(s)] - s) & 0xFFFF for s, _ in segments] + [1]

    seg_count = len(starts)
    search_range = 2 * (1 << (seg_count.bit_length() - 1))
    entry_selector = seg_count.bit_length() - 1
    sub = struct.pack(
        ">HHHHHHH",
        4,
        16 + 8 * seg_count,
        0,
        seg_count * 2,
        search_range,
        entry_selector,
        seg_count * 2 - search_range,
    )
    sub += struct.pack(f">{seg_count}H", *ends)
    sub += struct.pack(">H", 0)
    sub += struct.pack(f">{seg_count}H", *starts)
    sub += struct.pack(f">{seg_count}H", *deltas)
    sub += struct.pack(f">{seg_count}H", *([0] * seg_count))
    header = struct.pack(">HH", 0, 1) + struct.pack(">HHI", 3, 1, 12)
    return header + sub


def build_font(
    glyphs: dict[str, object],
    units_per_em: int = 1000,
    advances: dict[str, int] | None = None,
    default_advance: int = 700,
    long_loca: bool = False,
    scaled_composites: bool = False,
) -> bytes:
    """Assemble a complete font binary.

    ``glyphs`` maps character to either a list of contours (point triples),
    an empty list (blank glyph, e.g. space), or a composite spec.  Glyph id 0
    is always a blank .notdef.
    """
    advances = advances or {}
    order = [None] + sorted(glyphs)  # gid 0 = .notdef
    glyph_ids = {ch: i for i, ch in enumerate(order) if ch is not None}

    records = []
    for ch in order:
        if ch is None:
            records.append(b"")
            continue
        spec = glyphs[ch]
        if isinstance(spec, tuple) and spec and spec[0] == "composite":
            comps = spec[1]
            records.append(
                _composite_glyph(
                    comps, glyph_ids, (0, 0, units_per_em, units_per_em),
                    scaled=scaled_composites,
                )
            )
        elif spec:
            records.append(_simple_glyph(spec))
        else:
            records.append(b"")

    glyf = b""
    offsets = [0]
    for rec in records:
        glyf += rec + b"\x00" * (-len(rec) % 4)
        offsets.append(len(glyf))

    loca_format = 1 if (long_loca or offsets[-1] // 2 > 0xFFFF) else 0
    if loca_format == 0:
        loca = struct.pack(f">{len(offsets)}H", *(o // 2 for o in offsets))
    else:
        loca = struct.pack(f">{len(offsets)}I", *offsets)

    num_glyphs = len(records)
    head = struct.pack(
        ">IIIIHHqqhhhhHHhhh",
        0x00010000,
        0x00010000,
        0,  # checkSumAdjustment patched below
        0x5F0F3CF5,
        0x0003,
        units_per_em,
        0,
        0,
        0,
        -200,
        units_per_em,
        units_per_em,
        0,
        8,
        2,
        loca_format,
        0,
    )
    hhea = struct.pack(
        ">ihhhHhhhhhhhhhhhH",
        0x00010000,
        800,
        -200,
        0,
        1000,
        0,
        0,
        1000,
        1,
        0,
        0,
        0,
        0,
        0,
        0,
        0,
        num_glyphs,
    )
    hmtx = b""
    for ch in order:
        adv = default_advance if ch is None else advances.get(ch, default_advance)
        hmtx += struct.pack(">Hh", adv, 0)
    maxp = struct.pack(">IH", 0x00010000, num_glyphs) + struct.pack(">13H", *([0] * 13))
    cmap = _cmap_format4(glyph_ids)

    tables = {
        b"cmap": cmap,
        b"glyf": glyf,
        b"head": head,
        b"hhea": hhea,
        b"hmtx": hmtx,
        b"loca": loca,
        b"maxp": maxp,
    }

    tags = sorted(tables)
    num_tables = len(tags)
    search_range = 16 * (1 << (num_tables.bit_length() - 1))
    directory = struct.pack(
        ">IHHHH",
        0x00010000,
        num_tables,
        search_range,
        num_tables.bit_length() - 1,
        16 * num_tables - search_range,
    )
    offset = 12 + 16 * num_tables
    entries = b""
    body = b""
    head_offset = None
    for tag in tags:
        data = tables[tag]
        if tag == b"head":
            head_offset = offset
        entries += struct.pack(">4sIII", tag, _checksum(data), offset, len(data))
        body += _pad4(data)
        offset += len(_pad4(data))

    font = directory + entries + body
    adjustment = (0xB1B0AFBA - _checksum(font)) & 0xFFFFFFFF
    font = (
        font[: head_offset + 8]
        + struct.pack(">I", adjustment)
        + font[head_offset + 12 :]
    )
    return font


def patch_table_offset(font: bytes, tag: bytes, new_offset: int) -> bytes:
    """Byte-surgery helper for corruption tests: rewrite one directory entry."""
    (num_tables,) = struct.unpack(">H", font[4:6])
    for i in range(num_tables):
        base = 12 + 16 * i
        if font[base : base + 4] == tag:
            return (
                font[: base + 8]
                + struct.pack(">I", new_offset)
                + font[base + 12 :]
            )
    raise KeyError(f"table {tag!r} not present")


# ---------------------------------------------------------------------------
# Built-in glyph geometry (font units, y-up, upem 1000)
# ---------------------------------------------------------------------------

_SQUARE = [[(150, 150, 1), (850, 150, 1), (850, 850, 1), (150, 850, 1)]]
_RING = [
    [(150, 150, 1), (850, 150, 1), (850, 850, 1), (150, 850, 1)],
    [(350, 350, 1), (350, 650, 1), (650, 650, 1), (650, 350, 1)],
]
_BAR = [[(420, 100, 1), (580, 100, 1), (580, 900, 1), (420, 900, 1)]]
_NOTCH = [
    [
        (150, 150, 1),
        (850, 150, 1),
        (850, 350, 1),
        (450, 350, 1),
        (450, 650, 1),
        (850, 650, 1),
        (850, 850, 1),
        (150, 850, 1),
    ]
]
# Four consecutive off-curve points: renders as a rounded diamond via the
# implied-midpoint rule.
_BLOB = [[(150, 150, 0), (850, 150, 0), (850, 850, 0), (150, 850, 0)]]


def builtin_font_names() -> list[str]:
    return ["square", "demo"]


def builtin_font_bytes(name: str) -> bytes:
    if name == "square":
        return build_font({"A": _SQUARE, " ": []}, advances={" ": 300})
    if name == "demo":
        return build_font(
            {
                "A": _SQUARE,
                "O": _RING,
                "I": _BAR,
                "C": _NOTCH,
                "D": _BLOB,
                " ": [],
            },
            advances={" ": 300, "I": 400},
        )
    raise KeyError(f"unknown built-in font {name!r}")
