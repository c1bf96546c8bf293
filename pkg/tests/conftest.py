import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wordart import fontbuild, fontparse

# The synthetic fixture font: a 100x100 font-unit square for 'A' at
# units_per_em 1000, plus an empty space glyph.
SQUARE_100 = [[(0, 0, 1), (100, 0, 1), (100, 100, 1), (0, 100, 1)]]


@pytest.fixture(scope="session")
def square100_font_bytes() -> bytes:
    return fontbuild.build_font({"A": SQUARE_100, " ": []}, units_per_em=1000)


@pytest.fixture(scope="session")
def square100_face(square100_font_bytes):
    return fontparse.load_font(square100_font_bytes)


@pytest.fixture(scope="session")
def demo_face():
    return fontparse.load_font(fontbuild.builtin_font_bytes("demo"))


@pytest.fixture(scope="session")
def builtin_square_face():
    return fontparse.load_font(fontbuild.builtin_font_bytes("square"))


@pytest.fixture()
def square_outline(builtin_square_face):
    outline = fontparse.extract_glyph(builtin_square_face, "A", 64.0)
    return fontparse.normalize_outline(outline)


@pytest.fixture()
def ring_outline(demo_face):
    outline = fontparse.extract_glyph(demo_face, "O", 64.0)
    return fontparse.normalize_outline(outline)
