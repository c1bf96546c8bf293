"""Raster image container and file formats.

An :class:`Image` is a row-major float array with values in [0, 1],
either single-channel ``(h, w)`` or RGB ``(h, w, 3)``.  Exports are 8-bit
PNG (``value = round(255 * v)``) and a raw portable float map (PFM) used
by tests for lossless round trips.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage

from .errors import DimensionMismatch

# Rec. 601 luma weights, used wherever RGB collapses to one channel.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Image:
    """Grayscale or RGB raster with explicit dimensions, values in [0, 1]."""

    data: np.ndarray
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            pass
        elif arr.ndim == 3 and arr.shape[2] == 3:
            pass
        else:
            raise ValueError(f"expected (h, w) or (h, w, 3) array, got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    def same_size(self, other: "Image") -> bool:
        return self.width == other.width and self.height == other.height


def require_same_size(a: Image, b: Image) -> None:
    if not a.same_size(b):
        raise DimensionMismatch(
            f"{a.width}x{a.height} vs {b.width}x{b.height}"
        )


def luminance(img: Image) -> Image:
    """Collapse RGB to single channel; single-channel passes through."""
    if img.channels == 1:
        return img
    w = np.array(LUMA_WEIGHTS)
    return Image(np.clip(img.data @ w, 0.0, 1.0))


def to_png_bytes(img: Image) -> bytes:
    q = np.rint(img.data * 255.0).astype(np.uint8)
    mode = "L" if img.channels == 1 else "RGB"
    buf = io.BytesIO()
    PILImage.fromarray(q, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def from_png_bytes(raw: bytes) -> Image:
    with PILImage.open(io.BytesIO(raw)) as pil:
        if pil.mode == "L":
            arr = np.asarray(pil, dtype=np.float64) / 255.0
        else:
            arr = np.asarray(pil.convert("RGB"), dtype=np.float64) / 255.0
    return Image(arr)


def write_png(img: Image, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_png_bytes(img))


def read_png(path) -> Image:
    with open(path, "rb") as fh:
        return from_png_bytes(fh.read())


def to_pfm_bytes(img: Image) -> bytes:
    """Portable float map; 'Pf' grayscale or 'PF' color, little-endian."""
    header = b"PF" if img.channels == 3 else b"Pf"
    # PFM stores rows bottom-up by convention.
    rows = np.flipud(img.data).astype("<f4")
    meta = f"\n{img.width} {img.height}\n-1.0\n".encode("ascii")
    return header + meta + rows.tobytes()


def from_pfm_bytes(raw: bytes) -> Image:
    buf = io.BytesIO(raw)
    magic = buf.readline().strip()
    if magic not in (b"PF", b"Pf"):
        raise ValueError("not a PFM stream")
    width, height = (int(v) for v in buf.readline().split())
    scale = float(buf.readline())
    count = width * height * (3 if magic == b"PF" else 1)
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(buf.read(count * 4), dtype=dtype).astype(np.float64)
    shape = (height, width, 3) if magic == b"PF" else (height, width)
    return Image(np.flipud(arr.reshape(shape)))
