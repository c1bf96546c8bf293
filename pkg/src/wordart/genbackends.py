"""Stylization / texturing backends and their condition maps.

Generative models are pluggable network services speaking a small JSON
protocol (images as base64 PNG).  A deterministic local mock implements the
same interface so the whole pipeline runs and is testable offline.  This
module also derives the conditioning images (depth from a distance
transform, edges from a Sobel pair) and scores stylization legibility.

Wire protocol, field names exact:

    POST /v1/stylize   {"prompt", "depth_png_b64", "seed", "strength"}
    POST /v1/texturize {"prompt", "control_png_b64", "seed"}
    POST /v1/score     {"image_png_b64", "mask_png_b64"}
    POST /v1/plan      {"user_text"}

Success replies carry {"image_png_b64": str} (or {"legibility": float},
or a directives document for /v1/plan); failures carry {"error": str}.
"""

from __future__ import annotations

import base64
import binascii
import colorsys
import hashlib
from dataclasses import dataclass

import httpx
import numpy as np
from scipy import ndimage

from .errors import BackendMalformedReply, BackendUnavailable, DimensionMismatch
from .image import Image, from_png_bytes, luminance, require_same_size, to_png_bytes

DEFAULT_THRESHOLD = 0.55

CONNECT_TIMEOUT_S = 5.0
TOTAL_TIMEOUT_S = 120.0

# Mock texturing replaces pixels within this distance of a high-control one.
TEXTURE_BAND_RADIUS_PX = 2.0


def _prompt_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def image_to_b64(img: Image) -> str:
    return base64.b64encode(to_png_bytes(img)).decode("ascii")


def image_from_b64(payload: str) -> Image:
    try:
        raw = base64.b64decode(payload, validate=True)
        return from_png_bytes(raw)
    except (binascii.Error, ValueError, OSError) as exc:
        raise BackendMalformedReply(f"undecodable image payload: {exc}") from exc


@dataclass(frozen=True)
class StylizeRequest:
    prompt: str
    depth: Image
    seed: int
    strength: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength {self.strength} outside [0, 1]")
        if self.depth.channels != 1:
            raise ValueError("depth must be single-channel")


@dataclass(frozen=True)
class TexturizeRequest:
    prompt: str
    control: Image
    seed: int

    def __post_init__(self):
        if self.control.channels != 1:
            raise ValueError("control must be single-channel")


@dataclass(frozen=True)
class ScoreReport:
    legibility: float
    passed: bool
    threshold: float

    def __post_init__(self):
        if self.passed != (self.legibility >= self.threshold):
            raise ValueError("passed flag inconsistent with threshold")

    @staticmethod
    def from_legibility(legibility: float, threshold: float) -> "ScoreReport":
        return ScoreReport(legibility, legibility >= threshold, threshold)

    def to_jsonable(self) -> dict:
        return {
            "legibility": self.legibility,
            "passed": self.passed,
            "threshold": self.threshold,
        }


# ---------------------------------------------------------------------------
# Condition maps
# ---------------------------------------------------------------------------


def depth_map(glyph_raster: Image) -> Image:
    """Interior distance transform, normalized to peak 1; exterior is 0.

    Pixels beyond the canvas count as exterior, so a full-canvas glyph
    still gets a well-defined ridge.
    """
    if glyph_raster.channels != 1:
        raise ValueError("depth_map expects a single-channel raster")
    interior = glyph_raster.data >= 0.5
    if not interior.any():
        return Image(np.zeros_like(glyph_raster.data))
    padded = np.pad(interior, 1, mode="constant", constant_values=False)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    dist = np.where(interior, dist, 0.0)
    peak = dist.max()
    if peak == 0.0:
        return Image(np.zeros_like(glyph_raster.data))
    return Image(dist / peak)


def control_map(image: Image) -> Image:
    """Sobel gradient magnitude, edge-clamped, normalized to peak 1."""
    lum = luminance(image).data
    p = np.pad(lum, 1, mode="edge")
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0.0:
        return Image(np.zeros_like(lum))
    return Image(mag / peak)


# ---------------------------------------------------------------------------
# Legibility scoring
# ---------------------------------------------------------------------------


def legibility_score(
    candidate: Image, original_mask: Image, threshold: float = DEFAULT_THRESHOLD
) -> ScoreReport:
    """IoU of the mean-thresholded candidate against the glyph mask.

    Mean-value binarization keeps the score meaningful for both dark-on-light
    and light-on-dark stylizations.
    """
    require_same_size(candidate, original_mask)
    if original_mask.channels != 1:
        raise DimensionMismatch("original_mask must be single-channel")
    lum = luminance(candidate).data
    cand = lum > lum.mean()
    mask = original_mask.data >= 0.5
    union = np.logical_or(cand, mask).sum()
    if union == 0:
        iou = 1.0
    else:
        iou = float(np.logical_and(cand, mask).sum() / union)
    return ScoreReport.from_legibility(iou, threshold)


# ---------------------------------------------------------------------------
# Deterministic mock backend
# ---------------------------------------------------------------------------


def _value_noise(rng: np.random.Generator, height: int, width: int, cells: int = 8):
    grid = rng.random((cells + 1, cells + 1))
    ys = np.linspace(0.0, cells, height)
    xs = np.linspace(0.0, cells, width)
    y0 = np.minimum(ys.astype(int), cells - 1)
    x0 = np.minimum(xs.astype(int), cells - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g00 = grid[np.ix_(y0, x0)]
    g01 = grid[np.ix_(y0, x0 + 1)]
    g10 = grid[np.ix_(y0 + 1, x0)]
    g11 = grid[np.ix_(y0 + 1, x0 + 1)]
    top = g00 * (1 - fx) + g01 * fx
    bottom = g10 * (1 - fx) + g11 * fx
    return top * (1 - fy) + bottom * fy


def _prompt_color(prompt: str, shift: float = 0.0):
    hue = ((_prompt_hash(prompt) % 3600) / 3600.0 + shift) % 1.0
    return np.array(colorsys.hsv_to_rgb(hue, 0.55, 1.0))


class MockBackend:
    """Pure-function stand-in for the generative services.

    Every output is a deterministic function of the request, so golden-image
    tests can pin results by seed.
    """

    name = "mock"

    def stylize(self, req: StylizeRequest) -> Image:
        h, w = req.depth.height, req.depth.width
        rng = np.random.default_rng([req.seed & 0x7FFFFFFF, _prompt_hash(req.prompt) & 0x7FFFFFFF, 1])
        noise = 0.6 + 0.4 * _value_noise(rng, h, w)
        modulation = (1.0 - req.strength) + req.strength * req.depth.data
        color = _prompt_color(req.prompt)
        field = noise * modulation
        return Image(np.clip(field[:, :, None] * color[None, None, :], 0.0, 1.0))

    def background_texture(self, prompt: str, seed: int, height: int, width: int) -> Image:
        """The constant field texturize degrades to when control is empty."""
        rng = np.random.default_rng([seed & 0x7FFFFFFF, _prompt_hash(prompt) & 0x7FFFFFFF, 2])
        noise = 0.35 + 0.3 * _value_noise(rng, height, width, cells=6)
        color = _prompt_color(prompt, shift=0.45)
        return Image(np.clip(noise[:, :, None] * color[None, None, :], 0.0, 1.0))

    def texturize(self, req: TexturizeRequest) -> Image:
        h, w = req.control.height, req.control.width
        background = self.background_texture(req.prompt, req.seed, h, w)
        high = req.control.data >= 0.5
        if not high.any():
            return background
        dist = ndimage.distance_transform_edt(~high)
        band = dist <= TEXTURE_BAND_RADIUS_PX
        rng = np.random.default_rng([req.seed & 0x7FFFFFFF, _prompt_hash(req.prompt) & 0x7FFFFFFF, 3])
        noise = 0.55 + 0.45 * _value_noise(rng, h, w, cells=12)
        color = _prompt_color(req.prompt, shift=0.18)
        fg = np.clip(noise[:, :, None] * color[None, None, :], 0.0, 1.0)
        out = np.where(band[:, :, None], fg, background.data)
        return Image(out)

    def score(self, candidate: Image, mask: Image, threshold: float) -> ScoreReport:
        return legibility_score(candidate, mask, threshold)

    def plan_request(self, user_text: str):
        # No remote planner in mock mode; the rule-based fallback applies.
        return None


# ---------------------------------------------------------------------------
# Remote backend
# ---------------------------------------------------------------------------


class RemoteBackend:
    """HTTP client for the stylize/texturize/score/plan services."""

    name = "remote"

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(
            timeout=httpx.Timeout(TOTAL_TIMEOUT_S, connect=CONNECT_TIMEOUT_S)
        )

    def _post(self, path: str, body: dict) -> dict:
        url = self.base_url + path
        attempts = 0
        while True:
            attempts += 1
            try:
                response = self._client.post(url, json=body)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                if attempts <= 1:
                    continue  # one automatic retry on transient failures
                raise BackendUnavailable(str(exc), retryable=True) from exc
            break
        if response.status_code >= 500:
            raise BackendUnavailable(
                f"{path} -> {response.status_code}", retryable=True
            )
        if response.status_code >= 400:
            raise BackendUnavailable(
                f"{path} -> {response.status_code}", retryable=False
            )
        try:
            doc = response.json()
        except ValueError as exc:
            raise BackendMalformedReply(f"{path}: reply is not JSON") from exc
        if not isinstance(doc, dict):
            raise BackendMalformedReply(f"{path}: reply is not a JSON object")
        return doc

    def _post_image(self, path: str, body: dict) -> Image:
        doc = self._post(path, body)
        if "image_png_b64" not in doc or not isinstance(doc["image_png_b64"], str):
            raise BackendMalformedReply(f"{path}: missing image_png_b64")
        return image_from_b64(doc["image_png_b64"])

    def stylize(self, req: StylizeRequest) -> Image:
        return self._post_image(
            "/v1/stylize",
            {
                "prompt": req.prompt,
                "depth_png_b64": image_to_b64(req.depth),
                "seed": req.seed,
                "strength": req.strength,
            },
        )

    def texturize(self, req: TexturizeRequest) -> Image:
        return self._post_image(
            "/v1/texturize",
            {
                "prompt": req.prompt,
                "control_png_b64": image_to_b64(req.control),
                "seed": req.seed,
            },
        )

    def score(self, candidate: Image, mask: Image, threshold: float) -> ScoreReport:
        doc = self._post(
            "/v1/score",
            {
                "image_png_b64": image_to_b64(candidate),
                "mask_png_b64": image_to_b64(mask),
            },
        )
        if "legibility" not in doc or not isinstance(doc["legibility"], (int, float)):
            raise BackendMalformedReply("/v1/score: missing legibility")
        value = float(doc["legibility"])
        if not 0.0 <= value <= 1.0 or not np.isfinite(value):
            raise BackendMalformedReply(f"/v1/score: legibility {value} out of range")
        return ScoreReport.from_legibility(value, threshold)

    def plan_request(self, user_text: str):
        return self._post("/v1/plan", {"user_text": user_text})


def make_backend(config: str):
    """'mock' or a http(s) base URL."""
    if config == "mock":
        return MockBackend()
    if config.startswith("http://") or config.startswith("https://"):
        return RemoteBackend(config)
    raise ValueError(f"backend config {config!r} is neither 'mock' nor a URL")
