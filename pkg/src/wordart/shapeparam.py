"""Glyph outline <-> flat optimization parameters, and region selection.

A ParamVector stores 8 reals per cubic segment (x, y of p0..p3) in contour
order.  Endpoints shared by consecutive segments appear twice; the closure
constraint is restored after every update by averaging the two copies.
Region selection produces a FreedomMask saying which coordinates the
optimizer may move.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .errors import BadPolicy, LengthMismatch
from .fontparse import CubicSegment, GlyphOutline, make_contour

MODE_ALL = "all"
MODE_CONTOUR_INDICES = "contour_indices"
MODE_SALIENCY_RATIO = "saliency_ratio"
_MODES = (MODE_ALL, MODE_CONTOUR_INDICES, MODE_SALIENCY_RATIO)


@dataclass(frozen=True)
class ParamVector:
    """Flat control-point coordinates plus the contour segment counts."""

    values: np.ndarray
    contour_sizes: tuple[int, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size % 8 != 0:
            raise ValueError("ParamVector length must be a multiple of 8")
        if not np.all(np.isfinite(vals)):
            raise ValueError("ParamVector entries must be finite")
        if sum(self.contour_sizes) * 8 != vals.size:
            raise ValueError("contour_sizes inconsistent with vector length")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "contour_sizes", tuple(int(n) for n in self.contour_sizes))

    @property
    def num_segments(self) -> int:
        return self.values.size // 8

    def to_jsonable(self) -> dict:
        return {
            "values": self.values.tolist(),
            "contour_sizes": list(self.contour_sizes),
        }

    @staticmethod
    def from_jsonable(doc: dict) -> "ParamVector":
        return ParamVector(
            np.asarray(doc["values"], dtype=np.float64),
            tuple(doc["contour_sizes"]),
        )


@dataclass(frozen=True)
class FreedomMask:
    free: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.free, dtype=bool)
        object.__setattr__(self, "free", arr)

    def to_jsonable(self) -> list[bool]:
        return [bool(v) for v in self.free]


@dataclass(frozen=True)
class RegionPolicy:
    mode: str = MODE_SALIENCY_RATIO
    contour_indices: tuple[int, ...] = field(default_factory=tuple)
    deform_ratio: float = 0.5

    def __post_init__(self):
        if self.mode not in _MODES:
            raise BadPolicy(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.deform_ratio <= 1.0:
            raise BadPolicy(f"deform_ratio {self.deform_ratio} outside [0, 1]")
        object.__setattr__(
            self, "contour_indices", tuple(int(i) for i in self.contour_indices)
        )


def to_params(outline: GlyphOutline) -> ParamVector:
    values = []
    sizes = []
    for contour in outline.contours:
        sizes.append(len(contour.segments))
        for seg in contour.segments:
            for p in seg.points():
                values.extend(p)
    return ParamVector(np.asarray(values, dtype=np.float64), tuple(sizes))


def from_params(
    params: ParamVector, em_size_px: float, advance_px: float = 0.0
) -> GlyphOutline:
    """Rebuild an outline; orientation flags are re-derived from geometry."""
    vals = params.values
    contours = []
    seg_idx = 0
    for size in params.contour_sizes:
        segs = []
        for _ in range(size):
            base = seg_idx * 8
            pts = [
                (vals[base + 2 * k], vals[base + 2 * k + 1]) for k in range(4)
            ]
            segs.append(CubicSegment(*pts))
            seg_idx += 1
        contours.append(make_contour(segs))
    return GlyphOutline(tuple(contours), em_size_px, advance_px)


def _point_groups(contour_sizes):
    """Structurally-shared point groups, as lists of global point indices.

    Point index = 4 * segment + local (local 0..3).  Junctions between
    consecutive segments of one contour (including the wrap-around) pair the
    trailing p3 with the leading p0; inner controls are singletons.
    """
    groups = []
    seg_base = 0
    for size in contour_sizes:
        for k in range(size):
            a = 4 * (seg_base + k) + 3
            b = 4 * (seg_base + (k + 1) % size) + 0
            groups.append([b, a] if b < a else [a, b])
        for k in range(size):
            groups.append([4 * (seg_base + k) + 1])
            groups.append([4 * (seg_base + k) + 2])
        seg_base += size
    return groups


def select_region(outline: GlyphOutline, policy: RegionPolicy) -> FreedomMask:
    """Decide which coordinates may deform.

    ``contour_indices`` frees whole contours.  ``all`` and ``saliency_ratio``
    rank distinct control points by distance from the centroid (farthest
    first, ties to the lower point index) and free the top
    ``ceil(deform_ratio * n_points)``.
    """
    params = to_params(outline)
    n = params.values.size
    free = np.zeros(n, dtype=bool)

    if policy.mode == MODE_CONTOUR_INDICES:
        num_contours = len(params.contour_sizes)
        for idx in policy.contour_indices:
            if not 0 <= idx < num_contours:
                raise BadPolicy(f"contour index {idx} out of range")
        seg_base = 0
        for ci, size in enumerate(params.contour_sizes):
            if ci in policy.contour_indices:
                free[seg_base * 8 : (seg_base + size) * 8] = True
            seg_base += size
        return FreedomMask(free)

    groups = _point_groups(params.contour_sizes)
    if not groups:
        return FreedomMask(free)
    pts = params.values.reshape(-1, 2)
    rep = np.array([g[0] for g in groups])
    positions = pts[rep]
    centroid = positions.mean(axis=0)
    dist = np.hypot(*(positions - centroid).T)
    order = sorted(range(len(groups)), key=lambda i: (-dist[i], groups[i][0]))
    take = ceil(policy.deform_ratio * len(groups))
    for gi in order[:take]:
        for point in groups[gi]:
            free[2 * point] = True
            free[2 * point + 1] = True
    return FreedomMask(free)


def apply_update(
    params: ParamVector, mask: FreedomMask, delta: np.ndarray
) -> ParamVector:
    """One optimizer write: add delta on free coordinates, re-close contours.

    Shared-endpoint duplicates are re-synchronized by averaging their two
    updated copies; anchored coordinates come back bit-identical.
    """
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != params.values.shape or mask.free.shape != params.values.shape:
        raise LengthMismatch(
            f"params {params.values.size}, mask {mask.free.size}, delta {delta.size}"
        )
    vals = params.values.copy()
    vals[mask.free] += delta[mask.free]

    for group in _point_groups(params.contour_sizes):
        if len(group) != 2:
            continue
        a, b = group
        for axis in (0, 1):
            ia, ib = 2 * a + axis, 2 * b + axis
            if mask.free[ia]:
                m = 0.5 * (vals[ia] + vals[ib])
                vals[ia] = m
                vals[ib] = m
    return ParamVector(vals, params.contour_sizes)
