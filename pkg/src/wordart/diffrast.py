"""Differentiable rasterization of filled Bezier outlines.

Forward pass: cubics are flattened to closed polyline rings, every sample
point gets a signed distance to the nearest ring edge (negative inside by
the even-odd rule), and coverage is the logistic sigmoid of -distance/tau,
averaged over a supersampling grid.  Backward pass: the chain rule runs
through sigmoid -> nearest-edge distance -> ring vertices -> Bezier control
points, treating the inside/outside sign and the nearest-edge identity as
locally constant.

Ring junction vertices are the mean of the two duplicated endpoint copies
in the parameter vector.  For well-formed (closed) contours that mean
equals either copy, so the rendering is unchanged, but the derivative
splits evenly between the copies and the ring cannot tear when a single
coordinate is perturbed - which is exactly what a finite-difference probe
does.

Everything is plain numpy; sample-by-edge work is chunked to bound memory,
and the chunk layout depends only on the problem size, so results are
reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch
from .image import Image
from .shapeparam import ParamVector

# Cap on sample-by-edge matrix elements per chunk.  Small enough that a
# chunk's working set stays cache-resident (~1 MB per temporary array).
_CHUNK_BUDGET = 1 << 17


@dataclass(frozen=True)
class RasterConfig:
    width: int
    height: int
    smoothing_tau: float = 1.0
    subdiv: int = 16
    supersample: int = 2

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("canvas dimensions must be positive")
        if self.smoothing_tau <= 0:
            raise ValueError("smoothing_tau must be positive")
        if self.subdiv < 2:
            raise ValueError("subdiv must be at least 2")
        if self.supersample < 1:
            raise ValueError("supersample must be at least 1")


@dataclass(frozen=True)
class ParamGradient:
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("gradient entries must be finite")
        object.__setattr__(self, "values", arr)


from functools import lru_cache


@lru_cache(maxsize=32)
def _bernstein(subdiv: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, subdiv + 1)
    u = 1.0 - t
    basis = np.stack([u**3, 3 * u * u * t, 3 * u * t * t, t**3], axis=1)
    basis.setflags(write=False)
    return basis


def _segment_vertices(params: ParamVector, subdiv: int) -> np.ndarray:
    """Sample every cubic at t = k/subdiv.  Shape (nseg, subdiv+1, 2)."""
    ctrl = params.values.reshape(-1, 4, 2)
    basis = _bernstein(subdiv)
    return np.einsum("kc,scd->skd", basis, ctrl)


def flatten(params: ParamVector, subdiv: int) -> list[np.ndarray]:
    """Per-contour polygons; each cubic contributes its subdiv+1 samples."""
    verts = _segment_vertices(params, subdiv)
    polygons = []
    seg = 0
    for size in params.contour_sizes:
        polygons.append(verts[seg : seg + size].reshape(-1, 2))
        seg += size
    return polygons


class _RingTopology:
    """Index plumbing from segment samples to closed contour rings.

    Ring vertex r is w1[r] * flat[idx1[r]] + w2[r] * flat[idx2[r]] where
    ``flat`` is the (nseg*(subdiv+1), 2) segment-sample array.  Inner
    samples have weight (1, 0); junctions average the adjacent segments'
    shared endpoint samples with (0.5, 0.5).
    """

    def __init__(self, contour_sizes, subdiv: int):
        idx1, idx2, w1 = [], [], []
        ring_next = []
        base_vertex = 0
        seg_base = 0
        for size in contour_sizes:
            ring_len = size * subdiv
            for local in range(size):
                s = seg_base + local
                prev = seg_base + (local - 1) % size
                idx1.append(s * (subdiv + 1))
                idx2.append(prev * (subdiv + 1) + subdiv)
                w1.append(0.5)
                for k in range(1, subdiv):
                    idx1.append(s * (subdiv + 1) + k)
                    idx2.append(s * (subdiv + 1) + k)
                    w1.append(1.0)
            for r in range(ring_len):
                ring_next.append(base_vertex + (r + 1) % ring_len)
            base_vertex += ring_len
            seg_base += size
        self.idx1 = np.asarray(idx1, dtype=np.int64)
        self.idx2 = np.asarray(idx2, dtype=np.int64)
        self.w1 = np.asarray(w1)
        self.w2 = 1.0 - self.w1
        self.edge_end = np.asarray(ring_next, dtype=np.int64)

    def ring_vertices(self, seg_verts: np.ndarray) -> np.ndarray:
        flat = seg_verts.reshape(-1, 2)
        return (
            self.w1[:, None] * flat[self.idx1]
            + self.w2[:, None] * flat[self.idx2]
        )

    def scatter_to_segments(self, grad_ring: np.ndarray, nseg: int, subdiv: int):
        flat = np.zeros((nseg * (subdiv + 1), 2))
        np.add.at(flat, self.idx1, self.w1[:, None] * grad_ring)
        np.add.at(flat, self.idx2, self.w2[:, None] * grad_ring)
        return flat.reshape(nseg, subdiv + 1, 2)


@lru_cache(maxsize=32)
def _sample_grid_cached(width: int, height: int, supersample: int):
    fx = (np.arange(width * supersample) + 0.5) / supersample
    fy = (np.arange(height * supersample) + 0.5) / supersample
    px = np.tile(fx, fy.size)
    py = np.repeat(fy, fx.size)
    px.setflags(write=False)
    py.setflags(write=False)
    return px, py


def _sample_grid(cfg: RasterConfig):
    return _sample_grid_cached(cfg.width, cfg.height, cfg.supersample)


def _signed_coverage_fields(px, py, ax, ay, bx, by, tau):
    """Per-sample coverage and signed distance for a block of samples.

    The squared point-to-segment distance uses the algebraic form
    q - t*(2*dot - t*len2) so only a handful of sample-by-edge temporaries
    are needed; the even-odd parity test reuses the same dx/dy arrays.
    """
    abx = bx - ax
    aby = by - ay
    len2 = abx * abx + aby * aby
    valid = len2 > 0.0
    safe_len2 = np.where(valid, len2, 1.0)

    dx = px[:, None] - ax[None, :]
    dy = py[:, None] - ay[None, :]

    dot = dx * abx[None, :]
    dot += dy * aby[None, :]
    t = dot / safe_len2[None, :]
    np.clip(t, 0.0, 1.0, out=t)
    t *= valid[None, :]

    # d2 = |P-A|^2 - t*(2*dot - t*len2); clamp tiny negative rounding.
    d2 = t * len2[None, :]
    d2 -= 2.0 * dot
    d2 *= t
    d2 += dx * dx
    d2 += dy * dy
    np.maximum(d2, 0.0, out=d2)

    dmin = np.sqrt(d2.min(axis=1))

    # +x ray crossings: ay > py is dy < 0; by > py is dy < aby.
    straddles = (dy < 0.0) != (dy < aby[None, :])
    slope = abx / np.where(aby == 0.0, 1.0, aby)  # unused where aby == 0
    crosses = straddles & (dy * slope[None, :] > dx)
    inside = (np.count_nonzero(crosses, axis=1) & 1).astype(bool)

    sign = np.where(inside, -1.0, 1.0)
    coverage = expit(-sign * dmin / tau)
    return coverage, dmin, sign


def _render_fields(params: ParamVector, cfg: RasterConfig):
    """Per-sample coverage over the whole canvas, chunked over samples."""
    seg_verts = _segment_vertices(params, cfg.subdiv)
    topo = _RingTopology(params.contour_sizes, cfg.subdiv)
    ring = topo.ring_vertices(seg_verts)
    ax, ay = ring[:, 0], ring[:, 1]
    bx, by = ring[topo.edge_end, 0], ring[topo.edge_end, 1]

    px, py = _sample_grid(cfg)
    n_samples = px.size
    n_edges = ax.size
    chunk = max(1, _CHUNK_BUDGET // max(1, n_edges))

    coverage = np.empty(n_samples)
    for lo in range(0, n_samples, chunk):
        hi = min(lo + chunk, n_samples)
        cov, _, _ = _signed_coverage_fields(
            px[lo:hi], py[lo:hi], ax, ay, bx, by, cfg.smoothing_tau
        )
        coverage[lo:hi] = cov
    return {"coverage": coverage, "num_segments": seg_verts.shape[0]}


def _pool(fine: np.ndarray, cfg: RasterConfig) -> np.ndarray:
    ss = cfg.supersample
    shaped = fine.reshape(cfg.height, ss, cfg.width, ss)
    return shaped.mean(axis=(1, 3))


def rasterize(params: ParamVector, cfg: RasterConfig) -> Image:
    """Render the filled outline as a soft-coverage grayscale image.

    Zero contours is not an error: the result is all zeros and carries an
    ``empty-shape`` flag.
    """
    if params.num_segments == 0:
        return Image(np.zeros((cfg.height, cfg.width)), flags=("empty-shape",))
    fields = _render_fields(params, cfg)
    fine = fields["coverage"].reshape(
        cfg.height * cfg.supersample, cfg.width * cfg.supersample
    )
    return Image(_pool(fine, cfg))


# Edges whose distance is within this relative margin of the minimum count
# as tied; the gradient splits evenly among them.  Regular shapes on a
# regular sample grid produce exact ties (e.g. along a square's diagonals),
# where a central finite difference of the min sees the branch average.
_TIE_RTOL = 1e-9


def loss_gradient(
    params: ParamVector, cfg: RasterConfig, dL_dimage
) -> ParamGradient:
    """Pull an image-space loss gradient back to the control points.

    ``dL_dimage`` is a single-channel Image or a plain (h, w) float array;
    gradients are signed, so the array form has no [0, 1] restriction.
    """
    grad_img = dL_dimage.data if isinstance(dL_dimage, Image) else np.asarray(
        dL_dimage, dtype=np.float64
    )
    if grad_img.ndim != 2 or grad_img.shape != (cfg.height, cfg.width):
        raise DimensionMismatch(
            f"dL_dimage shape {grad_img.shape} vs config "
            f"{cfg.height}x{cfg.width} single-channel"
        )
    if params.num_segments == 0:
        return ParamGradient(np.zeros_like(params.values))

    ss = cfg.supersample
    subdiv = cfg.subdiv
    tau = cfg.smoothing_tau

    seg_verts = _segment_vertices(params, subdiv)
    nseg = seg_verts.shape[0]
    topo = _RingTopology(params.contour_sizes, subdiv)
    ring = topo.ring_vertices(seg_verts)
    ax, ay = ring[:, 0], ring[:, 1]
    bx, by = ring[topo.edge_end, 0], ring[topo.edge_end, 1]
    abx, aby = bx - ax, by - ay
    len2 = abx * abx + aby * aby
    safe_len2 = np.where(len2 > 0.0, len2, 1.0)

    px, py = _sample_grid(cfg)
    w = np.repeat(np.repeat(grad_img, ss, axis=0), ss, axis=1).reshape(-1)
    w = w / (ss * ss)

    n_samples = px.size
    n_edges = ax.size
    chunk = max(1, _CHUNK_BUDGET // max(1, n_edges))
    grad_ring = np.zeros((topo.idx1.size, 2))

    for lo in range(0, n_samples, chunk):
        hi = min(lo + chunk, n_samples)
        cpx, cpy, cw = px[lo:hi], py[lo:hi], w[lo:hi]

        dx = cpx[:, None] - ax[None, :]
        dy = cpy[:, None] - ay[None, :]
        t = (dx * abx[None, :] + dy * aby[None, :]) / safe_len2[None, :]
        np.clip(t, 0.0, 1.0, out=t)
        t *= (len2 > 0.0)[None, :]
        rx = dx - t * abx[None, :]
        ry = dy - t * aby[None, :]
        d2 = rx * rx + ry * ry

        d2min = d2.min(axis=1)
        dmin = np.sqrt(d2min)

        straddles = (ay[None, :] > cpy[:, None]) != (by[None, :] > cpy[:, None])
        dy_edge = np.where(aby == 0.0, 1.0, aby)
        xint = ax[None, :] + (cpy[:, None] - ay[None, :]) * (abx / dy_edge)[None, :]
        inside = np.count_nonzero(straddles & (cpx[:, None] < xint), axis=1) % 2 == 1
        sign = np.where(inside, -1.0, 1.0)

        g = expit(-sign * dmin / tau)
        dcov_dd = g * (1.0 - g) * (-sign / tau)

        tied = d2 <= (d2min * (1.0 + _TIE_RTOL))[:, None]
        n_tied = np.count_nonzero(tied, axis=1)

        safe_d = np.where(dmin > 0.0, dmin, 1.0)
        coef_sample = cw * dcov_dd / (safe_d * n_tied)
        coef_sample[dmin == 0.0] = 0.0

        rows, cols = np.nonzero(tied)
        coef = coef_sample[rows]
        gx = coef * rx[rows, cols]
        gy = coef * ry[rows, cols]
        t_pair = t[rows, cols]
        ga = np.stack([-(1.0 - t_pair) * gx, -(1.0 - t_pair) * gy], axis=1)
        gb = np.stack([-t_pair * gx, -t_pair * gy], axis=1)
        np.add.at(grad_ring, cols, ga)
        np.add.at(grad_ring, topo.edge_end[cols], gb)

    grad_seg = topo.scatter_to_segments(grad_ring, nseg, subdiv)
    basis = _bernstein(subdiv)
    grad_ctrl = np.einsum("kc,skd->scd", basis, grad_seg)
    return ParamGradient(grad_ctrl.reshape(-1))
