"""Independent reference implementations used to check the library.

Everything here is deliberately brute force and shares no code with the
package: de Casteljau point evaluation, O(n^2) distance transforms,
explicit convolution loops, central finite differences.
"""

from __future__ import annotations

import numpy as np


def de_casteljau(points, t: float):
    """Evaluate a Bezier curve of any degree by repeated interpolation."""
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    while len(pts) > 1:
        pts = [(1.0 - t) * a + t * b for a, b in zip(pts, pts[1:])]
    return pts[0]


def quad_point(q0, q1, q2, t: float):
    return de_casteljau([q0, q1, q2], t)


def cubic_point(p0, p1, p2, p3, t: float):
    return de_casteljau([p0, p1, p2, p3], t)


def central_differences(fn, x: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Gradient of scalar fn by central differences, one coordinate at a time."""
    grad = np.zeros_like(x)
    for i in range(x.size):
        forward = x.copy()
        forward[i] += h
        backward = x.copy()
        backward[i] -= h
        grad[i] = (fn(forward) - fn(backward)) / (2.0 * h)
    return grad


def brute_distance_transform(interior: np.ndarray) -> np.ndarray:
    """Distance from each interior pixel to the nearest exterior pixel.

    Pixels beyond the array edge count as exterior.  O(n^2) pairwise scan.
    """
    h, w = interior.shape
    ys, xs = np.nonzero(~interior)
    exterior = [(y, x) for y, x in zip(ys, xs)]
    # border ghosts one step outside the canvas
    for x in range(w):
        exterior.append((-1, x))
        exterior.append((h, x))
    for y in range(h):
        exterior.append((y, -1))
        exterior.append((y, w))
    ext = np.asarray(exterior, dtype=np.float64)
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            if interior[y, x]:
                out[y, x] = np.sqrt(((ext - (y, x)) ** 2).sum(axis=1).min())
    return out


SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T


def brute_sobel_magnitude(lum: np.ndarray) -> np.ndarray:
    """Explicit-loop Sobel with edge clamping, normalized to peak 1."""
    h, w = lum.shape
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            ax = 0.0
            ay = 0.0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    ax += SOBEL_X[dy + 1, dx + 1] * lum[yy, xx]
                    ay += SOBEL_Y[dy + 1, dx + 1] * lum[yy, xx]
            gx[y, x] = ax
            gy[y, x] = ay
    mag = np.sqrt(gx * gx + gy * gy)
    peak = mag.max()
    return mag / peak if peak > 0 else mag


def brute_box_blur(data: np.ndarray, radius: float) -> np.ndarray:
    """Edge-clamped box blur by explicit window gathering."""
    r = int(round(radius))
    h, w = data.shape
    out = np.zeros_like(data)
    m = 2 * r + 1
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    acc += data[yy, xx]
            out[y, x] = acc / (m * m)
    return out


def random_closed_params(rng: np.random.Generator, n_contours: int,
                         canvas: float = 48.0, segment_range=(3, 6),
                         control_noise: float = 0.03):
    """Random well-formed flat parameter vectors (exactly closed contours)."""
    from wordart.shapeparam import ParamVector

    sizes = []
    vals = []
    margin = 0.3 * canvas
    for _ in range(n_contours):
        m = int(rng.integers(segment_range[0], segment_range[1]))
        sizes.append(m)
        center = rng.uniform(margin, canvas - margin, size=2)
        radius = rng.uniform(0.12 * canvas, 0.3 * canvas)
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=m))
        anchors = center + radius * np.stack(
            [np.cos(angles), np.sin(angles)], axis=1
        )
        for k in range(m):
            p0 = anchors[k]
            p3 = anchors[(k + 1) % m]
            p1 = p0 + (p3 - p0) / 3.0 + rng.normal(0.0, control_noise * canvas, 2)
            p2 = p0 + 2.0 * (p3 - p0) / 3.0 + rng.normal(0.0, control_noise * canvas, 2)
            vals.extend([*p0, *p1, *p2, *p3])
    return ParamVector(np.asarray(vals), tuple(sizes))
