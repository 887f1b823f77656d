"""Slow reference implementations the fast code is checked against."""

import math

import numpy as np


def brute_inflate(h, res, r):
    """All-pairs maximum of the hemispherical kernel, no stamp, no shifting."""
    ny, nx = h.shape
    out = np.empty_like(h)
    for j in range(ny):
        for i in range(nx):
            best = -math.inf
            for jj in range(ny):
                dy = (j - jj) * res
                for ii in range(nx):
                    dx = (i - ii) * res
                    if dx * dx + dy * dy <= r * r:
                        v = h[jj, ii] + math.sqrt(r * r - dx * dx - dy * dy)
                        if v > best:
                            best = v
            out[j, i] = best
    return out


def brute_inflate_np(h, res, r):
    """Vectorized all-pairs version for larger maps (same arithmetic)."""
    ny, nx = h.shape
    J, I = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    src_j = J.ravel()
    src_i = I.ravel()
    src_h = h.ravel()
    out = np.empty_like(h)
    for j in range(ny):
        dy = (j - src_j) * res
        for i in range(nx):
            dx = (i - src_i) * res
            d2 = dx * dx + dy * dy
            ok = d2 <= r * r
            out[j, i] = np.max(src_h[ok] + np.sqrt(r * r - dx[ok] * dx[ok] - dy[ok] * dy[ok]))
    return out


def axis_angle(axis, angle):
    """Rotation matrix via the matrix exponential of the skew matrix."""
    from scipy.linalg import expm
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return expm(angle * K)


def dense_sweep_contact(clear_fn, start, stop, step=1e-3):
    """First angle on a uniform grid where clear_fn drops to <= 0."""
    n = int(math.ceil(abs(stop - start) / step))
    for k in range(n + 1):
        a = start + math.copysign(k * step, stop - start)
        if clear_fn(a) <= 0.0:
            return a
    return None


def bilinear(h, res, origin, x, y):
    """Scalar bilinear interpolation written out cell by cell."""
    fx = (x - origin[0]) / res
    fy = (y - origin[1]) / res
    i = min(int(math.floor(fx)), h.shape[1] - 2)
    j = min(int(math.floor(fy)), h.shape[0] - 2)
    tx, ty = fx - i, fy - j
    return (h[j, i] * (1 - tx) * (1 - ty) + h[j, i + 1] * tx * (1 - ty)
            + h[j + 1, i] * (1 - tx) * ty + h[j + 1, i + 1] * tx * ty)
