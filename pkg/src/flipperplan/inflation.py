"""
Inflate an elevation map by the wheel radius.

Every ground cell stamps a hemisphere of radius ``r`` on top of its height;
the inflated map is the pointwise maximum of all stamps. A line skeleton
resting on the inflated surface then sits exactly one wheel radius from the
terrain, which is what the body-vs-ground contact check needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .terrain import ElevationMap


@dataclass(frozen=True, eq=False)
class InflatedMap(ElevationMap):
    source_radius: float = 0.0

    def _extra_fields(self):
        return (self.source_radius,)


def kernel_value(r: float, h: float, dx: float, dy: float) -> float:
    """Hemispherical kernel of radius ``r`` raised by ``h``, zero off its disc."""
    rad = r * r - dx * dx - dy * dy
    if rad < 0.0:
        return 0.0
    return h + math.sqrt(rad)


def kernel_stamp(r: float, resolution: float) -> list[tuple[int, int, float]]:
    """Cell offsets ``(di, dj, sqrt(r^2 - d^2))`` covering the kernel disc."""
    n = int(math.ceil(r / resolution))
    stamp = []
    for dj in range(-n, n + 1):
        for di in range(-n, n + 1):
            dx = di * resolution
            dy = dj * resolution
            if dx * dx + dy * dy <= r * r:
                stamp.append((di, dj, kernel_value(r, 0.0, dx, dy)))
    return stamp


def inflate(m: ElevationMap, r: float) -> InflatedMap:
    """Max-convolve the heights with the wheel kernel.

    Border cells only see in-bounds contributors. One shifted ``np.maximum``
    per stamp offset, O(N*K) overall.
    """
    if not r > 0:
        raise ValueError(f"inflation radius must be > 0, got {r}")
    if r < m.resolution:
        raise ValueError(f"radius {r} is below one cell ({m.resolution})")
    h = m.heights
    ny, nx = h.shape
    out = np.full_like(h, -np.inf)
    for di, dj, lift in kernel_stamp(r, m.resolution):
        # output (j, i) receives source (j - dj, i - di)
        oj0, oj1 = max(dj, 0), ny + min(dj, 0)
        oi0, oi1 = max(di, 0), nx + min(di, 0)
        if oj0 >= oj1 or oi0 >= oi1:
            continue
        src = h[oj0 - dj:oj1 - dj, oi0 - di:oi1 - di]
        np.maximum(out[oj0:oj1, oi0:oi1], src + lift, out=out[oj0:oj1, oi0:oi1])
    return InflatedMap(m.width_cells, m.height_cells, m.resolution, m.origin, out,
                       source_radius=float(r))
