"""
2.5D elevation maps: the grid type, ascii-grid/CSV I/O and synthetic
step / ramp / inverse-ramp obstacle generators.

Grid layout: ``heights[j, i]`` is the height of the cell whose center is at
``(origin[0] + i * resolution, origin[1] + j * resolution)``. Row ``j``
runs along y, column ``i`` along x.
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MapFormatError, OutOfMapError

# bounds slack, in cells, for points landing on the outermost cell centers
_EDGE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class ElevationMap:
    width_cells: int
    height_cells: int
    resolution: float
    origin: tuple[float, float]
    heights: np.ndarray

    def __post_init__(self):
        if not self.resolution > 0:
            raise MapFormatError(f"resolution must be > 0, got {self.resolution}")
        h = np.array(self.heights, dtype=np.float64)
        if h.size != self.width_cells * self.height_cells:
            raise MapFormatError(
                f"expected {self.width_cells}x{self.height_cells} heights, got {h.size}")
        if self.width_cells < 2 or self.height_cells < 2:
            raise MapFormatError("map needs at least 2x2 cells")
        h = h.reshape(self.height_cells, self.width_cells)
        if not np.all(np.isfinite(h)):
            raise MapFormatError("non-finite height value")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "resolution", float(self.resolution))

    def __eq__(self, other):
        if not isinstance(other, ElevationMap) or type(self) is not type(other):
            return NotImplemented
        return (self.width_cells == other.width_cells
                and self.height_cells == other.height_cells
                and self.resolution == other.resolution
                and self.origin == other.origin
                and np.array_equal(self.heights, other.heights)
                and self._extra_fields() == other._extra_fields())

    __hash__ = None

    def _extra_fields(self):
        return ()

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + np.arange(self.width_cells) * self.resolution

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + np.arange(self.height_cells) * self.resolution

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the cell-center lattice."""
        return (self.origin[0], self.origin[0] + (self.width_cells - 1) * self.resolution,
                self.origin[1], self.origin[1] + (self.height_cells - 1) * self.resolution)

    def contains(self, x, y) -> np.ndarray:
        fx = (np.asarray(x, dtype=float) - self.origin[0]) / self.resolution
        fy = (np.asarray(y, dtype=float) - self.origin[1]) / self.resolution
        return ((fx >= -_EDGE_SLACK) & (fx <= self.width_cells - 1 + _EDGE_SLACK)
                & (fy >= -_EDGE_SLACK) & (fy <= self.height_cells - 1 + _EDGE_SLACK))

    def sample(self, x, y):
        """Bilinearly interpolated value at world (x, y); arrays broadcast."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fx = (x - self.origin[0]) / self.resolution
        fy = (y - self.origin[1]) / self.resolution
        w1 = self.width_cells - 1
        h1 = self.height_cells - 1
        if (np.any(fx < -_EDGE_SLACK) or np.any(fx > w1 + _EDGE_SLACK)
                or np.any(fy < -_EDGE_SLACK) or np.any(fy > h1 + _EDGE_SLACK)):
            bad = ~self.contains(x, y)
            bx = np.broadcast_to(x, bad.shape)[bad].flat[0]
            by = np.broadcast_to(y, bad.shape)[bad].flat[0]
            raise OutOfMapError(f"point ({bx:.4f}, {by:.4f}) outside map extent {self.extent}")
        i = np.clip(np.floor(fx).astype(np.intp), 0, w1 - 1)
        j = np.clip(np.floor(fy).astype(np.intp), 0, h1 - 1)
        tx = fx - i
        ty = fy - j
        hm = self.heights
        v00 = hm[j, i]
        v10 = hm[j, i + 1]
        v01 = hm[j + 1, i]
        v11 = hm[j + 1, i + 1]
        return (v00 * (1.0 - tx) + v10 * tx) * (1.0 - ty) + (v01 * (1.0 - tx) + v11 * tx) * ty

    def digest(self) -> str:
        """Content hash over grid geometry and heights (hex sha256, 16 chars)."""
        h = hashlib.sha256()
        h.update(repr((self.width_cells, self.height_cells, self.resolution,
                       self.origin) + self._extra_fields()).encode())
        h.update(np.ascontiguousarray(self.heights).tobytes())
        return h.hexdigest()[:16]

    def mirrored_y(self) -> "ElevationMap":
        """Reflection across the x-z plane. Only exact for maps centered on y=0."""
        _check_centered(self)
        return _replace_heights(self, self.heights[::-1, :])


def _check_centered(m: ElevationMap):
    y_min, y_max = m.extent[2], m.extent[3]
    if abs(y_min + y_max) > 1e-9:
        raise ValueError("y-mirroring needs a map centered on y=0")


def _replace_heights(m: ElevationMap, heights: np.ndarray) -> ElevationMap:
    if isinstance(m, _inflated_type()):
        return type(m)(m.width_cells, m.height_cells, m.resolution, m.origin,
                       np.array(heights), source_radius=m.source_radius)
    return ElevationMap(m.width_cells, m.height_cells, m.resolution, m.origin, np.array(heights))


def _inflated_type():
    from .inflation import InflatedMap
    return InflatedMap


# ---------------------------------------------------------------------------
# file I/O


def _format_header(m: ElevationMap) -> str:
    head = (f"width={m.width_cells} height={m.height_cells} resolution={m.resolution!r} "
            f"origin={m.origin[0]!r},{m.origin[1]!r}")
    if isinstance(m, _inflated_type()):
        head += f" source_radius={m.source_radius!r}"
    return head


def _parse_header(text: str, lineno: int) -> dict:
    fields = {}
    for tok in text.split():
        if "=" not in tok:
            raise MapFormatError(f"bad header token {tok!r}", lineno)
        key, val = tok.split("=", 1)
        fields[key] = val
    required = {"width", "height", "resolution", "origin"}
    missing = required - fields.keys()
    if missing:
        raise MapFormatError(f"header missing {sorted(missing)}", lineno)
    unknown = fields.keys() - required - {"source_radius"}
    if unknown:
        raise MapFormatError(f"unknown header fields {sorted(unknown)}", lineno)
    try:
        ox, oy = fields["origin"].split(",")
        out = {
            "width": int(fields["width"]),
            "height": int(fields["height"]),
            "resolution": float(fields["resolution"]),
            "origin": (float(ox), float(oy)),
        }
        if "source_radius" in fields:
            out["source_radius"] = float(fields["source_radius"])
    except ValueError as exc:
        raise MapFormatError(f"bad header value: {exc}", lineno) from None
    return out


def _guess_format(path) -> str:
    return "csv" if str(path).lower().endswith(".csv") else "ascii-grid"


def load_map(path, format: str | None = None) -> ElevationMap:
    """Read a map written by :func:`save_map`.

    Returns an :class:`~flipperplan.inflation.InflatedMap` when the header
    carries ``source_radius``.
    """
    fmt = format or _guess_format(path)
    if fmt not in ("ascii-grid", "csv"):
        raise ValueError(f"unknown map format {fmt!r}")
    sep = "," if fmt == "csv" else None
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()

    header = None
    rows = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if header is None:
            if fmt == "csv":
                if not line.startswith("#"):
                    raise MapFormatError("csv map must start with a '#' header line", lineno)
                line = line[1:]
            header = _parse_header(line, lineno)
            continue
        if fmt == "csv" and line.startswith("#"):
            continue
        parts = line.split(sep)
        if len(parts) != header["width"]:
            raise MapFormatError(
                f"row has {len(parts)} entries, expected width {header['width']}", lineno)
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise MapFormatError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise MapFormatError("non-finite height value", lineno)
        rows.append(row)
    if header is None:
        raise MapFormatError("empty map file", 1)
    if len(rows) != header["height"]:
        raise MapFormatError(f"found {len(rows)} rows, expected height {header['height']}",
                             len(lines))

    heights = np.array(rows, dtype=np.float64)
    if "source_radius" in header:
        return _inflated_type()(header["width"], header["height"], header["resolution"],
                                header["origin"], heights, source_radius=header["source_radius"])
    return ElevationMap(header["width"], header["height"], header["resolution"],
                        header["origin"], heights)


def dumps_map(m: ElevationMap, format: str = "ascii-grid") -> str:
    if format not in ("ascii-grid", "csv"):
        raise ValueError(f"unknown map format {format!r}")
    sep = "," if format == "csv" else " "
    out = [("# " if format == "csv" else "") + _format_header(m)]
    for row in m.heights:
        out.append(sep.join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def atomic_write_text(path, text: str):
    """Write to a sibling temp file and rename, so failures leave nothing behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_map(m: ElevationMap, path, format: str | None = None):
    atomic_write_text(path, dumps_map(m, format or _guess_format(path)))


# ---------------------------------------------------------------------------
# synthetic obstacles

OBSTACLE_KINDS = ("step", "ramp", "iramp")
SWEEP_ROTATIONS = tuple(range(0, 45, 5))


@dataclass(frozen=True)
class ObstacleSpec:
    """A planar obstacle rotated clockwise (seen from above) about a vertical
    axis at ``(axis_distance, 0)``; the robot starts with S_middle,2 at the origin.

    ``map_extent`` is the (x, y) size of the generated grid in meters; the
    grid starts at ``x_min`` and is centered on y = 0.
    """

    kind: str = "step"
    rotation_deg: float = 0.0
    axis_distance: float = 0.54
    obstacle_height: float = 0.06
    slope_run: float = 0.30
    map_extent: tuple[float, float] = (1.55, 0.60)
    resolution: float = 0.005
    x_min: float = -0.20

    def __post_init__(self):
        if self.kind not in OBSTACLE_KINDS:
            raise ValueError(f"kind must be one of {OBSTACLE_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.rotation_deg < 90.0:
            raise ValueError(f"rotation_deg must be in [0, 90), got {self.rotation_deg}")
        if self.axis_distance <= 0 or self.obstacle_height <= 0:
            raise ValueError("axis_distance and obstacle_height must be positive")
        if self.slope_run <= 0 or self.resolution <= 0:
            raise ValueError("slope_run and resolution must be positive")
        if min(self.map_extent) <= 0:
            raise ValueError("map_extent must be positive")

    @property
    def in_standard_sweep(self) -> bool:
        return 0.0 <= self.rotation_deg <= 40.0


def grid_shape(extent: tuple[float, float], resolution: float) -> tuple[int, int]:
    return (int(round(extent[0] / resolution)), int(round(extent[1] / resolution)))


def _profile(kind: str, s: np.ndarray, height: float, run: float) -> np.ndarray:
    """Height along the obstacle normal; ``s`` is signed distance past the feature line."""
    out = np.zeros_like(s)
    inside = s >= 0
    if kind == "step":
        out[inside] = height
    elif kind == "ramp":
        out[inside] = height * np.minimum(s[inside] / run, 1.0)
    else:
        out[inside] = height * np.maximum(1.0 - s[inside] / run, 0.0)
    return out


def generate_obstacle(spec: ObstacleSpec) -> ElevationMap:
    """Rasterize a step, ramp or inverse ramp.

    Each cell takes the profile value at its center (no anti-aliasing). Along
    the normal ``n = (cos a, -sin a)`` past the feature line through the
    rotation axis: step is flat at ``obstacle_height``; ramp rises linearly
    over ``slope_run`` then plateaus; iramp starts at full height and falls
    to zero over ``slope_run``.
    """
    nx, ny = grid_shape(spec.map_extent, spec.resolution)
    if nx < 2 or ny < 2:
        raise ValueError("map_extent too small for the resolution")
    origin = (spec.x_min, -(ny - 1) * spec.resolution / 2.0)
    x_max = origin[0] + (nx - 1) * spec.resolution
    far = spec.axis_distance + (0.0 if spec.kind == "step" else spec.slope_run)
    if not (origin[0] < spec.axis_distance and far <= x_max):
        raise ValueError(
            f"{spec.kind} footprint [{spec.axis_distance}, {far}] exceeds map x-range "
            f"[{origin[0]}, {x_max}]")

    xs = origin[0] + np.arange(nx) * spec.resolution
    ys = origin[1] + np.arange(ny) * spec.resolution
    a = math.radians(spec.rotation_deg)
    ca, sa = math.cos(a), math.sin(a)
    s = (xs[None, :] - spec.axis_distance) * ca - ys[:, None] * sa
    heights = _profile(spec.kind, s, spec.obstacle_height, spec.slope_run)
    return ElevationMap(nx, ny, spec.resolution, origin, heights)


def flat_map(extent=(1.55, 0.60), resolution=0.005, x_min=-0.20, height=0.0) -> ElevationMap:
    nx, ny = grid_shape(extent, resolution)
    origin = (x_min, -(ny - 1) * resolution / 2.0)
    return ElevationMap(nx, ny, resolution, origin, np.full((ny, nx), float(height)))
