"""Figure-style images of march results, written as binary PPM (P6).

One pixel per cell. Modes:

* ``distance``: distance field through a cold-to-hot ramp, obstacles in
  dark red, unreached cells gray, optional black contour lines.
* ``parents``: one color per parent cell, pivots white, obstacles black.
* ``path-overlay``: grayscale map with backtracked paths drawn on top.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .grid import OccupancyGrid
from .marching import MarchResult, extract_path

MODES = ("distance", "parents", "path-overlay")

# blue -> azure -> cyan -> yellow -> red
RAMP = np.array([
    (0, 0, 160),
    (0, 128, 255),
    (0, 255, 255),
    (255, 255, 0),
    (255, 0, 0),
], dtype=np.float64)

DARK_RED = (139, 0, 0)
BLACK = (0, 0, 0)
WHITE = (255, 255, 255)
GRAY = (128, 128, 128)
GREEN = (0, 200, 0)
RED = (230, 0, 0)


@dataclass(frozen=True)
class RenderSpec:
    mode: str = "distance"
    obstacle_color: tuple[int, int, int] = DARK_RED
    unreached_color: tuple[int, int, int] = GRAY
    contour_interval: float = 0.0
    goals: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown render mode {self.mode!r}; expected one of {MODES}")
        if self.contour_interval < 0:
            raise ValueError("contour interval must be >= 0")


def colormap(t: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to RGB through the linear ramp."""
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    pos = t * (len(RAMP) - 1)
    i = np.minimum(pos.astype(np.int64), len(RAMP) - 2)
    frac = (pos - i)[..., None]
    rgb = RAMP[i] * (1.0 - frac) + RAMP[i + 1] * frac
    return np.rint(rgb).astype(np.uint8)


def _mix24(v: np.ndarray) -> np.ndarray:
    """Bijection on 24-bit integers (odd multiply and xor-shifts mod 2**24)."""
    mask = np.uint64(0xFFFFFF)
    v = v.astype(np.uint64) & mask
    for _ in range(2):
        v = (v * np.uint64(0x9E3779)) & mask  # odd multiplier: invertible mod 2**24
        v ^= v >> np.uint64(11)
        v = (v * np.uint64(0x2C1B3B)) & mask
        v ^= v >> np.uint64(7)
    return v


_RESERVED = np.array(sorted(
    (c[0] << 16) | (c[1] << 8) | c[2] for c in (WHITE, BLACK, DARK_RED, GREEN)), dtype=np.uint64)


def parent_colors(parent_index: np.ndarray) -> np.ndarray:
    """Distinct RGB color per distinct parent index.

    Injective for indices below ``2**24 - 4``: indices are first shifted past
    the reserved color values, then scrambled by cycle-walking the 24-bit
    bijection until the result leaves the reserved set.
    """
    v = np.asarray(parent_index).astype(np.uint64)
    for r in _RESERVED:
        v += (v >= r).astype(np.uint64)
    v = _mix24(v)
    while True:
        bad = np.isin(v, _RESERVED)
        if not bad.any():
            break
        v[bad] = _mix24(v[bad])
    rgb = np.stack([(v >> np.uint64(16)) & np.uint64(255), (v >> np.uint64(8)) & np.uint64(255),
                    v & np.uint64(255)], axis=-1)
    return rgb.astype(np.uint8)


def contour_mask(dist: np.ndarray, interval: float) -> np.ndarray:
    """Cells whose contour band differs from an orthogonal neighbour's."""
    out = np.zeros(dist.shape, dtype=bool)
    if interval <= 0:
        return out
    finite = np.isfinite(dist)
    band = np.where(finite, np.floor(np.where(finite, dist, 0.0) / interval), 0)
    for axis in (0, 1):
        a = [slice(None)] * 2
        b = [slice(None)] * 2
        a[axis] = slice(1, None)
        b[axis] = slice(None, -1)
        diff = (band[tuple(a)] != band[tuple(b)]) & finite[tuple(a)] & finite[tuple(b)]
        # mark the cell on the far side of the level crossing
        out[tuple(a)] |= diff & (band[tuple(a)] > band[tuple(b)])
        out[tuple(b)] |= diff & (band[tuple(b)] > band[tuple(a)])
    return out


def _draw_segment(img, a, b, color):
    x0, y0 = a
    x1, y1 = b
    steps = max(abs(x1 - x0), abs(y1 - y0))
    for i in range(steps + 1):
        t = i / steps if steps else 0.0
        x = int(round(x0 + (x1 - x0) * t))
        y = int(round(y0 + (y1 - y0) * t))
        img[y, x] = color


def render_rgb(result: MarchResult, grid: OccupancyGrid, spec: RenderSpec) -> np.ndarray:
    """``(height, width, 3)`` uint8 image."""
    if result.dist.shape != grid.occupied.shape:
        raise ContractViolation(
            f"result is {result.dist.shape[1]}x{result.dist.shape[0]} but grid is {grid.width}x{grid.height}")
    occ = grid.occupied
    dist = result.dist
    finite = np.isfinite(dist)
    img = np.empty(occ.shape + (3,), dtype=np.uint8)

    if spec.mode == "distance":
        hi = float(dist[finite].max()) if finite.any() else 0.0
        img[:] = colormap(np.where(finite, dist, 0.0) / hi if hi > 0 else np.zeros(dist.shape))
        img[~finite] = spec.unreached_color
        img[occ] = spec.obstacle_color
        img[contour_mask(dist, spec.contour_interval) & ~occ] = BLACK
        return img

    if spec.mode == "parents":
        par = result.parents
        img[:] = spec.unreached_color
        reached = par >= 0
        img[reached] = parent_colors(par[reached])
        img[occ] = BLACK
        for p in result.pivots:
            img[p.y, p.x] = WHITE
        for s in result.sources:
            img[s.y, s.x] = GREEN
        return img

    # path-overlay
    img[:] = 255
    img[occ] = BLACK
    for goal in spec.goals:
        path = extract_path(result, goal)
        if not path.reachable:
            continue
        for a, b in zip(path.waypoints, path.waypoints[1:]):
            _draw_segment(img, a, b, (0, 0, 255))
        img[goal[1], goal[0]] = RED
    for s in result.sources:
        img[s.y, s.x] = GREEN
    return img


def encode_ppm(img: np.ndarray) -> bytes:
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    """Inverse of :func:`encode_ppm` for P6 images with maxval 255."""
    if data[:2] != b"P6":
        raise ValueError("not a binary PPM")
    parts = data.split(maxsplit=4)
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    payload = data[len(data) - w * h * 3:]
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3)


def render(result: MarchResult, grid: OccupancyGrid, spec: RenderSpec | None = None) -> bytes:
    """Render ``result`` over ``grid`` as PPM bytes."""
    return encode_ppm(render_rgb(result, grid, spec or RenderSpec()))
