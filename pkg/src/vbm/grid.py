"""Occupancy grids and the map formats they are read from.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row, origin at
the top-left, i.e. raster order of the map files. Occupancy is stored as a
read-only ``(height, width)`` boolean array where ``True`` means obstacle.
"""
from __future__ import annotations

import re
from typing import Iterable, NamedTuple

import numpy as np

FREE_CHARS = frozenset(".GS")
OCCUPIED_CHARS = frozenset("@OTW")

# 8-neighbourhood offsets: orthogonal first, then diagonal
OFFSETS8 = ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1))


class Cell(NamedTuple):
    x: int
    y: int


class MapParseError(ValueError):
    """Raised for malformed map input; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class OccupancyGrid:
    """Immutable rectangular boolean occupancy raster."""

    __slots__ = ("_occ", "_flat")

    def __init__(self, occupied):
        occ = np.array(occupied, dtype=bool, copy=True)
        if occ.ndim != 2 or occ.shape[0] < 1 or occ.shape[1] < 1:
            raise ValueError(f"occupancy must be a non-empty 2D array, got shape {occ.shape}")
        occ.flags.writeable = False
        self._occ = occ
        self._flat = None

    @classmethod
    def empty(cls, width: int, height: int) -> "OccupancyGrid":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_strings(cls, rows: Iterable[str]) -> "OccupancyGrid":
        """Build from rows of MovingAI characters (no header)."""
        rows = list(rows)
        text = f"type octile\nheight {len(rows)}\nwidth {len(rows[0]) if rows else 0}\nmap\n"
        return parse_movingai_map(text + "\n".join(rows))

    @property
    def occupied(self) -> np.ndarray:
        return self._occ

    @property
    def width(self) -> int:
        return self._occ.shape[1]

    @property
    def height(self) -> int:
        return self._occ.shape[0]

    @property
    def size(self) -> int:
        return self._occ.size

    @property
    def free_count(self) -> int:
        return int(self._occ.size - np.count_nonzero(self._occ))

    def in_bounds(self, c) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def is_occupied(self, c) -> bool:
        return bool(self._occ[c[1], c[0]])

    def is_free(self, c) -> bool:
        return self.in_bounds(c) and not self._occ[c[1], c[0]]

    def index(self, c) -> int:
        """Row-major linear index of ``c``."""
        return c[1] * self.width + c[0]

    def cell(self, index: int) -> Cell:
        return Cell(int(index) % self.width, int(index) // self.width)

    def free_cells(self) -> list[Cell]:
        ys, xs = np.nonzero(~self._occ)
        return [Cell(int(x), int(y)) for y, x in zip(ys, xs)]

    def flat(self) -> np.ndarray:
        """Row-major ``uint8`` occupancy (1 = obstacle) for the kernels."""
        if self._flat is None:
            flat = np.ascontiguousarray(self._occ, dtype=np.uint8).ravel()
            flat.flags.writeable = False
            self._flat = flat
        return self._flat

    def __eq__(self, other):
        return isinstance(other, OccupancyGrid) and np.array_equal(self._occ, other._occ)

    def __hash__(self):
        return hash((self._occ.shape, self._occ.tobytes()))

    def __repr__(self):
        return f"OccupancyGrid({self.width}x{self.height}, occupied={self.size - self.free_count})"


def neighbors8(grid: OccupancyGrid, p, no_corner_cut: bool = True) -> list[Cell]:
    """Free in-bounds cells of the 8-neighbourhood of ``p``.

    With ``no_corner_cut`` a diagonal step is dropped when both orthogonal
    cells it squeezes between are occupied.
    """
    px, py = p
    occ = grid.occupied
    w, h = grid.width, grid.height
    out = []
    for dx, dy in OFFSETS8:
        x, y = px + dx, py + dy
        if not (0 <= x < w and 0 <= y < h) or occ[y, x]:
            continue
        if no_corner_cut and dx and dy and occ[py, x] and occ[y, px]:
            continue
        out.append(Cell(x, y))
    return out


_HEADER_RE = re.compile(r"^\s*(type|height|width)\s+(\S+)\s*$")


def parse_movingai_map(text: str) -> OccupancyGrid:
    """Parse a MovingAI ``.map`` text.

    ``.``, ``G`` and ``S`` are free; ``@``, ``O``, ``T`` and ``W`` are
    occupied. Errors carry the offending 1-based line number.
    """
    lines = text.splitlines()
    header: dict[str, str] = {}
    i = 0
    while True:
        if i >= len(lines):
            raise MapParseError("missing 'map' line", i + 1)
        line = lines[i].strip()
        if line == "map":
            break
        m = _HEADER_RE.match(line)
        if not m:
            raise MapParseError(f"malformed header line {lines[i]!r}", i + 1)
        if m.group(1) in header:
            raise MapParseError(f"duplicate header field {m.group(1)!r}", i + 1)
        if i == 0 and m.group(1) != "type":
            raise MapParseError("header must start with 'type'", i + 1)
        header[m.group(1)] = m.group(2)
        i += 1
    for field in ("type", "height", "width"):
        if field not in header:
            raise MapParseError(f"header is missing {field!r}", i + 1)
    try:
        height = int(header["height"])
        width = int(header["width"])
    except ValueError:
        raise MapParseError("height and width must be integers", i + 1) from None
    if height < 1 or width < 1:
        raise MapParseError(f"bad dimensions {width}x{height}", i + 1)

    rows = lines[i + 1:]
    # tolerate trailing blank lines only
    while rows and not rows[-1].strip():
        rows.pop()
    occ = np.zeros((height, width), dtype=bool)
    for y, row in enumerate(rows):
        lineno = i + 2 + y
        row = row.rstrip("\r")
        if y >= height:
            raise MapParseError(f"expected {height} rows, found more", lineno)
        if len(row) != width:
            raise MapParseError(f"row has {len(row)} characters, expected {width}", lineno)
        for x, ch in enumerate(row):
            if ch in OCCUPIED_CHARS:
                occ[y, x] = True
            elif ch not in FREE_CHARS:
                raise MapParseError(f"unknown map character {ch!r} at column {x}", lineno)
    if len(rows) != height:
        raise MapParseError(f"expected {height} rows, found {len(rows)}", i + 2 + len(rows))
    return OccupancyGrid(occ)


def load_map(path) -> OccupancyGrid:
    with open(path, encoding="ascii") as f:
        return parse_movingai_map(f.read())


def to_movingai(grid: OccupancyGrid) -> str:
    """Serialize as a MovingAI map using ``.`` and ``@``."""
    rows = ["".join("@" if v else "." for v in row) for row in grid.occupied]
    return f"type octile\nheight {grid.height}\nwidth {grid.width}\nmap\n" + "\n".join(rows) + "\n"


def _pgm_tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MapParseError("truncated PGM header")
        out.append(data[start:pos])
    return out, pos


def parse_pgm(data: bytes, threshold: int = 128) -> OccupancyGrid:
    """Parse a binary (P5) or ASCII (P2) PGM; samples below ``threshold`` are occupied.

    Samples are rescaled to 0..255 first when ``maxval`` differs from 255.
    """
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise MapParseError(f"bad PGM magic number {magic!r}")
    try:
        (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise MapParseError("non-integer PGM header field") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise MapParseError(f"bad PGM header {width}x{height} maxval={maxval}")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte ends the header
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        payload = data[pos:pos + count * dtype.itemsize]
        if len(payload) < count * dtype.itemsize:
            raise MapParseError(f"truncated PGM payload: need {count * dtype.itemsize} bytes, got {len(payload)}")
        values = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    else:
        tokens = data[pos:].split()
        if len(tokens) < count:
            raise MapParseError(f"truncated PGM payload: need {count} samples, got {len(tokens)}")
        try:
            values = np.array([int(t) for t in tokens[:count]], dtype=np.float64)
        except ValueError:
            raise MapParseError("non-integer PGM sample") from None
    if maxval != 255:
        values = values * (255.0 / maxval)
    return OccupancyGrid((values < threshold).reshape(height, width))


def load_pgm(path, threshold: int = 128) -> OccupancyGrid:
    with open(path, "rb") as f:
        return parse_pgm(f.read(), threshold)


def load_grid(path, fmt: str | None = None, threshold: int = 128) -> OccupancyGrid:
    """Load by explicit format or by file extension."""
    path = str(path)
    if fmt is None:
        fmt = "pgm" if path.lower().endswith(".pgm") else "movingai"
    if fmt == "pgm":
        return load_pgm(path, threshold)
    if fmt == "movingai":
        return load_map(path)
    raise ValueError(f"unknown map format {fmt!r}")


def random_grid(width: int, height: int, density: float, rng: np.random.Generator) -> OccupancyGrid:
    """Uniform random obstacles at the given occupied fraction."""
    return OccupancyGrid(rng.random((height, width)) < density)
