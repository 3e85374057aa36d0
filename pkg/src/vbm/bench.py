"""Runtime scaling and one-march-many-queries path benchmarks."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .grid import Cell, OccupancyGrid, random_grid
from .marching import extract_path, march
from .metric import EUCLIDEAN, Metric


@dataclass(frozen=True)
class BenchRow:
    n: int
    mean_us: float
    std_us: float

    @property
    def us_per_cell(self) -> float:
        return self.mean_us / self.n


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    slope: float
    intercept: float
    r2: float
    us_per_cell: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean_us", "std_us", "us_per_cell"])
        for r in self.rows:
            w.writerow([r.n, f"{r.mean_us:.3f}", f"{r.std_us:.3f}", f"{r.us_per_cell:.6f}"])
        buf.write(f"# loglog_slope={self.slope:.4f} r2={self.r2:.5f} us_per_cell={self.us_per_cell:.6f}\n")
        return buf.getvalue()


def fit_loglog(n, t):
    """Least-squares line through ``(log n, log t)``: ``(slope, intercept, r2)``."""
    x = np.log(np.asarray(n, dtype=float))
    y = np.log(np.asarray(t, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def time_march(grid: OccupancyGrid, source, reps: int, metric: Metric = EUCLIDEAN,
               backend: str = "dp") -> np.ndarray:
    """Wall-clock seconds of ``reps`` full marches (store and queue setup included)."""
    out = np.empty(reps)
    for i in range(reps):
        t0 = time.perf_counter()
        march(grid, [source], metric, backend)
        out[i] = time.perf_counter() - t0
    return out


def run_scaling(sizes, reps: int = 5, metric: Metric = EUCLIDEAN, backend: str = "dp",
                density: float = 0.0, seed: int = 0) -> BenchReport:
    """Time full marches on square grids with the given side lengths.

    Grids are empty unless ``density`` is set; the source sits at the center
    (moved to the nearest free cell on cluttered grids).
    """
    sizes = [int(s) for s in sizes]
    if len(sizes) < 3:
        raise ValueError(f"need at least 3 grid sizes for a meaningful fit, got {len(sizes)}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if reps < 2:
        raise ValueError("need at least 2 repetitions per size")
    rng = np.random.default_rng(seed)
    # compile outside the timed region
    march(OccupancyGrid.empty(4, 4), [(0, 0)], metric, backend)
    rows = []
    for side in sizes:
        grid = OccupancyGrid.empty(side, side) if density <= 0 else random_grid(side, side, density, rng)
        src = _nearest_free(grid, Cell(side // 2, side // 2))
        times = time_march(grid, src, reps, metric, backend) * 1e6
        rows.append(BenchRow(side * side, float(times.mean()), float(times.std(ddof=1))))
    n = np.array([r.n for r in rows], dtype=float)
    t = np.array([r.mean_us for r in rows])
    slope, intercept, r2 = fit_loglog(n, t)
    # proportional fit t = k n
    k = float(np.dot(n, t) / np.dot(n, n))
    return BenchReport(tuple(rows), slope, intercept, r2, k)


def _nearest_free(grid: OccupancyGrid, c: Cell) -> Cell:
    if grid.is_free(c):
        return c
    free = np.argwhere(~grid.occupied)
    if free.size == 0:
        raise ContractViolation("grid has no free cell")
    d = (free[:, 0] - c.y) ** 2 + (free[:, 1] - c.x) ** 2
    y, x = free[int(np.argmin(d))]
    return Cell(int(x), int(y))


@dataclass(frozen=True)
class PathsetRow:
    goal: Cell
    length: float
    waypoints: int
    error: str | None = None


@dataclass
class PathsetReport:
    rows: list[PathsetRow]
    march_seconds: float
    query_seconds: float
    marches: int = field(default=1)

    @property
    def ok_rows(self) -> list[PathsetRow]:
        return [r for r in self.rows if r.error is None]

    @property
    def mean_length(self) -> float:
        ok = self.ok_rows
        return sum(r.length for r in ok) / len(ok) if ok else math.nan

    @property
    def total_seconds(self) -> float:
        return self.march_seconds + self.query_seconds

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["goal_x", "goal_y", "length", "waypoints", "error"])
        for r in self.rows:
            w.writerow([r.goal.x, r.goal.y, "" if r.error else f"{r.length:.6f}",
                        "" if r.error else r.waypoints, r.error or ""])
        buf.write(f"# mean_length={self.mean_length:.6f} march_s={self.march_seconds:.6f} "
                  f"total_s={self.total_seconds:.6f}\n")
        return buf.getvalue()


def run_pathset(grid: OccupancyGrid, source, goals, metric: Metric = EUCLIDEAN,
                backend: str = "dp") -> PathsetReport:
    """One march from ``source``, then a backtracked path per goal.

    Bad goals (occupied, outside, unreachable) get an error row; the others
    are still reported.
    """
    source = Cell(int(source[0]), int(source[1]))
    t0 = time.perf_counter()
    result = march(grid, [source], metric, backend)
    t1 = time.perf_counter()
    rows = []
    for g in goals:
        g = Cell(int(g[0]), int(g[1]))
        if not grid.in_bounds(g):
            rows.append(PathsetRow(g, math.nan, 0, "out of bounds"))
        elif grid.is_occupied(g):
            rows.append(PathsetRow(g, math.nan, 0, "occupied"))
        else:
            path = extract_path(result, g)
            if path.reachable:
                rows.append(PathsetRow(g, path.length, len(path)))
            else:
                rows.append(PathsetRow(g, math.inf, 0, "unreachable"))
    t2 = time.perf_counter()
    return PathsetReport(rows, t1 - t0, t2 - t1)
