"""Shared test utilities: instance generation and independent result checks."""
from __future__ import annotations

import math

import numpy as np

from vbm.grid import Cell, OccupancyGrid, random_grid
from vbm.metric import distance
from vbm.oracle import oracle_los
from vbm.visibility import VisibilityStore


def random_instances(count, size=32, densities=(0.1, 0.2, 0.3), seed=0):
    """Yield ``(grid, source)`` pairs with a random free source."""
    rng = np.random.default_rng(seed)
    made = 0
    while made < count:
        density = densities[made % len(densities)]
        grid = random_grid(size, size, density, rng)
        free = grid.free_cells()
        if not free:
            continue
        yield grid, free[int(rng.integers(len(free)))]
        made += 1


def los_parametric(grid: OccupancyGrid, a, b, step=1e-4) -> bool:
    """Line of sight by dense sampling of the segment between centers.

    A sample strictly inside an occupied square blocks; sampling cannot see
    lattice-corner pinches, so only use it on segments that avoid them.
    """
    ax, ay = a[0] + 0.5, a[1] + 0.5
    bx, by = b[0] + 0.5, b[1] + 0.5
    occ = grid.occupied
    for t in np.linspace(0.0, 1.0, int(round(1 / step)) + 1):
        x = ax + (bx - ax) * t
        y = ay + (by - ay) * t
        cx, cy = math.floor(x), math.floor(y)
        if x != cx and y != cy and occ[cy, cx]:
            return False
    return True


def invariant_violations(result, backend="exact"):
    """List of human-readable violations of the march result invariants."""
    grid = result.grid
    out = []
    par = result.parents
    dist = result.dist
    src = {grid.index(s) for s in result.sources}
    for s in result.sources:
        if dist[s.y, s.x] != 0.0 or par[s.y, s.x] != grid.index(s):
            out.append(f"source {s} not its own parent at distance 0")
    dp_store = VisibilityStore(grid, "dp", result.store.tau) if backend == "dp" else None
    allowed = src | {grid.index(p) for p in result.pivots}
    for y, x in zip(*np.nonzero(np.isfinite(dist))):
        c = Cell(int(x), int(y))
        i = grid.index(c)
        if i in src:
            continue
        if grid.is_occupied(c):
            out.append(f"occupied cell {c} reached")
            continue
        pi = int(par[y, x])
        if pi < 0 or pi not in allowed:
            out.append(f"{c} has parent {pi} that is neither pivot nor source")
            continue
        p = grid.cell(pi)
        vis = oracle_los(grid, p, c) if backend == "exact" else dp_store.visible(p, c)
        if not vis:
            out.append(f"{c} not visible from its parent {p}")
        expect = dist[p.y, p.x] + distance(result.metric, p, c)
        if abs(dist[y, x] - expect) > 1e-12 * max(1.0, expect):
            out.append(f"{c}: dist {dist[y, x]} != parent dist + step {expect}")
        if dist[y, x] < dist[p.y, p.x]:
            out.append(f"{c}: dist below its parent's")
    # chains terminate at a source without cycles
    flat = par.ravel()
    for i in np.nonzero(flat >= 0)[0]:
        j = int(i)
        for _ in range(grid.size + 1):
            if int(flat[j]) == j:
                break
            j = int(flat[j])
        else:
            out.append(f"parent chain from {grid.cell(int(i))} does not terminate")
        if j not in src:
            out.append(f"parent chain from {grid.cell(int(i))} ends at non-source {grid.cell(j)}")
    keys = result.pop_keys
    if np.any(np.diff(keys) < 0):
        out.append("non-stale pop keys decrease")
    if result.popped_count > grid.free_count:
        out.append("more pops than free cells")
    if int(result.visited.sum()) != result.popped_count or keys.size != result.popped_count:
        out.append("a cell was settled more than once")
    if np.any(np.isfinite(dist[grid.occupied])):
        out.append("occupied cells have finite distance")
    return out
