"""Brute-force ground truth for testing and benchmarking.

``oracle_one_to_all`` runs Dijkstra over the full visibility graph of free
cells, where two cells are joined when the segment between their centers is
unobstructed. Its line-of-sight test is a separate geometric implementation
(segment against every occupied square, separating-axis style) rather than the
traversal used by the marcher, so the two can be checked against each other.

``astar8`` is a plain 8-connected octile A* baseline without corner cutting.
"""
from __future__ import annotations

import heapq
import math

import numpy as np
from numba import njit

from .errors import ContractViolation
from .grid import Cell, OccupancyGrid, neighbors8
from .metric import EUCLIDEAN, Metric, _dist

MAX_FREE_CELLS = 4096

_SQRT2 = math.sqrt(2.0)


class OracleRefused(ContractViolation):
    """The instance is too large for all-pairs visibility."""


@njit(cache=True, nogil=True)
def _seg_clear(ox, oy, pinch_x, pinch_y, ax, ay, bx, by):
    """True when the segment between doubled-coordinate points is unobstructed.

    ``ox, oy`` are occupied cell indices; their open squares are
    ``(2x, 2x+2) x (2y, 2y+2)`` in doubled coordinates. ``pinch_*`` are
    lattice points (doubled) where two diagonally opposed cells are occupied.
    """
    lox = min(ax, bx)
    hix = max(ax, bx)
    loy = min(ay, by)
    hiy = max(ay, by)
    ux = bx - ax
    uy = by - ay
    for i in range(ox.size):
        x0 = 2 * ox[i]
        y0 = 2 * oy[i]
        if hix <= x0 or lox >= x0 + 2 or hiy <= y0 or loy >= y0 + 2:
            continue
        smin = 1 << 62
        smax = -(1 << 62)
        for cx in (x0, x0 + 2):
            for cy in (y0, y0 + 2):
                s = ux * (cy - ay) - uy * (cx - ax)
                smin = min(smin, s)
                smax = max(smax, s)
        if smin < 0 < smax:
            return False
    for i in range(pinch_x.size):
        lx = pinch_x[i]
        ly = pinch_y[i]
        if lx < lox or lx > hix or ly < loy or ly > hiy:
            continue
        if ux * (ly - ay) - uy * (lx - ax) == 0:
            return False
    return True


@njit(cache=True, nogil=True)
def _oracle_dijkstra(free_x, free_y, ox, oy, pinch_x, pinch_y, src, kind, order):
    m = free_x.size
    dist = np.full(m, np.inf)
    done = np.zeros(m, dtype=np.bool_)
    dist[src] = 0.0
    for _ in range(m):
        u = -1
        best = np.inf
        for i in range(m):
            if not done[i] and dist[i] < best:
                best = dist[i]
                u = i
        if u < 0:
            break
        done[u] = True
        ax = 2 * free_x[u] + 1
        ay = 2 * free_y[u] + 1
        for v in range(m):
            if done[v]:
                continue
            cand = best + _dist(kind, order, free_x[v] - free_x[u], free_y[v] - free_y[u])
            if cand >= dist[v]:
                continue
            if _seg_clear(ox, oy, pinch_x, pinch_y, ax, ay, 2 * free_x[v] + 1, 2 * free_y[v] + 1):
                dist[v] = cand
    return dist


def _obstacle_arrays(grid: OccupancyGrid):
    occ = grid.occupied
    oy, ox = np.nonzero(occ)
    # lattice point (i, j) in cell units is the top-left corner of cell (i, j)
    a = occ[:-1, :-1] & occ[1:, 1:]
    b = occ[:-1, 1:] & occ[1:, :-1]
    py, px = np.nonzero(a | b)
    return (ox.astype(np.int64), oy.astype(np.int64),
            (2 * (px + 1)).astype(np.int64), (2 * (py + 1)).astype(np.int64))


def oracle_los(grid: OccupancyGrid, a, b) -> bool:
    """Geometric line of sight between two cell centers."""
    if grid.is_occupied(a) or grid.is_occupied(b):
        return False
    ox, oy, pxs, pys = _obstacle_arrays(grid)
    return bool(_seg_clear(ox, oy, pxs, pys, 2 * a[0] + 1, 2 * a[1] + 1, 2 * b[0] + 1, 2 * b[1] + 1))


def oracle_one_to_all(grid: OccupancyGrid, source, metric: Metric = EUCLIDEAN,
                      max_free: int = MAX_FREE_CELLS) -> np.ndarray:
    """Visibility-graph shortest distances from ``source``; ``inf`` where unreachable."""
    free = grid.free_cells()
    if len(free) > max_free:
        raise OracleRefused(
            f"oracle needs all-pairs line of sight; {len(free)} free cells exceeds the cap of {max_free}")
    if not grid.is_free(source):
        raise ContractViolation(f"source {tuple(source)} must be a free in-bounds cell")
    fx = np.array([c.x for c in free], dtype=np.int64)
    fy = np.array([c.y for c in free], dtype=np.int64)
    src = free.index(Cell(int(source[0]), int(source[1])))
    kind, order = metric.code
    d = _oracle_dijkstra(fx, fy, *_obstacle_arrays(grid), src, kind, order)
    out = np.full((grid.height, grid.width), np.inf)
    out[fy, fx] = d
    return out


def astar8(grid: OccupancyGrid, source, goal) -> float:
    """Octile 8-connected A* length (no corner cutting); ``inf`` when unreachable."""
    source = Cell(*source)
    goal = Cell(*goal)
    if not (grid.is_free(source) and grid.is_free(goal)):
        raise ContractViolation("A* endpoints must be free in-bounds cells")

    def octile(c):
        dx, dy = abs(c.x - goal.x), abs(c.y - goal.y)
        return abs(dx - dy) + _SQRT2 * min(dx, dy)

    g = {source: 0.0}
    closed = set()
    heap = [(octile(source), 0.0, source)]
    while heap:
        _, gc, c = heapq.heappop(heap)
        if c in closed:
            continue
        if c == goal:
            return gc
        closed.add(c)
        for nb in neighbors8(grid, c, no_corner_cut=True):
            step = _SQRT2 if nb.x != c.x and nb.y != c.y else 1.0
            cand = gc + step
            if cand < g.get(nb, math.inf):
                g[nb] = cand
                heapq.heappush(heap, (cand + octile(nb), cand, nb))
    return math.inf


def dijkstra8(grid: OccupancyGrid, source) -> np.ndarray:
    """8-connected octile distances from ``source`` to every cell."""
    source = Cell(*source)
    out = np.full((grid.height, grid.width), np.inf)
    out[source.y, source.x] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, c = heapq.heappop(heap)
        if d > out[c.y, c.x]:
            continue
        for nb in neighbors8(grid, c, no_corner_cut=True):
            cand = d + (_SQRT2 if nb.x != c.x and nb.y != c.y else 1.0)
            if cand < out[nb.y, nb.x]:
                out[nb.y, nb.x] = cand
                heapq.heappush(heap, (cand, nb))
    return out
