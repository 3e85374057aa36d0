"""Visibility-based marching.

A wavefront is expanded from the sources in nondecreasing distance order.
Every cell carries a parent (a source or a pivot) whose analytic distance it
inherits. When a popped cell's parent cannot see a neighbour, the popped cell
becomes a pivot for that neighbour. The parents of already-updated cells
around a neighbour are offered as alternative parents, and the visible one
giving the least total distance wins.

The parent matrix doubles as a shortest-path tree: backtracking from any
reached cell yields its optimal pivot path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

from .errors import ContractViolation
from .grid import Cell, OccupancyGrid
from .metric import EUCLIDEAN, Metric, _dist, distance
from .visibility import BACKENDS, DEFAULT_TAU, VisibilityStore, _new_table, _visible

_DX = np.array([1, 0, -1, 0, 1, -1, -1, 1], dtype=np.int64)
_DY = np.array([0, 1, 0, -1, 1, 1, -1, -1], dtype=np.int64)

# relative margin a candidate must beat the current distance by
IMPROVE_RTOL = 1e-12


# --- binary heap on parallel arrays, ordered by (k1, k2, cell) ----------------

@njit(cache=True, nogil=True, inline="always")
def _less(k1, k2, kc, i, j):
    if k1[i] != k1[j]:
        return k1[i] < k1[j]
    if k2[i] != k2[j]:
        return k2[i] < k2[j]
    return kc[i] < kc[j]


@njit(cache=True, nogil=True, inline="always")
def _swap(k1, k2, kc, i, j):
    k1[i], k1[j] = k1[j], k1[i]
    k2[i], k2[j] = k2[j], k2[i]
    kc[i], kc[j] = kc[j], kc[i]


@njit(cache=True, nogil=True)
def _heap_push(k1, k2, kc, size, a, b, c):
    if size == k1.size:
        cap = 2 * k1.size
        n1 = np.empty(cap, np.float64)
        n2 = np.empty(cap, np.float64)
        nc = np.empty(cap, np.int64)
        n1[:size] = k1[:size]
        n2[:size] = k2[:size]
        nc[:size] = kc[:size]
        k1, k2, kc = n1, n2, nc
    i = size
    k1[i] = a
    k2[i] = b
    kc[i] = c
    while i > 0:
        up = (i - 1) >> 1
        if not _less(k1, k2, kc, i, up):
            break
        _swap(k1, k2, kc, i, up)
        i = up
    return k1, k2, kc, size + 1


@njit(cache=True, nogil=True)
def _heap_pop(k1, k2, kc, size):
    a, b, c = k1[0], k2[0], kc[0]
    size -= 1
    k1[0] = k1[size]
    k2[0] = k2[size]
    kc[0] = kc[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        best = left
        if left + 1 < size and _less(k1, k2, kc, left + 1, left):
            best = left + 1
        if not _less(k1, k2, kc, best, i):
            break
        _swap(k1, k2, kc, i, best)
        i = best
    return a, b, c, size


# --- kernel ---------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _march_kernel(occ, w, h, sources, kind, order, backend, tau, no_corner_cut,
                  through, stop_mask, goal, keys, vals, count):
    """Run the march; ``goal >= 0`` switches to goal-directed ordering.

    Queue keys are ``(dist, 0)`` for the full march and ``(dist + h, -dist)``
    when a goal is given, so goal-directed ties prefer deeper cells.
    """
    n = w * h
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    updated = np.zeros(n, dtype=np.bool_)
    pop_keys = np.empty(n, dtype=np.float64)
    stack = np.empty(w + h + 2, dtype=np.int64)
    cap = 64
    while cap < 4 * sources.size:
        cap *= 2
    k1 = np.empty(cap, np.float64)
    k2 = np.empty(cap, np.float64)
    kc = np.empty(cap, np.int64)
    size = 0
    directed = goal >= 0
    gx = goal % w
    gy = goal // w

    for s in sources:
        dist[s] = 0.0
        parent[s] = s
        hk = _dist(kind, order, gx - s % w, gy - s // w) if directed else 0.0
        k1, k2, kc, size = _heap_push(k1, k2, kc, size, hk, 0.0, s)

    npop = 0
    while size > 0:
        key, key2, p, size = _heap_pop(k1, k2, kc, size)
        if updated[p]:
            continue
        if directed:
            if -key2 != dist[p]:
                continue
        elif key != dist[p]:
            continue
        updated[p] = True
        pop_keys[npop] = key
        npop += 1
        if p == goal or stop_mask[p]:
            break

        px = p % w
        py = p // w
        g = parent[p]
        gcx = g % w
        gcy = g // w
        dp_ = dist[p]
        dg = dist[g]
        for k in range(8):
            nx = px + _DX[k]
            ny = py + _DY[k]
            if nx < 0 or nx >= w or ny < 0 or ny >= h:
                continue
            q = ny * w + nx
            if updated[q]:
                continue
            blocked = occ[q] != 0
            if blocked and not through:
                continue
            if k >= 4 and no_corner_cut and occ[py * w + nx] and occ[ny * w + px]:
                continue

            cur = dist[q]
            limit = cur * (1.0 - IMPROVE_RTOL)
            best = np.inf
            bpar = -1
            # a candidate that cannot beat dist[q] is never queried; the pivot
            # detour through p is never shorter than the straight line from g
            cand = dg + _dist(kind, order, nx - gcx, ny - gcy)
            if cand < limit:
                vis, keys, vals, count = _visible(occ, w, n, keys, vals, count, stack,
                                                  backend, tau, g, q, blocked)
                if vis:
                    best = cand
                    bpar = g
                else:
                    # pivot at p
                    cand = dp_ + _dist(kind, order, nx - px, ny - py)
                    if cand < limit:
                        best = cand
                        bpar = p

            # parents of already-updated cells around q
            for j in range(8):
                rx = nx + _DX[j]
                ry = ny + _DY[j]
                if rx < 0 or rx >= w or ry < 0 or ry >= h:
                    continue
                r = ry * w + rx
                if not updated[r]:
                    continue
                a = parent[r]
                if a == bpar or a == g:
                    continue
                cand = dist[a] + _dist(kind, order, nx - a % w, ny - a // w)
                if cand >= limit:
                    continue
                if bpar >= 0:
                    tol = IMPROVE_RTOL * max(1.0, best)
                    if cand > best + tol:
                        continue
                    # equal distances: lowest parent index wins
                    if cand >= best - tol and a > bpar:
                        continue
                vis, keys, vals, count = _visible(occ, w, n, keys, vals, count, stack,
                                                  backend, tau, a, q, blocked)
                if vis:
                    best = cand
                    bpar = a

            if bpar >= 0:
                dist[q] = best
                parent[q] = bpar
                if not blocked:
                    if directed:
                        f = best + _dist(kind, order, gx - nx, gy - ny)
                        k1, k2, kc, size = _heap_push(k1, k2, kc, size, f, -best, q)
                    else:
                        k1, k2, kc, size = _heap_push(k1, k2, kc, size, best, 0.0, q)

    return dist, parent, updated, npop, pop_keys[:npop], keys, vals, count


# --- Python API ------------------------------------------------------------------

@dataclass(frozen=True)
class Path:
    """Waypoints from a source to a goal; ``reachable`` is False when no path exists."""

    waypoints: tuple[Cell, ...]
    length: float
    reachable: bool = True

    def __bool__(self):
        return self.reachable

    def __len__(self):
        return len(self.waypoints)

    def __iter__(self):
        return iter(self.waypoints)

    @classmethod
    def unreachable(cls) -> "Path":
        return cls((), math.inf, False)


@dataclass(eq=False)
class MarchResult:
    """Distance field, parent matrix and pivots of one march.

    ``dist`` and ``parents`` are ``(height, width)`` arrays; ``parents`` holds
    row-major linear indices, ``-1`` where unreached.
    """

    grid: OccupancyGrid
    metric: Metric
    sources: tuple[Cell, ...]
    dist: np.ndarray
    parents: np.ndarray
    visited: np.ndarray
    popped_count: int
    pop_keys: np.ndarray
    store: VisibilityStore

    def __post_init__(self):
        for arr in (self.dist, self.parents, self.visited, self.pop_keys):
            arr.flags.writeable = False

    @cached_property
    def pivots(self) -> frozenset:
        """Non-source cells that are the parent of at least one cell."""
        src = {self.grid.index(s) for s in self.sources}
        used = np.unique(self.parents[self.parents >= 0])
        return frozenset(self.grid.cell(i) for i in used if int(i) not in src)

    def distance(self, c) -> float:
        return float(self.dist[c[1], c[0]])

    def parent(self, c) -> Cell | None:
        i = int(self.parents[c[1], c[0]])
        return None if i < 0 else self.grid.cell(i)

    def reached(self, c) -> bool:
        return bool(np.isfinite(self.dist[c[1], c[0]]))

    def path(self, goal) -> Path:
        return extract_path(self, goal)


def _check_sources(grid: OccupancyGrid, sources) -> tuple[Cell, ...]:
    cells = tuple(Cell(int(s[0]), int(s[1])) for s in sources)
    if not cells:
        raise ContractViolation("at least one source is required")
    if len(set(cells)) != len(cells):
        raise ContractViolation(f"duplicate sources in {cells}")
    for s in cells:
        if not grid.in_bounds(s):
            raise ContractViolation(f"source {tuple(s)} is outside the {grid.width}x{grid.height} grid")
        if grid.is_occupied(s):
            raise ContractViolation(f"source {tuple(s)} is occupied")
    return cells


def _stop_mask(grid: OccupancyGrid, stop) -> np.ndarray:
    mask = np.zeros(grid.size, dtype=np.bool_)
    if stop is None:
        return mask
    if callable(stop):
        # predicates are functions of the cell alone, so evaluate them up front
        for i in range(grid.size):
            mask[i] = bool(stop(grid.cell(i)))
        return mask
    arr = np.asarray(stop)
    if arr.dtype == bool and arr.shape == grid.occupied.shape:
        return np.ascontiguousarray(arr).ravel().copy()
    for c in stop:
        if not grid.in_bounds(c):
            raise ContractViolation(f"stop cell {tuple(c)} is outside the grid")
        mask[grid.index(c)] = True
    return mask


def run_kernel(grid, sources, metric, backend, tau, no_corner_cut, through, stop, goal):
    if backend not in BACKENDS:
        raise ValueError(f"unknown visibility backend {backend!r}")
    store = VisibilityStore(grid, backend, tau)
    kind, order = metric.code
    src = np.array([grid.index(s) for s in sources], dtype=np.int64)
    dist, parent, updated, npop, pop_keys, keys, vals, count = _march_kernel(
        grid.flat(), grid.width, grid.height, src, kind, order, BACKENDS[backend], float(tau),
        bool(no_corner_cut), bool(through), _stop_mask(grid, stop),
        -1 if goal is None else grid.index(goal), store.keys, store.vals, 0)
    store.keys, store.vals, store.count = keys, vals, count
    shape = (grid.height, grid.width)
    return MarchResult(grid, metric, tuple(sources), dist.reshape(shape), parent.reshape(shape),
                       updated.reshape(shape), int(npop), pop_keys, store)


def march(grid: OccupancyGrid, sources, metric: Metric = EUCLIDEAN, backend: str = "dp",
          tau: float = DEFAULT_TAU, stop=None, *, no_corner_cut: bool = True,
          march_through_obstacles: bool = False) -> MarchResult:
    """One-to-all march from one or more sources.

    Args:
        grid: occupancy grid.
        sources: non-empty sequence of distinct free ``(x, y)`` cells.
        metric: distance function propagated from the sources and pivots.
        backend: ``"exact"`` or ``"dp"`` visibility.
        tau: dp visibility threshold.
        stop: optional predicate ``stop(cell) -> bool``, collection of cells
            or ``(height, width)`` boolean mask; the march ends as soon as a
            matching cell is popped.
        no_corner_cut: forbid diagonal steps between two occupied cells.
        march_through_obstacles: also assign distances to obstacle cells
            (never expanding them).
    """
    cells = _check_sources(grid, sources)
    return run_kernel(grid, cells, metric, backend, tau, no_corner_cut,
                      march_through_obstacles, stop, None)


def extract_path(result: MarchResult, goal) -> Path:
    """Backtrack the parent matrix from ``goal`` to its source."""
    grid = result.grid
    goal = Cell(int(goal[0]), int(goal[1]))
    if not grid.in_bounds(goal):
        raise ContractViolation(f"goal {tuple(goal)} is outside the grid")
    if not result.reached(goal) or result.parents[goal.y, goal.x] < 0:
        return Path.unreachable()
    flat_parent = result.parents.ravel()
    chain = [grid.index(goal)]
    for _ in range(grid.size):
        up = int(flat_parent[chain[-1]])
        if up == chain[-1]:
            break
        chain.append(up)
    else:
        raise RuntimeError(f"parent chain from {tuple(goal)} does not terminate")
    chain.reverse()
    cells = tuple(grid.cell(i) for i in chain)
    return Path(cells, path_length(cells, result.metric))


def path_length(cells, metric: Metric) -> float:
    return float(sum(distance(metric, a, b) for a, b in zip(cells, cells[1:])))
