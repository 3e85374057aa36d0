"""Visibility queries between a pivot cell and a target cell.

Two backends answer "does pivot ``g`` see cell ``c``":

* ``exact``: integer supercover traversal between the two cell centers. The
  segment is blocked by any occupied cell whose open square it enters, and by
  a lattice corner it crosses when the two cells it squeezes between are both
  occupied.
* ``dp``: a visibility score transported outward from the pivot by a
  first-order upwind recursion,
  ``s(c) = (|dx| s(c - sx ex) + |dy| s(c - sy ey)) / (|dx| + |dy|)``, with
  ``s = 0`` on obstacles and ``s(g) = 1``. A cell is visible when its score
  reaches the threshold ``tau``.

Both memoize into a :class:`VisibilityStore`, an open-addressing hash table
keyed by ``pivot * n_cells + cell``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ContractViolation
from .grid import OccupancyGrid

EXACT = 0
DP = 1
BACKENDS = {"exact": EXACT, "dp": DP}

DEFAULT_TAU = 0.5

_EMPTY = -1
_MIN_CAPACITY = 64


# --- hash table -------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _slot(keys, key):
    mask = keys.size - 1
    h = key * 0x2545F491
    h ^= h >> 23
    i = h & mask
    while True:
        k = keys[i]
        if k == _EMPTY or k == key:
            return i
        i = (i + 1) & mask


@njit(cache=True, nogil=True)
def _table_get(keys, vals, key):
    """Stored value, or -1.0 when absent (scores live in [0, 1])."""
    i = _slot(keys, key)
    if keys[i] == _EMPTY:
        return -1.0
    return vals[i]


@njit(cache=True, nogil=True)
def _table_grow(keys, vals):
    new_keys = np.full(keys.size * 2, _EMPTY, dtype=np.int64)
    new_vals = np.zeros(keys.size * 2, dtype=np.float64)
    for i in range(keys.size):
        k = keys[i]
        if k != _EMPTY:
            j = _slot(new_keys, k)
            new_keys[j] = k
            new_vals[j] = vals[i]
    return new_keys, new_vals


@njit(cache=True, nogil=True)
def _table_put(keys, vals, count, key, val):
    i = _slot(keys, key)
    if keys[i] == _EMPTY:
        keys[i] = key
        vals[i] = val
        count += 1
        # keep load factor <= 1/2
        if 2 * count > keys.size:
            keys, vals = _table_grow(keys, vals)
    else:
        vals[i] = val
    return keys, vals, count


def _new_table(capacity):
    size = _MIN_CAPACITY
    while size < 2 * capacity:
        size *= 2
    return np.full(size, _EMPTY, dtype=np.int64), np.zeros(size, dtype=np.float64)


# --- exact line of sight ----------------------------------------------------

@njit(cache=True, nogil=True)
def _los(occ, w, gx, gy, cx, cy, target_free):
    """Supercover traversal from the center of (gx, gy) to the center of (cx, cy).

    ``target_free`` ignores the target's own occupancy (used when assigning
    distances to obstacle cells).
    """
    if occ[gy * w + gx]:
        return False
    if not target_free and occ[cy * w + cx]:
        return False
    dx = cx - gx
    dy = cy - gy
    nx = abs(dx)
    ny = abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    x = gx
    y = gy
    ix = 0
    iy = 0
    while ix < nx or iy < ny:
        # compare crossing parameters (0.5 + ix) / nx and (0.5 + iy) / ny
        lhs = (1 + 2 * ix) * ny
        rhs = (1 + 2 * iy) * nx
        if lhs == rhs:
            if occ[y * w + x + sx] and occ[(y + sy) * w + x]:
                return False
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif lhs < rhs:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        if occ[y * w + x] and not (target_free and x == cx and y == cy):
            return False
    return True


# --- transported visibility score --------------------------------------------

@njit(cache=True, nogil=True)
def _score(occ, w, n, keys, vals, count, stack, g, c):
    """Memoized upwind score of cell ``c`` seen from pivot ``g``.

    Returns ``(keys, vals, count, score, inserted)``. The explicit stack only
    ever holds a chain toward the pivot, so ``len(stack) >= width + height``
    suffices.
    """
    base = g * n
    v = _table_get(keys, vals, base + c)
    if v >= 0.0:
        return keys, vals, count, v, 0
    gx = g % w
    gy = g // w
    # common case: both upwind scores are already stored
    if not occ[c] and c != g:
        dx = c % w - gx
        dy = c // w - gy
        wa = abs(dx)
        wb = abs(dy)
        va = 0.0 if wa == 0 else _table_get(keys, vals, base + (c - 1 if dx > 0 else c + 1))
        vb = 0.0 if wb == 0 else _table_get(keys, vals, base + (c - w if dy > 0 else c + w))
        if va >= 0.0 and vb >= 0.0:
            v = (wa * va + wb * vb) / (wa + wb)
            keys, vals, count = _table_put(keys, vals, count, base + c, v)
            return keys, vals, count, v, 1
    start = count
    sp = 0
    stack[0] = c
    val = 0.0
    while sp >= 0:
        t = stack[sp]
        if occ[t]:
            val = 0.0
        elif t == g:
            val = 1.0
        else:
            tx = t % w
            ty = t // w
            dx = tx - gx
            dy = ty - gy
            wa = abs(dx)
            wb = abs(dy)
            va = 0.0
            vb = 0.0
            if wa > 0:
                a = t - 1 if dx > 0 else t + 1
                va = _table_get(keys, vals, base + a)
                if va < 0.0:
                    sp += 1
                    stack[sp] = a
                    continue
            if wb > 0:
                b = t - w if dy > 0 else t + w
                vb = _table_get(keys, vals, base + b)
                if vb < 0.0:
                    sp += 1
                    stack[sp] = b
                    continue
            val = (wa * va + wb * vb) / (wa + wb)
        keys, vals, count = _table_put(keys, vals, count, base + t, val)
        sp -= 1
    # the last value stored is the one for c
    return keys, vals, count, val, count - start


@njit(cache=True, nogil=True)
def _score_into(occ, w, n, keys, vals, count, stack, g, c):
    """Score of an occupied ``c`` computed as if it were free (not stored)."""
    gx = g % w
    gy = g // w
    dx = c % w - gx
    dy = c // w - gy
    wa = abs(dx)
    wb = abs(dy)
    va = 0.0
    vb = 0.0
    if wa > 0:
        keys, vals, count, va, _ = _score(occ, w, n, keys, vals, count, stack, g, c - 1 if dx > 0 else c + 1)
    if wb > 0:
        keys, vals, count, vb, _ = _score(occ, w, n, keys, vals, count, stack, g, c - w if dy > 0 else c + w)
    if wa + wb == 0:
        return keys, vals, count, 1.0
    return keys, vals, count, (wa * va + wb * vb) / (wa + wb)


@njit(cache=True, nogil=True)
def _visible(occ, w, n, keys, vals, count, stack, backend, tau, g, c, target_free):
    """Memoized visibility test; returns ``(visible, keys, vals, count)``."""
    if target_free:
        if backend == EXACT:
            return _los(occ, w, g % w, g // w, c % w, c // w, True), keys, vals, count
        keys, vals, count, s = _score_into(occ, w, n, keys, vals, count, stack, g, c)
        return s >= tau, keys, vals, count
    key = g * n + c
    s = _table_get(keys, vals, key)
    if s < 0.0:
        if backend == EXACT:
            s = 1.0 if _los(occ, w, g % w, g // w, c % w, c // w, False) else 0.0
            keys, vals, count = _table_put(keys, vals, count, key, s)
        else:
            keys, vals, count, s, _ = _score(occ, w, n, keys, vals, count, stack, g, c)
    return s >= tau, keys, vals, count


# --- Python API ----------------------------------------------------------------

class VisibilityStore:
    """Memoized per-pivot visibility scores keyed by ``(pivot, cell)``.

    The exact backend stores 1.0/0.0 line-of-sight outcomes, the dp backend
    stores transported scores. A store belongs to one grid and one backend.
    """

    def __init__(self, grid: OccupancyGrid, backend: str = "dp", tau: float = DEFAULT_TAU,
                 capacity: int | None = None):
        if backend not in BACKENDS:
            raise ValueError(f"unknown visibility backend {backend!r}")
        if not 0.0 < tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {tau}")
        self.grid = grid
        self.backend = backend
        self.tau = float(tau)
        self._occ = grid.flat()
        self._stack = np.empty(grid.width + grid.height + 2, dtype=np.int64)
        self.keys, self.vals = _new_table(capacity or grid.size)
        self.count = 0
        self.last_inserted = 0

    def __len__(self):
        return self.count

    def _key(self, g, c):
        return self.grid.index(g) * self.grid.size + self.grid.index(c)

    def get(self, g, c) -> float | None:
        """Stored score for ``(g, c)`` or None; never computes."""
        v = _table_get(self.keys, self.vals, self._key(g, c))
        return None if v < 0.0 else float(v)

    def items(self):
        """Yield ``((pivot, cell), score)`` for every stored entry."""
        n = self.grid.size
        for k, v in zip(self.keys, self.vals):
            if k != _EMPTY:
                yield (self.grid.cell(k // n), self.grid.cell(k % n)), float(v)

    def _check(self, g, c):
        if not (self.grid.in_bounds(g) and self.grid.in_bounds(c)):
            raise ContractViolation(f"cells {tuple(g)}, {tuple(c)} must lie inside the grid")

    def score(self, g, c) -> float:
        self._check(g, c)
        if self.grid.is_occupied(g):
            raise ContractViolation(f"pivot {tuple(g)} is occupied")
        before = self.count
        if self.backend == "exact":
            key = self._key(g, c)
            v = _table_get(self.keys, self.vals, key)
            if v < 0.0:
                v = 1.0 if los_exact(self.grid, g, c) else 0.0
                self.keys, self.vals, self.count = _table_put(self.keys, self.vals, self.count, key, v)
        else:
            self.keys, self.vals, self.count, v, _ = _score(
                self._occ, self.grid.width, self.grid.size, self.keys, self.vals, self.count,
                self._stack, self.grid.index(g), self.grid.index(c))
        self.last_inserted = self.count - before
        return float(v)

    def visible(self, g, c) -> bool:
        if tuple(g) == tuple(c) and self.grid.is_free(g):
            return True
        if self.grid.is_occupied(g):
            return False
        return self.score(g, c) >= self.tau


def los_exact(grid: OccupancyGrid, g, c) -> bool:
    """Exact cell-center line of sight (see module docstring)."""
    if not (grid.in_bounds(g) and grid.in_bounds(c)):
        raise ContractViolation(f"cells {tuple(g)}, {tuple(c)} must lie inside the grid")
    return bool(_los(grid.flat(), grid.width, g[0], g[1], c[0], c[1], False))


def score_dp(store: VisibilityStore, grid: OccupancyGrid, g, c) -> float:
    """Upwind visibility score of ``c`` from pivot ``g``, memoized in ``store``."""
    if store.grid is not grid and store.grid != grid:
        raise ContractViolation("store was built for a different grid")
    if store.backend != "dp":
        raise ContractViolation("score_dp needs a dp-backend store")
    return store.score(g, c)


def visible(store: VisibilityStore, grid: OccupancyGrid, backend: str, g, c) -> bool:
    if backend == "exact":
        if tuple(g) == tuple(c):
            return grid.is_free(g)
        return los_exact(grid, g, c)
    if backend != "dp":
        raise ValueError(f"unknown visibility backend {backend!r}")
    return score_dp(store, grid, g, c) >= store.tau if not grid.is_occupied(g) else False
