from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from helpers import los_parametric, random_instances
from vbm.errors import ContractViolation
from vbm.grid import OccupancyGrid, random_grid
from vbm.oracle import oracle_los
from vbm.visibility import VisibilityStore, los_exact, score_dp, visible


@pytest.fixture
def single():
    occ = np.zeros((5, 5), dtype=bool)
    occ[2, 2] = True
    return OccupancyGrid(occ)


def recursion_oracle(occupied, g):
    """Hand-rolled memoized upwind recursion in exact rationals."""
    @lru_cache(maxsize=None)
    def s(x, y):
        if occupied[y][x]:
            return Fraction(0)
        if (x, y) == g:
            return Fraction(1)
        dx, dy = x - g[0], y - g[1]
        sx, sy = (dx > 0) - (dx < 0), (dy > 0) - (dy < 0)
        num = Fraction(0)
        if dx:
            num += abs(dx) * s(x - sx, y)
        if dy:
            num += abs(dy) * s(x, y - sy)
        return num / (abs(dx) + abs(dy))
    return s


def test_empty_grid_los():
    g = OccupancyGrid.empty(7, 5)
    assert all(los_exact(g, a, b) for a in g.free_cells() for b in g.free_cells())


def test_blocked_through_center(single):
    assert not los_exact(single, (0, 0), (4, 4))


def test_supercover_case_matches_parametric_stepping(single):
    # stepping oracle at 1e-4 resolution: the segment enters the (2, 2) square
    assert los_parametric(single, (0, 0), (4, 3)) is False
    assert los_exact(single, (0, 0), (4, 3)) is False


def test_grazing_a_corner_is_clear(single):
    # passes exactly through the corner (2, 2) of the obstacle square
    assert los_exact(single, (0, 1), (2, 3)) is True


def test_diagonal_pinch_blocks():
    g = OccupancyGrid.from_strings([".@", "@."])
    assert not los_exact(g, (0, 0), (1, 1))
    g = OccupancyGrid.from_strings([".@.", "@..", "..."])
    assert not los_exact(g, (0, 0), (2, 2))


def test_los_agrees_with_geometric_oracle():
    for grid, _ in random_instances(6, size=14, seed=3):
        free = grid.free_cells()
        for a in free[::3]:
            for b in free[::2]:
                assert los_exact(grid, a, b) == oracle_los(grid, a, b), (a, b)


def test_los_symmetric():
    rng = np.random.default_rng(7)
    grid = random_grid(20, 20, 0.25, rng)
    free = grid.free_cells()
    for _ in range(500):
        a, b = (free[i] for i in rng.integers(len(free), size=2))
        assert los_exact(grid, a, b) == los_exact(grid, b, a)


def test_score_examples(single):
    store = VisibilityStore(single, "dp")
    assert score_dp(store, single, (0, 0), (2, 3)) == pytest.approx(0.4, abs=1e-15)
    s44 = score_dp(store, single, (0, 0), (4, 4))
    assert s44 == pytest.approx(17 / 35, abs=1e-15)
    assert s44 < 0.5
    assert not visible(store, single, "dp", (0, 0), (4, 4))


def test_score_matches_rational_recursion():
    rng = np.random.default_rng(11)
    for _ in range(5):
        grid = random_grid(12, 9, 0.2, rng)
        free = grid.free_cells()
        g = free[int(rng.integers(len(free)))]
        oracle = recursion_oracle(grid.occupied.tolist(), tuple(g))
        store = VisibilityStore(grid, "dp")
        for y in range(grid.height):
            for x in range(grid.width):
                assert store.score(g, (x, y)) == pytest.approx(float(oracle(x, y)), abs=1e-12)


def test_empty_grid_scores_are_one():
    g = OccupancyGrid.empty(9, 6)
    store = VisibilityStore(g, "dp")
    for c in g.free_cells():
        assert store.score((4, 2), c) == 1.0


def test_store_invariants(single):
    store = VisibilityStore(single, "dp")
    store.score((0, 0), (4, 4))
    assert store.get((0, 0), (0, 0)) == 1.0
    assert store.get((0, 0), (2, 2)) == 0.0
    assert all(0.0 <= v <= 1.0 for _, v in store.items())


def test_memoized_second_query(single):
    store = VisibilityStore(single, "dp")
    first = store.score((0, 0), (4, 4))
    assert store.last_inserted > 0
    size = len(store)
    assert store.score((0, 0), (4, 4)) == first
    assert store.last_inserted == 0 and len(store) == size


def test_occupied_pivot_rejected(single):
    with pytest.raises(ContractViolation):
        score_dp(VisibilityStore(single, "dp"), single, (2, 2), (0, 0))


def test_self_visible_both_backends(single):
    store = VisibilityStore(single, "dp")
    for backend in ("exact", "dp"):
        assert visible(store, single, backend, (1, 1), (1, 1))


def test_walled_in_cell_invisible():
    g = OccupancyGrid.from_strings([".....", ".@@@.", ".@.@.", ".@@@.", "....."])
    store = VisibilityStore(g, "dp")
    for c in g.free_cells():
        if c != (2, 2):
            assert not visible(store, g, "exact", c, (2, 2))
            assert not visible(store, g, "dp", c, (2, 2))


def test_single_obstacle_dp_blocks(single):
    assert not visible(VisibilityStore(single, "dp"), single, "dp", (0, 0), (4, 4))


def test_backends_agree_on_empty_grid():
    g = OccupancyGrid.empty(8, 8)
    store = VisibilityStore(g, "dp")
    for a in g.free_cells():
        for b in g.free_cells():
            assert visible(store, g, "dp", a, b) == los_exact(g, a, b)


def test_backend_agreement_rate_reported():
    """Measured, not asserted per pair: agreement between exact and dp on random grids."""
    agree = total = 0
    rng = np.random.default_rng(5)
    for grid, g in random_instances(100, size=32, densities=(0.2,), seed=21):
        store = VisibilityStore(grid, "dp")
        targets = grid.free_cells()
        for i in rng.choice(len(targets), size=min(40, len(targets)), replace=False):
            c = targets[int(i)]
            agree += store.visible(g, c) == los_exact(grid, g, c)
            total += 1
    rate = agree / total
    print(f"exact/dp visibility agreement on 32x32 @20%: {rate:.4f} over {total} pairs")
    assert rate >= 0.95
