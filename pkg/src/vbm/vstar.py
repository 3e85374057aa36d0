"""Goal-directed variant of the march.

Same expansion rule as :func:`vbm.marching.march`, but the queue is ordered
by ``dist + metric(cell, goal)`` and the search stops once the goal is popped.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolation
from .grid import Cell, OccupancyGrid
from .marching import MarchResult, Path, _check_sources, extract_path, run_kernel
from .metric import EUCLIDEAN, Metric
from .visibility import DEFAULT_TAU


@dataclass(frozen=True)
class VStarResult:
    path: Path
    length: float
    popped_count: int
    march: MarchResult

    @property
    def reachable(self) -> bool:
        return self.path.reachable


def vstar(grid: OccupancyGrid, source, goal, metric: Metric = EUCLIDEAN, backend: str = "dp",
          tau: float = DEFAULT_TAU, *, no_corner_cut: bool = True) -> VStarResult:
    """Shortest path from ``source`` to ``goal``.

    An unreachable goal gives ``path.reachable == False`` and an infinite
    length once the queue is exhausted.
    """
    (src,) = _check_sources(grid, [source])
    goal = Cell(int(goal[0]), int(goal[1]))
    if not grid.in_bounds(goal) or grid.is_occupied(goal):
        raise ContractViolation(f"goal {tuple(goal)} must be a free in-bounds cell")
    result = run_kernel(grid, (src,), metric, backend, tau, no_corner_cut, False, None, goal)
    path = extract_path(result, goal)
    return VStarResult(path, path.length, result.popped_count, result)
