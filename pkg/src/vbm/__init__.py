"""Exact one-to-all path planning on occupancy grids by visibility-based marching."""
from .errors import ContractViolation
from .grid import Cell, MapParseError, OccupancyGrid, neighbors8, parse_movingai_map, parse_pgm
from .marching import MarchResult, Path, extract_path, march
from .metric import Metric, distance
from .visibility import VisibilityStore, los_exact, score_dp, visible

__all__ = [
    "Cell", "ContractViolation", "MapParseError", "MarchResult", "Metric", "OccupancyGrid",
    "Path", "VisibilityStore", "distance", "extract_path", "los_exact", "march",
    "neighbors8", "parse_movingai_map", "parse_pgm", "score_dp", "visible",
]
