"""Analytic distance functions between cell centers.

Distances are in pixel units. The numba-compiled ``_dist`` is what the
marching kernels call; :func:`distance` is the Python-facing wrapper.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

MINKOWSKI = 0
CHEBYSHEV = 1
QUASI_EUCLIDEAN = 2

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Metric:
    """A distance function family member.

    ``kind`` is ``"minkowski"`` (with order ``p``, ``math.inf`` allowed) or
    ``"quasi_euclidean"``.
    """

    kind: str = "minkowski"
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in ("minkowski", "quasi_euclidean"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "minkowski":
            if not (self.p == math.inf or (self.p >= 1 and float(self.p).is_integer())):
                raise ValueError(f"Minkowski order must be a positive integer or inf, got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "Metric":
        """Build a metric from its CLI name.

        Accepted: ``euclidean``, ``manhattan``, ``cubic``, ``chebyshev``,
        ``quasi-euclidean`` and ``minkowski:<p>`` (``<p>`` may be ``inf``).
        """
        name = text.strip().lower()
        named = {
            "euclidean": cls("minkowski", 2.0),
            "manhattan": cls("minkowski", 1.0),
            "cubic": cls("minkowski", 3.0),
            "chebyshev": cls("minkowski", math.inf),
            "quasi-euclidean": cls("quasi_euclidean"),
            "quasi_euclidean": cls("quasi_euclidean"),
        }
        if name in named:
            return named[name]
        if name.startswith("minkowski:"):
            order = name.split(":", 1)[1]
            try:
                p = math.inf if order in ("inf", "infinity") else float(order)
            except ValueError:
                raise ValueError(f"bad Minkowski order in {text!r}") from None
            return cls("minkowski", p)
        raise ValueError(f"unknown metric {text!r}")

    @property
    def code(self) -> tuple[int, float]:
        """(kind code, order) as consumed by the compiled kernels."""
        if self.kind == "quasi_euclidean":
            return QUASI_EUCLIDEAN, 0.0
        if self.p == math.inf:
            return CHEBYSHEV, math.inf
        return MINKOWSKI, float(self.p)

    def __str__(self):
        if self.kind == "quasi_euclidean":
            return "quasi-euclidean"
        names = {1.0: "manhattan", 2.0: "euclidean", 3.0: "cubic", math.inf: "chebyshev"}
        return names.get(self.p, f"minkowski:{self.p:g}")


EUCLIDEAN = Metric("minkowski", 2.0)


@njit(cache=True, nogil=True)
def _dist(kind, p, dx, dy):
    ax = abs(float(dx))
    ay = abs(float(dy))
    if kind == QUASI_EUCLIDEAN:
        lo = min(ax, ay)
        return abs(ax - ay) + _SQRT2 * lo
    if kind == CHEBYSHEV:
        return max(ax, ay)
    if p == 2.0:
        return math.hypot(ax, ay)
    if p == 1.0:
        return ax + ay
    hi = max(ax, ay)
    if hi == 0.0:
        return 0.0
    # scale by the larger offset so large p cannot overflow
    rx = ax / hi
    ry = ay / hi
    return hi * (rx ** p + ry ** p) ** (1.0 / p)


def distance(m: Metric, a, b) -> float:
    """Distance between the centers of cells ``a`` and ``b`` (``(x, y)`` pairs)."""
    kind, p = m.code
    return _dist(kind, p, b[0] - a[0], b[1] - a[1])
