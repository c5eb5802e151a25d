"""Signed-motif counting on day graphs.

Day graphs are two-camp complete signed graphs, so every motif count is a
function of the camp sizes (n_pos, n_neg): all-positive triangles are the
within-camp triples, and the apex pattern (B2: a positive triangle plus a
vertex negatively joined to all three) is counted by choosing the triangle
inside one camp and the apex in the other. The closed forms here are exact
integer arithmetic; the enumerated counter walks all 4-subsets of an
arbitrary edge-sign matrix and is the cross-check (and the only route for
hand-built unbalanced graphs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .signed_graph import DaySignVector, DeviationMatrix, EdgeSignMap

__all__ = [
    "DayMotifCounts",
    "MotifDensitySeries",
    "count_triangles",
    "count_b2_fast",
    "count_b2_enumerated",
    "day_motif_counts",
    "window_motif_counts",
    "b2_counts_per_day",
    "b2_density_window",
]


@dataclass(frozen=True)
class DayMotifCounts:
    """Exact motif census of one day graph.

    Triangle counts split into t0 (no negative edges) and t2 (two); 4-clique
    counts into b0/b2/b4 by camp split 4-0, 3-1, 2-2. The other patterns
    cannot occur in a balanced complete graph, so
    ``t0 + t2 == C(n, 3)`` and ``b0 + b2 + b4 == C(n, 4)``.
    """

    day: int
    n_pos: int
    n_neg: int
    t0: int
    t2: int
    b0: int
    b2: int
    b4: int

    def __post_init__(self):
        n = self.n_pos + self.n_neg
        if self.t0 + self.t2 != math.comb(n, 3):
            raise DomainError("triangle counts do not cover all triples")
        if self.b0 + self.b2 + self.b4 != math.comb(n, 4):
            raise DomainError("4-clique counts do not cover all quadruples")


@dataclass(frozen=True)
class MotifDensitySeries:
    """Per-day apex-pattern density of a fixed subset: count / C(k, 4)."""

    densities: np.ndarray
    k: int

    def __post_init__(self):
        densities = np.array(self.densities, dtype=np.float64)
        densities.setflags(write=False)
        object.__setattr__(self, "densities", densities)
        if ((densities < 0.0) | (densities > 1.0)).any():
            raise DomainError("densities must lie in [0, 1]")


def _camp_sizes(sv: DaySignVector, subset=None) -> tuple[int, int]:
    signs = sv.signs if subset is None else sv.signs[np.asarray(subset, dtype=np.intp)]
    n_pos = int((signs > 0).sum())
    return n_pos, len(signs) - n_pos


def count_triangles(sv: DaySignVector, subset=None) -> tuple[int, int]:
    """(t0, t2) triangle counts of a day graph, optionally on a subset.

    t0 = C(n_pos, 3) + C(n_neg, 3); the remaining triples are t2.
    """
    p, m = _camp_sizes(sv, subset)
    t0 = math.comb(p, 3) + math.comb(m, 3)
    return t0, math.comb(p + m, 3) - t0


def count_b2_fast(sv: DaySignVector, subset=None) -> int:
    """Apex-pattern count from camp sizes: C(p,3)*m + C(m,3)*p."""
    p, m = _camp_sizes(sv, subset)
    return math.comb(p, 3) * m + math.comb(m, 3) * p


def count_b2_enumerated(graph, subset=None) -> int:
    """Apex-pattern count by checking the six edge signs of every 4-subset.

    Accepts a :class:`DaySignVector` or a generic :class:`EdgeSignMap`;
    fewer than four vertices means no 4-subsets, hence 0.
    """
    if isinstance(graph, DaySignVector):
        matrix = np.outer(graph.signs, graph.signs).astype(np.int8)
    elif isinstance(graph, EdgeSignMap):
        matrix = graph.matrix
    else:
        raise TypeError(f"expected DaySignVector or EdgeSignMap, got {type(graph).__name__}")
    if subset is not None:
        idx = np.asarray(subset, dtype=np.intp)
        if len(np.unique(idx)) != len(idx):
            raise DomainError("subset indices must be distinct")
        matrix = np.ascontiguousarray(matrix[np.ix_(idx, idx)])
    if matrix.shape[0] < 4:
        return 0
    return int(_kernels.b2_count(matrix))


def day_motif_counts(sv: DaySignVector, subset=None, day: int | None = None) -> DayMotifCounts:
    """Full motif census of one day graph from its camp sizes."""
    p, m = _camp_sizes(sv, subset)
    t0, t2 = count_triangles(sv, subset)
    return DayMotifCounts(
        day=sv.day if day is None else day,
        n_pos=p,
        n_neg=m,
        t0=t0,
        t2=t2,
        b0=math.comb(p, 4) + math.comb(m, 4),
        b2=count_b2_fast(sv, subset),
        b4=math.comb(p, 2) * math.comb(m, 2),
    )


def window_motif_counts(dev: DeviationMatrix, subset=None) -> list[DayMotifCounts]:
    """Motif census per day of a window, optionally restricted to a subset."""
    from .signed_graph import day_signs

    return [day_motif_counts(day_signs(dev, t), subset) for t in range(dev.n_days)]


def _comb3(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) * (x - 2) // 6


def b2_counts_per_day(dev: DeviationMatrix, subset=None) -> np.ndarray:
    """Exact apex-pattern count for each day, vectorised over the window."""
    signs = dev.sign_matrix
    if subset is not None:
        idx = np.asarray(subset, dtype=np.intp)
        if len(np.unique(idx)) != len(idx):
            raise DomainError("subset indices must be distinct")
        signs = signs[idx]
    k = signs.shape[0]
    p = (signs > 0).sum(axis=0).astype(np.int64)
    m = k - p
    return _comb3(p) * m + _comb3(m) * p


def b2_density_window(dev: DeviationMatrix, subset=None) -> MotifDensitySeries:
    """Per-day apex-pattern density of a subset: count / C(k, 4).

    Subsets smaller than four vertices have no 4-subsets; their density is
    identically zero.
    """
    k = dev.n_assets if subset is None else len(subset)
    counts = b2_counts_per_day(dev, subset)
    if k < 4:
        return MotifDensitySeries(densities=np.zeros(dev.n_days), k=k)
    return MotifDensitySeries(densities=counts / math.comb(k, 4), k=k)
