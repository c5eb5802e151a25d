"""Per-day signed market graphs.

Each trading day induces a complete signed graph on the asset universe:
two assets are joined positively when their returns deviate from their
window means on the same side, negatively when they deviate on opposite
sides. Because the edge sign is the product of the two per-asset deviation
signs, every day graph is structurally balanced: its vertices split into
(at most) two camps with positive edges inside camps and negative edges
across, so no triangle carries exactly one or exactly three negative
edges. The whole day graph is therefore fully described by one sign per
vertex, which is what this module stores.

A generic edge-sign representation (:class:`EdgeSignMap`) exists for test
fixtures that need unbalanced graphs; it is a separate type so sign-vector
graphs and hand-built graphs cannot be confused.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError
from .market_data import ReturnPanel

MEAN_ATOL = 1e-12
DEV_ROW_SUM_ATOL = 1e-9


class TriangleType(enum.Enum):
    """Signed triangle classes, indexed by negative-edge count.

    T0 and T2 are balanced; T1 and T3 are not and never occur in a
    deviation day graph.
    """

    T0 = 0
    T1 = 1
    T2 = 2
    T3 = 3


class FourCliqueType(enum.Enum):
    """Signed 4-clique patterns, named by their negative-edge subgraph.

    B0
        No negative edges (all four vertices in one camp).
    B1
        Exactly one negative edge. Unbalanced; unreachable from day signs.
    B2
        Three negative edges forming a star: one apex vertex negatively
        joined to an all-positive triangle. This is the pattern whose count
        drives the kurtosis-motivated objective.
    B3
        Three negative edges forming a triangle. Unbalanced; unreachable
        from day signs.
    B4
        Four negative edges forming a 4-cycle (two camps of two).
    """

    B0 = "B0"
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"
    B4 = "B4"


@dataclass(frozen=True)
class DeviationMatrix:
    """Per-window return deviations ``devs[i, t] = returns[i, t] - mean_i``.

    Rows sum to zero by construction (within floating tolerance), and the
    stored means match the row means of the source returns.
    """

    devs: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        devs = np.array(self.devs, dtype=np.float64)
        means = np.array(self.means, dtype=np.float64)
        if devs.ndim != 2 or means.shape != (devs.shape[0],):
            raise DomainError("deviations must be N x T with one mean per row")
        devs.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "devs", devs)
        object.__setattr__(self, "means", means)
        if devs.shape[1]:
            row_sums = np.abs(devs.sum(axis=1))
            if (row_sums >= DEV_ROW_SUM_ATOL * devs.shape[1]).any():
                raise DomainError("deviation rows must sum to ~0; wrong means?")

    @property
    def n_assets(self) -> int:
        return self.devs.shape[0]

    @property
    def n_days(self) -> int:
        return self.devs.shape[1]

    @cached_property
    def sign_matrix(self) -> np.ndarray:
        """N x T matrix of day signs; zero deviations count as +1."""
        signs = np.where(self.devs >= 0, 1, -1).astype(np.int8)
        signs.setflags(write=False)
        return signs


@dataclass(frozen=True)
class DaySignVector:
    """One day's vertex signs; the day graph's complete description.

    The edge between distinct ``i`` and ``j`` has sign
    ``signs[i] * signs[j]``.
    """

    signs: np.ndarray
    day: int

    def __post_init__(self):
        signs = np.array(self.signs, dtype=np.int8)
        if signs.ndim != 1:
            raise DomainError("day signs must be a vector")
        if not np.isin(signs, (-1, 1)).all():
            raise DomainError("day signs must be +1/-1")
        signs.setflags(write=False)
        object.__setattr__(self, "signs", signs)

    @property
    def n(self) -> int:
        return len(self.signs)

    @property
    def n_pos(self) -> int:
        return int((self.signs > 0).sum())

    @property
    def n_neg(self) -> int:
        return self.n - self.n_pos


class EdgeSignMap:
    """Explicit edge-sign table for hand-built (possibly unbalanced) graphs.

    Test-fixture representation: a symmetric matrix of +1/-1 off the
    diagonal. Kept distinct from :class:`DaySignVector` on purpose.
    """

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=np.int8)
        n = matrix.shape[0]
        if matrix.ndim != 2 or matrix.shape != (n, n):
            raise DomainError("edge-sign matrix must be square")
        off = ~np.eye(n, dtype=bool)
        if not np.isin(matrix[off], (-1, 1)).all():
            raise DomainError("off-diagonal entries must be +1/-1")
        if (matrix != matrix.T).any():
            raise DomainError("edge-sign matrix must be symmetric")
        np.fill_diagonal(matrix, 0)
        matrix.setflags(write=False)
        self.matrix = matrix
        self.n = n

    @classmethod
    def from_day_signs(cls, sv: DaySignVector) -> "EdgeSignMap":
        signs = sv.signs.astype(np.int8)
        return cls(np.outer(signs, signs))

    @classmethod
    def from_negative_edges(cls, n: int, negative_edges) -> "EdgeSignMap":
        """All-positive graph on ``n`` vertices with the listed edges negated."""
        matrix = np.ones((n, n), dtype=np.int8)
        for i, j in negative_edges:
            if i == j:
                raise DomainError("self-loops have no sign")
            matrix[i, j] = matrix[j, i] = -1
        return cls(matrix)

    def sign(self, i: int, j: int) -> int:
        if i == j:
            raise DomainError("self-pairs have no edge sign")
        return int(self.matrix[i, j])


@dataclass(frozen=True)
class WeightedSignedGraph:
    """Signed graph weighted by a pairwise statistic (covariance/correlation).

    Without thresholds every nonzero entry is an edge carrying the entry's
    sign. With thresholds ``(tau_neg, tau_pos)``, an edge exists only where
    the weight exceeds ``tau_pos`` or falls below ``tau_neg``.
    """

    weights: np.ndarray
    present: np.ndarray
    thresholds: tuple[float, float] | None

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def sign(self, i: int, j: int) -> int:
        if i == j:
            raise DomainError("self-pairs have no edge sign")
        if not self.present[i, j]:
            raise DomainError(f"no edge between {i} and {j}")
        return 1 if self.weights[i, j] > 0 else -1


def deviations(returns) -> DeviationMatrix:
    """Build a :class:`DeviationMatrix` from a return panel or raw N x T array."""
    if isinstance(returns, ReturnPanel):
        returns = returns.returns
    returns = np.asarray(returns, dtype=np.float64)
    if returns.ndim != 2:
        raise DomainError("returns must be an N x T matrix")
    if returns.shape[1] == 0:
        raise DomainError("returns must cover at least one day")
    means = returns.mean(axis=1)
    return DeviationMatrix(devs=returns - means[:, None], means=means)


def day_signs(dev: DeviationMatrix, t: int) -> DaySignVector:
    """Sign vector of day ``t``; the complete description of that day's graph."""
    if not 0 <= t < dev.n_days:
        raise DomainError(f"day index {t} out of range [0, {dev.n_days})")
    return DaySignVector(signs=dev.sign_matrix[:, t], day=t)


def _pair_sign(graph, i: int, j: int) -> int:
    if i == j:
        raise DomainError("self-pairs have no edge sign")
    if isinstance(graph, DaySignVector):
        n = graph.n
        if not (0 <= i < n and 0 <= j < n):
            raise DomainError(f"vertex index out of range [0, {n})")
        return int(graph.signs[i]) * int(graph.signs[j])
    if isinstance(graph, EdgeSignMap):
        return graph.sign(i, j)
    raise TypeError(f"expected DaySignVector or EdgeSignMap, got {type(graph).__name__}")


def edge_sign(sv: DaySignVector, i: int, j: int) -> int:
    """Sign of the edge between distinct vertices ``i`` and ``j``."""
    return _pair_sign(sv, i, j)


def classify_triangle(graph, i: int, j: int, k: int) -> TriangleType:
    """Classify a triangle by its negative-edge count.

    ``graph`` may be a :class:`DaySignVector` or an :class:`EdgeSignMap`.
    """
    if len({i, j, k}) != 3:
        raise DomainError("triangle vertices must be distinct")
    negatives = sum(
        1 for a, b in ((i, j), (i, k), (j, k)) if _pair_sign(graph, a, b) < 0
    )
    return TriangleType(negatives)


def classify_four_clique(graph, i: int, j: int, k: int, l: int) -> FourCliqueType:
    """Classify a 4-clique by the shape of its negative-edge subgraph.

    The five recognised patterns are those of :class:`FourCliqueType`;
    the negative-edge count plus the negative subgraph's degree sequence
    separates them unambiguously on four vertices. Day-sign graphs only
    ever produce B0 (signs split 0-4), B2 (split 1-3), or B4 (split 2-2).

    Raises
    ------
    DomainError
        Non-distinct vertices, or a sign arrangement outside the five
        recognised patterns (possible only for hand-built graphs).
    """
    quad = (i, j, k, l)
    if len(set(quad)) != 4:
        raise DomainError("4-clique vertices must be distinct")
    neg_deg = [0, 0, 0, 0]
    n_neg = 0
    for a in range(4):
        for b in range(a + 1, 4):
            if _pair_sign(graph, quad[a], quad[b]) < 0:
                n_neg += 1
                neg_deg[a] += 1
                neg_deg[b] += 1
    if n_neg == 0:
        return FourCliqueType.B0
    if n_neg == 1:
        return FourCliqueType.B1
    if n_neg == 3:
        if max(neg_deg) == 3:
            return FourCliqueType.B2
        if sorted(neg_deg) == [0, 2, 2, 2]:
            return FourCliqueType.B3
    if n_neg == 4 and all(d == 2 for d in neg_deg):
        return FourCliqueType.B4
    raise DomainError(
        f"negative subgraph with {n_neg} edges and degrees {sorted(neg_deg)} "
        "matches no recognised 4-clique pattern"
    )


def is_balanced(graph) -> bool:
    """Whether the signed graph splits into two camps (positive inside,
    negative across), equivalently whether every cycle has an even number
    of negative edges.

    Sign-vector graphs are balanced by construction; this remains a real
    check so hand-built :class:`EdgeSignMap` fixtures are judged honestly.
    """
    if isinstance(graph, DaySignVector):
        graph = EdgeSignMap.from_day_signs(graph)
    if not isinstance(graph, EdgeSignMap):
        raise TypeError(f"expected DaySignVector or EdgeSignMap, got {type(graph).__name__}")
    n = graph.n
    camp = np.zeros(n, dtype=np.int8)
    for start in range(n):
        if camp[start]:
            continue
        camp[start] = 1
        stack = [start]
        while stack:
            u = stack.pop()
            for v in range(n):
                if v == u:
                    continue
                want = camp[u] * graph.matrix[u, v]
                if camp[v] == 0:
                    camp[v] = want
                    stack.append(v)
                elif camp[v] != want:
                    return False
    return True


def build_weighted_graph(matrix, thresholds: tuple[float, float] | None = None) -> WeightedSignedGraph:
    """Signed graph from a symmetric pairwise-statistic matrix.

    With ``thresholds=None`` every nonzero off-diagonal entry is an edge;
    otherwise ``thresholds = (tau_neg, tau_pos)`` must satisfy
    ``-1 < tau_neg < 0 < tau_pos < 1`` and only entries outside
    ``[tau_neg, tau_pos]`` become edges.
    """
    weights = np.array(matrix, dtype=np.float64)
    n = weights.shape[0]
    if weights.ndim != 2 or weights.shape != (n, n):
        raise DomainError("weight matrix must be square")
    if not np.allclose(weights, weights.T, atol=0, rtol=0, equal_nan=False):
        raise DomainError("weight matrix must be symmetric")
    if thresholds is None:
        present = weights != 0.0
    else:
        tau_neg, tau_pos = thresholds
        if not (-1.0 < tau_neg < 0.0 < tau_pos < 1.0):
            raise DomainError(
                f"thresholds must satisfy -1 < tau_neg < 0 < tau_pos < 1, got {thresholds}"
            )
        present = (weights > tau_pos) | (weights < tau_neg)
    np.fill_diagonal(present, False)
    weights.setflags(write=False)
    present.setflags(write=False)
    return WeightedSignedGraph(weights=weights, present=present, thresholds=thresholds)


def dump_day_edges(sv: DaySignVector, fh) -> None:
    """Write one ``i j sign`` line per edge of a day graph (debug helper)."""
    for i in range(sv.n):
        for j in range(i + 1, sv.n):
            fh.write(f"{i} {j} {edge_sign(sv, i, j):+d}\n")
