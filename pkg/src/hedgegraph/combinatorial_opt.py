"""Subset selection for the combined hedge/motif objective.

The objective of a K-subset S over a window is

    sum_{i in S} h_i * mu_i  +  sum_t count_t(S) / C(K, 4)

where h are full-universe hedge scores, mu are window mean returns, and
count_t(S) is the day-t apex-pattern count inside S. The first term is
separable; the second couples assets, which is what makes exact search a
combinatorial problem (it embeds CLIQUE, see
:func:`build_clique_reduction`). Exhaustive search is provided under an
explicit enumeration budget; beyond it, a deterministic greedy build plus
1-swap local search is the supported route.

Day graphs are two-camp, so count_t(S) only depends on how many members of
S sit in the positive camp that day. All searches therefore maintain one
integer per day (the positive-camp occupancy of the current subset), making
candidate evaluation O(T).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, DomainError
from .motif_count import count_b2_enumerated
from .signed_graph import DeviationMatrix, EdgeSignMap

__all__ = [
    "SubsetObjective",
    "ExactResult",
    "GreedyResult",
    "ReductionInstance",
    "subset_objective",
    "exact_search",
    "greedy_search",
    "build_clique_reduction",
    "verify_reduction",
    "read_edge_list",
]

DEFAULT_ENUM_BUDGET = 2_000_000
VERIFY_MAX_VERTICES = 10
_CHUNK = 4096


@dataclass(frozen=True)
class SubsetObjective:
    """Objective breakdown: separable hedge term + per-day motif density sum."""

    hedge_term: float
    motif_term: float

    @property
    def total(self) -> float:
        return self.hedge_term + self.motif_term


@dataclass(frozen=True)
class ExactResult:
    subset: tuple[int, ...]
    objective: SubsetObjective
    evaluations: int


@dataclass(frozen=True)
class GreedyResult:
    subset: tuple[int, ...]
    objective: SubsetObjective
    trace: tuple[float, ...]
    evaluations: int
    locally_optimal: bool


@dataclass(frozen=True)
class ReductionInstance:
    """Signed graph encoding a clique question as a motif-threshold question.

    Vertices 0..n-1 mirror the source graph (positive edge iff source edge);
    vertex ``apex = n`` is negatively joined to everything, and every source
    non-edge is also negative. The source graph has a clique of size
    ``clique_size`` iff some ``subset_size``-subset of this signed graph
    contains at least ``threshold`` apex patterns.
    """

    adjacency: np.ndarray
    signed: EdgeSignMap
    apex: int
    clique_size: int
    subset_size: int
    threshold: int


def _check_adjacency(adjacency) -> np.ndarray:
    adj = np.array(adjacency, dtype=bool)
    n = adj.shape[0]
    if adj.ndim != 2 or adj.shape != (n, n):
        raise DomainError("adjacency must be a square matrix")
    if (adj != adj.T).any():
        raise DomainError("adjacency must be symmetric")
    if adj.diagonal().any():
        raise DomainError("adjacency must have no self-loops")
    return adj


def _selection_scores(dev: DeviationMatrix, h, means) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    if h.shape != (dev.n_assets,) or means.shape != (dev.n_assets,):
        raise DomainError("h and means must have one entry per asset")
    return h * means


def _comb3_int(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) * (x - 2) // 6


def _motif_counts_from_occupancy(p: np.ndarray, k: int) -> np.ndarray:
    """Apex-pattern counts from positive-camp occupancy, any array shape."""
    m = k - p
    return _comb3_int(p) * m + _comb3_int(m) * p


def _candidate_order(n: int, tickers) -> list[int]:
    if tickers is None:
        return list(range(n))
    tickers = list(tickers)
    if len(tickers) != n:
        raise DomainError("one ticker per asset required")
    return sorted(range(n), key=lambda i: tickers[i])


def subset_objective(dev: DeviationMatrix, h, means, subset) -> SubsetObjective:
    """Evaluate the combined objective of one subset.

    Subsets with fewer than four members have no 4-subsets, so their motif
    term is zero.
    """
    idx = np.asarray(subset, dtype=np.intp)
    if idx.size == 0:
        raise DomainError("subset must be non-empty")
    if len(np.unique(idx)) != len(idx):
        raise DomainError("subset indices must be distinct")
    if idx.min() < 0 or idx.max() >= dev.n_assets:
        raise DomainError("subset index out of range")
    scores = _selection_scores(dev, h, means)
    hedge = float(scores[idx].sum())
    k = len(idx)
    if k < 4:
        return SubsetObjective(hedge_term=hedge, motif_term=0.0)
    p = (dev.sign_matrix[idx] > 0).sum(axis=0).astype(np.int64)
    motif = float(_motif_counts_from_occupancy(p, k).sum() / math.comb(k, 4))
    return SubsetObjective(hedge_term=hedge, motif_term=motif)


def exact_search(
    dev: DeviationMatrix,
    h,
    means,
    k: int,
    *,
    tickers=None,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> ExactResult:
    """Exhaustive search over all C(N, K) subsets.

    Refuses instances whose enumeration would exceed ``budget`` subsets
    (use :func:`greedy_search` there). Ties resolve to the subset whose
    ticker tuple is lexicographically smallest (index order when no
    tickers are given).
    """
    n = dev.n_assets
    if not 1 <= k <= n:
        raise DomainError(f"k={k} out of range [1, {n}]")
    n_subsets = math.comb(n, k)
    if n_subsets > budget:
        raise BudgetExceededError(
            f"C({n}, {k}) = {n_subsets} subsets exceeds the enumeration budget "
            f"{budget}; use greedy_search instead"
        )
    scores = _selection_scores(dev, h, means)
    order = _candidate_order(n, tickers)
    pos = (dev.sign_matrix > 0).astype(np.int64)
    denom = math.comb(k, 4)

    best_total = -np.inf
    best_subset: tuple[int, ...] | None = None
    best_objective: SubsetObjective | None = None
    combos = itertools.combinations(order, k)
    evaluations = 0
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp)
        hedge = scores[idx].sum(axis=1)
        if denom:
            occupancy = pos[idx].sum(axis=1)
            motif = _motif_counts_from_occupancy(occupancy, k).sum(axis=1) / denom
        else:
            motif = np.zeros(len(chunk))
        totals = hedge + motif
        arg = int(np.argmax(totals))
        evaluations += len(chunk)
        if totals[arg] > best_total:
            best_total = float(totals[arg])
            best_subset = tuple(sorted(chunk[arg]))
            best_objective = SubsetObjective(float(hedge[arg]), float(motif[arg]))
    assert best_subset is not None and best_objective is not None
    return ExactResult(subset=best_subset, objective=best_objective, evaluations=evaluations)


def greedy_search(
    dev: DeviationMatrix,
    h,
    means,
    k: int,
    *,
    tickers=None,
    swap_budget: int | None = None,
) -> GreedyResult:
    """Forward greedy build followed by best-improvement 1-swap local search.

    The build starts from the best singleton and adds the asset with the
    largest objective gain at each size. The swap phase repeatedly applies
    the best strictly-improving (drop, add) exchange until none exists or
    ``swap_budget`` candidate evaluations (default ``10 * N * K``) are
    spent. The recorded trace holds the objective of the completed size-K
    build followed by one entry per accepted swap, and never decreases.
    Ties resolve toward lexicographically smaller tickers (index order when
    no tickers are given).
    """
    n, t = dev.n_assets, dev.n_days
    if not 1 <= k <= n:
        raise DomainError(f"k={k} out of range [1, {n}]")
    if swap_budget is None:
        swap_budget = 10 * n * k
    scores = _selection_scores(dev, h, means)
    order = np.array(_candidate_order(n, tickers), dtype=np.intp)
    rank = np.empty(n, dtype=np.intp)
    rank[order] = np.arange(n)
    pos = (dev.sign_matrix > 0).astype(np.int64)

    # State: members in insertion order, per-day positive-camp occupancy.
    members: list[int] = []
    in_subset = np.zeros(n, dtype=bool)
    occupancy = np.zeros(t, dtype=np.int64)
    hedge_cur = 0.0
    evaluations = 0

    for size in range(1, k + 1):
        cands = order[~in_subset[order]]
        hedge_new = hedge_cur + scores[cands]
        denom = math.comb(size, 4)
        if denom:
            occ_new = occupancy[None, :] + pos[cands]
            motif_new = _motif_counts_from_occupancy(occ_new, size).sum(axis=1) / denom
        else:
            motif_new = np.zeros(len(cands))
        totals = hedge_new + motif_new
        evaluations += len(cands)
        arg = int(np.argmax(totals))
        chosen = int(cands[arg])
        members.append(chosen)
        in_subset[chosen] = True
        occupancy += pos[chosen]
        hedge_cur = hedge_cur + scores[chosen]
        cur_total = float(totals[arg])

    trace = [cur_total]
    denom = math.comb(k, 4)
    locally_optimal = False
    swap_evals = 0
    while True:
        outside = order[~in_subset[order]]
        scan_cost = len(members) * len(outside)
        if scan_cost == 0:
            locally_optimal = True
            break
        if swap_evals + scan_cost > swap_budget:
            break
        best_total = cur_total
        best_move: tuple[int, int, float] | None = None
        for drop in sorted(members, key=rank.__getitem__):
            base_hedge = hedge_cur - scores[drop]
            occ_base = occupancy - pos[drop]
            hedge_new = base_hedge + scores[outside]
            if denom:
                occ_new = occ_base[None, :] + pos[outside]
                motif_new = _motif_counts_from_occupancy(occ_new, k).sum(axis=1) / denom
            else:
                motif_new = np.zeros(len(outside))
            totals = hedge_new + motif_new
            swap_evals += len(outside)
            arg = int(np.argmax(totals))
            if totals[arg] > best_total:
                best_total = float(totals[arg])
                best_move = (drop, int(outside[arg]), float(hedge_new[arg]))
        if best_move is None:
            locally_optimal = True
            break
        drop, add, new_hedge = best_move
        members.remove(drop)
        members.append(add)
        in_subset[drop] = False
        in_subset[add] = True
        occupancy = occupancy - pos[drop] + pos[add]
        hedge_cur = new_hedge
        cur_total = best_total
        trace.append(cur_total)
    evaluations += swap_evals

    subset = tuple(sorted(members))
    return GreedyResult(
        subset=subset,
        objective=subset_objective(dev, h, means, subset),
        trace=tuple(trace),
        evaluations=evaluations,
        locally_optimal=locally_optimal,
    )


def build_clique_reduction(adjacency, clique_size: int) -> ReductionInstance:
    """Encode "does H have a clique of size c?" as a signed-motif threshold.

    Every source edge becomes a positive edge, every non-edge (and every
    pair involving the added apex vertex) a negative one. A c-clique plus
    the apex yields C(c, 3) apex patterns, one per triangle of the clique,
    which is exactly the threshold.
    """
    adj = _check_adjacency(adjacency)
    n = adj.shape[0]
    if not 1 <= clique_size <= n:
        raise DomainError(f"clique size {clique_size} out of range [1, {n}]")
    matrix = np.full((n + 1, n + 1), -1, dtype=np.int8)
    matrix[:n, :n][adj] = 1
    np.fill_diagonal(matrix, 0)
    return ReductionInstance(
        adjacency=adj,
        signed=EdgeSignMap(matrix),
        apex=n,
        clique_size=clique_size,
        subset_size=clique_size + 1,
        threshold=math.comb(clique_size, 3),
    )


def verify_reduction(adjacency, clique_size: int) -> tuple[bool, bool]:
    """Exhaustively check both sides of the clique reduction.

    Returns ``(has_clique, has_rich_subset)``: whether the source graph has
    a clique_size-clique, and whether any (clique_size+1)-subset of the
    reduction contains at least C(clique_size, 3) apex patterns. For
    clique_size >= 3 the two answers must agree; below that the threshold
    degenerates to zero and the motif side is trivially true.

    Limited to source graphs on at most 10 vertices (both sides enumerate
    subsets).
    """
    adj = _check_adjacency(adjacency)
    n = adj.shape[0]
    if n > VERIFY_MAX_VERTICES:
        raise DomainError(
            f"verify_reduction enumerates subsets; {n} > {VERIFY_MAX_VERTICES} vertices refused"
        )
    inst = build_clique_reduction(adj, clique_size)

    has_clique = any(
        all(adj[a, b] for a, b in itertools.combinations(combo, 2))
        for combo in itertools.combinations(range(n), clique_size)
    )
    has_rich_subset = any(
        count_b2_enumerated(inst.signed, subset=combo) >= inst.threshold
        for combo in itertools.combinations(range(n + 1), inst.subset_size)
    )
    return has_clique, has_rich_subset


def read_edge_list(path) -> np.ndarray:
    """Read an undirected graph file: first line is the vertex count, each
    further non-empty line one ``i j`` edge. Returns the adjacency matrix."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DomainError(f"{path}: empty graph file")
    try:
        n = int(lines[0])
    except ValueError:
        raise DomainError(f"{path}: first line must be the vertex count") from None
    adj = np.zeros((n, n), dtype=bool)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise DomainError(f"{path}: bad edge line {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise DomainError(f"{path}: bad edge ({i}, {j}) for {n} vertices")
        adj[i, j] = adj[j, i] = True
    return adj
