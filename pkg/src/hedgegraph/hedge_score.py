"""Hedge scoring and universe reduction.

An asset's hedge score is the fraction of (day, partner) pairs on which it
deviated from its mean on the opposite side of the partner: the normalised
count of negative edges it touches across all day graphs of the window.
Because each day graph is determined by one sign per asset, the count for
asset ``i`` on one day is just the number of opposite-sign assets that day,
so a whole window costs O(N*T) instead of O(N^2*T).

Universe reduction ranks assets by hedge score times mean return and keeps
the top K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .market_data import ReturnPanel
from .signed_graph import DeviationMatrix, deviations

__all__ = [
    "HedgeScores",
    "UniverseSelection",
    "negative_degree_day",
    "hedge_scores",
    "selection_scores",
    "select_top_k",
    "reduce_universe",
    "write_selection_csv",
]


@dataclass(frozen=True)
class HedgeScores:
    """Per-asset hedge scores over one window.

    ``h[i] = neg_degree_total[i] / (window_len * (n_assets - 1))``, so each
    score lies in [0, 1]; 1 requires opposing every partner on every day.
    """

    h: np.ndarray
    neg_degree_total: np.ndarray
    window_len: int
    n_assets: int

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64)
        totals = np.array(self.neg_degree_total, dtype=np.int64)
        h.setflags(write=False)
        totals.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "neg_degree_total", totals)
        if ((h < 0.0) | (h > 1.0)).any():
            raise DomainError("hedge scores must lie in [0, 1]")


@dataclass(frozen=True)
class UniverseSelection:
    """Top-K assets by selection score, with per-asset selection metadata."""

    tickers: tuple[str, ...]
    scores: tuple[float, ...]
    k: int
    window: str
    h: tuple[float, ...] | None = None
    means: tuple[float, ...] | None = None


def negative_degree_day(dev: DeviationMatrix, t: int, n: int) -> int:
    """Number of assets deviating opposite to asset ``n`` on day ``t``."""
    if not 0 <= t < dev.n_days:
        raise DomainError(f"day index {t} out of range [0, {dev.n_days})")
    if not 0 <= n < dev.n_assets:
        raise DomainError(f"asset index {n} out of range [0, {dev.n_assets})")
    col = dev.sign_matrix[:, t]
    return int((col != col[n]).sum())


def hedge_scores(dev: DeviationMatrix) -> HedgeScores:
    """Hedge scores of every asset over the window.

    Requires at least two assets; a single asset has no partners to hedge.
    """
    n, t = dev.n_assets, dev.n_days
    if n < 2:
        raise DomainError("hedge scores need at least two assets")
    totals = np.asarray(_kernels.neg_degree_totals(dev.sign_matrix), dtype=np.int64)
    return HedgeScores(
        h=totals / (t * (n - 1)),
        neg_degree_total=totals,
        window_len=t,
        n_assets=n,
    )


def selection_scores(scores: HedgeScores, means) -> np.ndarray:
    """Selection score per asset: hedge score times window mean return."""
    means = np.asarray(means, dtype=np.float64)
    if means.shape != scores.h.shape:
        raise DomainError("means must align with hedge scores")
    return scores.h * means


def select_top_k(scores, tickers, k: int, *, window: str = "", h=None, means=None) -> UniverseSelection:
    """Keep the K best assets by score.

    Ordering is descending score with ties broken by ascending ticker, so
    the selection is deterministic for any input permutation.
    """
    scores = np.asarray(scores, dtype=np.float64)
    tickers = list(tickers)
    if len(tickers) != len(scores):
        raise DomainError("one ticker per score required")
    if not 1 <= k <= len(tickers):
        raise DomainError(f"k={k} out of range [1, {len(tickers)}]")
    order = sorted(range(len(tickers)), key=lambda i: (-scores[i], tickers[i]))
    top = order[:k]
    return UniverseSelection(
        tickers=tuple(tickers[i] for i in top),
        scores=tuple(float(scores[i]) for i in top),
        k=k,
        window=window,
        h=None if h is None else tuple(float(np.asarray(h)[i]) for i in top),
        means=None if means is None else tuple(float(np.asarray(means)[i]) for i in top),
    )


def reduce_universe(panel: ReturnPanel, k: int, *, window: str = "") -> UniverseSelection:
    """Rank a return panel's assets and keep the top K.

    Convenience composition: deviations -> hedge scores -> selection
    scores -> top-K, carrying per-asset metadata for reporting.
    """
    dev = deviations(panel)
    hs = hedge_scores(dev)
    s = selection_scores(hs, dev.means)
    return select_top_k(
        s, panel.tickers, k, window=window or str(panel.dates[0].year),
        h=hs.h, means=dev.means,
    )


def write_selection_csv(selection: UniverseSelection, path) -> None:
    """Write a selection as CSV rows of (ticker, h, mean, score)."""
    if selection.h is None or selection.means is None:
        raise DomainError("selection lacks per-asset metadata (h, means)")
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ticker", "h", "mean", "score"])
        for ticker, h, mean, score in zip(
            selection.tickers, selection.h, selection.means, selection.scores
        ):
            writer.writerow([ticker, repr(float(h)), repr(float(mean)), repr(float(score))])
