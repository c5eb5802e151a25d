"""Moment estimation and long-only portfolio construction.

All optimisers share one quadratic-program core: SLSQP for a feasible
near-optimum, then an exact active-set polish on the detected support (the
KKT system restricted to the support is a small linear solve). Both stages
are deterministic, so identical inputs give identical weights. Long-only
max-Sharpe is solved through the standard convex surrogate

    minimise y' Sigma y   subject to  mu' y = 1, y >= 0,   w = y / sum(y),

whose optimum is the tangency portfolio whenever some mean is positive.

Covariances estimated on short windows can be numerically singular, so a
small ridge is added when the smallest eigenvalue falls below 1e-10 times
the trace; the added amount is recorded on the estimate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, InfeasibleTargetError
from .market_data import ReturnPanel

logger = logging.getLogger(__name__)

__all__ = [
    "MomentEstimates",
    "PortfolioWeights",
    "estimate_moments",
    "max_sharpe_weights",
    "min_variance_weights",
    "min_variance_target",
    "risk_penalized_weights",
    "equal_weights",
    "hedge_variance_gap",
]

EIG_FLOOR_REL = 1e-10
RIDGE_REL = 1e-8
WEIGHT_SUM_ATOL = 1e-10


@dataclass(frozen=True)
class MomentEstimates:
    """Sample mean / covariance / correlation of one return window.

    ``cov`` is the unbiased (T-1) sample covariance, plus the recorded
    ``ridge`` on the diagonal when conditioning was needed, so it is always
    positive semidefinite. ``corr`` is computed from the raw covariance and
    carries NaN rows for zero-variance assets (diagonal stays 1).
    """

    tickers: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray
    corr: np.ndarray
    ridge: float
    zero_variance: tuple[int, ...]

    def __post_init__(self):
        for name in ("mean", "cov", "corr"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.tickers)
        if self.mean.shape != (n,) or self.cov.shape != (n, n) or self.corr.shape != (n, n):
            raise DomainError("moment shapes must match the ticker count")
        if not np.allclose(self.cov, self.cov.T, rtol=0, atol=1e-12):
            raise DomainError("covariance must be symmetric")

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    @classmethod
    def from_arrays(cls, mean, cov, tickers=None) -> "MomentEstimates":
        """Estimates from precomputed moments (applies the same conditioning)."""
        mean = np.asarray(mean, dtype=np.float64)
        cov = np.asarray(cov, dtype=np.float64)
        n = len(mean)
        if tickers is None:
            tickers = tuple(f"A{i}" for i in range(n))
        cov = 0.5 * (cov + cov.T)
        conditioned, ridge = _condition(cov)
        corr, zero_var = _correlation(cov)
        return cls(tuple(tickers), mean, conditioned, corr, ridge, zero_var)


@dataclass(frozen=True)
class PortfolioWeights:
    """Long-only weights on the simplex, tagged with their strategy."""

    tickers: tuple[str, ...]
    weights: np.ndarray
    strategy: str
    degenerate: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if w.shape != (len(self.tickers),):
            raise DomainError("one weight per ticker required")
        if (w < 0).any():
            raise DomainError("weights must be non-negative")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_ATOL:
            raise DomainError(f"weights must sum to 1 (got {w.sum()!r})")

    def as_dict(self) -> dict[str, float]:
        return {t: float(w) for t, w in zip(self.tickers, self.weights)}


def _condition(cov: np.ndarray) -> tuple[np.ndarray, float]:
    """Ridge-condition a covariance whose smallest eigenvalue is too low."""
    n = cov.shape[0]
    trace = float(np.trace(cov))
    if n == 0 or trace <= 0.0:
        return cov, 0.0
    min_eig = float(np.linalg.eigvalsh(cov)[0])
    if min_eig >= EIG_FLOOR_REL * trace:
        return cov, 0.0
    ridge = RIDGE_REL * trace / n
    logger.debug("conditioning covariance: min eig %.3e, adding ridge %.3e", min_eig, ridge)
    return cov + ridge * np.eye(n), ridge


def _correlation(cov: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    std = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    zero_var = tuple(int(i) for i in np.flatnonzero(std == 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = cov / np.outer(std, std)
    for i in zero_var:
        corr[i, :] = np.nan
        corr[:, i] = np.nan
    np.fill_diagonal(corr, 1.0)
    return corr, zero_var


def estimate_moments(panel: ReturnPanel) -> MomentEstimates:
    """Sample moments of a return panel (needs at least two days)."""
    if panel.n_days < 2:
        raise DomainError("moment estimation needs at least two days")
    mean = panel.returns.mean(axis=1)
    cov = np.cov(panel.returns, ddof=1)
    cov = np.atleast_2d(cov)
    conditioned, ridge = _condition(cov)
    corr, zero_var = _correlation(cov)
    return MomentEstimates(
        tickers=panel.tickers,
        mean=mean,
        cov=conditioned,
        corr=corr,
        ridge=ridge,
        zero_variance=zero_var,
    )


# --- quadratic-program core -------------------------------------------------

def _solve_qp(G, c, A, b, x0, *, name: str) -> tuple[np.ndarray, dict]:
    """Minimise 0.5 x'Gx + c'x subject to Ax = b, x >= 0.

    SLSQP from a feasible start, then an active-set KKT polish; the better
    feasible point wins. G must be positive semidefinite.
    """
    G = np.asarray(G, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    n = len(c)

    def objective(x):
        return 0.5 * float(x @ G @ x) + float(c @ x)

    res = minimize(
        lambda x: 0.5 * x @ G @ x + c @ x,
        x0,
        jac=lambda x: G @ x + c,
        method="SLSQP",
        bounds=[(0.0, None)] * n,
        constraints=[{"type": "eq", "fun": lambda x: A @ x - b, "jac": lambda x: A}],
        options={"maxiter": 1000, "ftol": 1e-14},
    )
    candidates: list[tuple[np.ndarray, str]] = []
    x_slsqp = np.clip(res.x, 0.0, None)
    candidates.append((x_slsqp, "slsqp"))
    x_polish = _active_set_polish(G, c, A, b, x_slsqp)
    if x_polish is not None:
        candidates.append((x_polish, "active_set"))

    best, source = None, None
    for x, tag in candidates:
        if np.abs(A @ x - b).max() > 1e-8 or (x < -1e-12).any():
            continue
        if best is None or objective(x) < objective(best):
            best, source = x, tag
    if best is None:
        raise DomainError(f"{name}: no feasible solution found (solver status {res.status})")
    diagnostics = {
        "solver": f"slsqp+{source}",
        "iterations": int(res.nit),
        "objective": objective(best),
        "constraint_residual": float(np.abs(A @ best - b).max()),
    }
    return np.clip(best, 0.0, None), diagnostics


def _active_set_polish(G, c, A, b, x0, *, max_iter: int | None = None) -> np.ndarray | None:
    """Exact KKT solve on the support detected from x0, with support repair.

    Returns None when the linear algebra degenerates (singular face, cycle,
    or iteration cap); the caller keeps the SLSQP point then.
    """
    n = len(c)
    m = A.shape[0]
    if max_iter is None:
        max_iter = 4 * n + 8
    scale = float(np.max(np.abs(x0))) if len(x0) else 0.0
    support = set(np.flatnonzero(x0 > max(1e-10, 1e-9 * scale)).tolist())
    if not support:
        support = {int(np.argmax(x0))}
    seen: set[frozenset] = set()
    for _ in range(max_iter):
        key = frozenset(support)
        if key in seen:
            return None
        seen.add(key)
        S = sorted(support)
        if len(S) < m:
            return None
        kkt = np.zeros((len(S) + m, len(S) + m))
        kkt[: len(S), : len(S)] = G[np.ix_(S, S)]
        kkt[: len(S), len(S):] = -A[:, S].T
        kkt[len(S):, : len(S)] = A[:, S]
        rhs = np.concatenate([-c[S], b])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return None
        x_s = sol[: len(S)]
        lam = sol[len(S):]
        if x_s.min() < -1e-10:
            if len(S) == 1:
                return None
            support.discard(S[int(np.argmin(x_s))])
            continue
        x = np.zeros(n)
        x[S] = np.clip(x_s, 0.0, None)
        slack = G @ x + c - A.T @ lam
        outside = [i for i in range(n) if i not in support]
        if outside:
            worst = min(outside, key=lambda i: slack[i])
            if slack[worst] < -1e-9:
                support.add(worst)
                continue
        return x
    return None


# --- portfolio constructions -------------------------------------------------

def max_sharpe_weights(m: MomentEstimates) -> PortfolioWeights:
    """Long-only tangency portfolio via the convex surrogate.

    When no asset has a positive estimated mean the tangency direction is
    undefined on the simplex; the minimum-variance portfolio is returned
    instead, marked ``degenerate=True``.
    """
    mu, sigma = m.mean, m.cov
    if float(mu.max()) <= 0.0:
        logger.warning("max_sharpe: no positive mean; falling back to min variance")
        fallback = min_variance_weights(m)
        return PortfolioWeights(
            tickers=m.tickers,
            weights=fallback.weights,
            strategy="max_sharpe",
            degenerate=True,
            diagnostics=dict(fallback.diagnostics, fallback="min_variance"),
        )
    a = int(np.argmax(mu))
    total = float(mu.sum())
    if total > 0.0:
        y0 = np.full(m.n_assets, 1.0 / total)
    else:
        y0 = np.zeros(m.n_assets)
        y0[a] = 1.0 / mu[a]
    y, diagnostics = _solve_qp(2.0 * sigma, np.zeros(m.n_assets), mu[None, :], [1.0], y0,
                               name="max_sharpe")
    w = y / y.sum()
    return PortfolioWeights(
        tickers=m.tickers,
        weights=_normalize(w),
        strategy="max_sharpe",
        diagnostics=diagnostics,
    )


def min_variance_weights(m: MomentEstimates) -> PortfolioWeights:
    """Minimum-variance portfolio on the simplex."""
    n = m.n_assets
    w0 = np.full(n, 1.0 / n)
    w, diagnostics = _solve_qp(2.0 * m.cov, np.zeros(n), np.ones((1, n)), [1.0], w0,
                               name="min_variance")
    return PortfolioWeights(
        tickers=m.tickers,
        weights=_normalize(w),
        strategy="min_variance",
        diagnostics=diagnostics,
    )


def min_variance_target(m: MomentEstimates, target_return: float) -> PortfolioWeights:
    """Minimum-variance portfolio whose mean return equals ``target_return``.

    Long-only feasibility requires the target inside [min(mean), max(mean)];
    outside it an :class:`InfeasibleTargetError` carries the interval.
    """
    mu = m.mean
    lo, hi = float(mu.min()), float(mu.max())
    if not lo <= target_return <= hi:
        raise InfeasibleTargetError(
            f"target return {target_return!r} outside feasible interval [{lo!r}, {hi!r}]",
            lo, hi,
        )
    n = m.n_assets
    if hi > lo:
        theta = (target_return - lo) / (hi - lo)
        w0 = np.zeros(n)
        w0[int(np.argmin(mu))] = 1.0 - theta
        w0[int(np.argmax(mu))] += theta
    else:
        w0 = np.full(n, 1.0 / n)
    A = np.vstack([np.ones(n), mu])
    w, diagnostics = _solve_qp(2.0 * m.cov, np.zeros(n), A, [1.0, target_return], w0,
                               name="min_variance_target")
    return PortfolioWeights(
        tickers=m.tickers,
        weights=_normalize(w),
        strategy="min_variance_target",
        diagnostics=diagnostics,
    )


def risk_penalized_weights(m: MomentEstimates, risk_aversion: float) -> PortfolioWeights:
    """Maximise mean return minus ``risk_aversion`` times variance.

    Large aversion approaches the minimum-variance portfolio; tiny aversion
    concentrates on the best-mean asset.
    """
    if not risk_aversion > 0.0:
        raise DomainError(f"risk aversion must be positive, got {risk_aversion!r}")
    n = m.n_assets
    w0 = np.full(n, 1.0 / n)
    w, diagnostics = _solve_qp(
        2.0 * risk_aversion * m.cov, -m.mean, np.ones((1, n)), [1.0], w0,
        name="risk_penalized",
    )
    return PortfolioWeights(
        tickers=m.tickers,
        weights=_normalize(w),
        strategy="risk_penalized",
        diagnostics=diagnostics,
    )


def equal_weights(tickers) -> PortfolioWeights:
    """Uniform weights over the given tickers."""
    tickers = tuple(tickers)
    if not tickers:
        raise DomainError("equal weights need at least one ticker")
    n = len(tickers)
    return PortfolioWeights(
        tickers=tickers,
        weights=np.full(n, 1.0 / n),
        strategy="equal",
    )


def hedge_variance_gap(cov_or_moments, weights) -> tuple[float, float]:
    """Portfolio variance against its all-positive-correlation bound.

    Returns ``(w' Sigma w, w' |Sigma| w)``; the second applies elementwise
    absolute value, i.e. the variance the portfolio would carry if every
    hedging (negative) covariance flipped sign. For long-only weights the
    first never exceeds the second.
    """
    sigma = cov_or_moments.cov if isinstance(cov_or_moments, MomentEstimates) \
        else np.asarray(cov_or_moments, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if sigma.shape != (len(w), len(w)):
        raise DomainError("weights must match covariance dimension")
    return float(w @ sigma @ w), float(w @ np.abs(sigma) @ w)


def _normalize(w: np.ndarray) -> np.ndarray:
    w = np.clip(np.asarray(w, dtype=np.float64), 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise DomainError("cannot normalise all-zero weights")
    return w / total
