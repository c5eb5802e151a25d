"""Year-over-year backtest protocol and report files.

Each train year is scored in isolation: moments and hedge scores come from
that year's returns only, weights are then held fixed (buy and hold) over
the following calendar year, so nothing from the test year can leak into
selection or weighting. Metrics use a fixed 252-day annualisation and a
zero risk-free rate; a zero-volatility test year yields a NaN Sharpe that
report files render as an empty cell / JSON null, never as infinity.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .hedge_score import UniverseSelection, reduce_universe, write_selection_csv
from .market_data import ReturnPanel, partition_years
from .portfolio import PortfolioWeights, equal_weights, estimate_moments, max_sharpe_weights

logger = logging.getLogger(__name__)

__all__ = [
    "TRADING_DAYS_PER_YEAR",
    "STRATEGY_LABELS",
    "BacktestConfig",
    "BacktestRecord",
    "annual_return",
    "annual_volatility",
    "sharpe",
    "sharpe_from_metrics",
    "portfolio_daily_returns",
    "run_backtest",
    "emit_report",
]

TRADING_DAYS_PER_YEAR = 252

STRATEGY_LABELS = {
    "full_markowitz": "Full-Markowitz",
    "full_equal": "Full-Equal",
    "topk_markowitz": "TopK-Markowitz",
    "topk_equal": "TopK-Equal",
}
_FULL_STRATEGIES = ("full_markowitz", "full_equal")
_TOPK_STRATEGIES = ("topk_markowitz", "topk_equal")
METRICS = ("annual_return", "annual_volatility", "sharpe")


@dataclass(frozen=True)
class BacktestConfig:
    """What to run: universe sizes, strategy set, train years, seed.

    ``years`` lists train years; each needs the following calendar year
    present in the panel. ``None`` means every train year the panel allows.
    The seed is the single entry point for any randomness; the shipped
    strategies are deterministic but still record it.
    """

    ks: tuple[int, ...] = (20, 30, 40, 50)
    strategies: tuple[str, ...] = ("full_markowitz", "full_equal", "topk_markowitz", "topk_equal")
    years: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.years is not None:
            object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        unknown = [s for s in self.strategies if s not in STRATEGY_LABELS]
        if unknown:
            raise ConfigError(f"unknown strategies: {', '.join(unknown)}")
        if not self.strategies:
            raise ConfigError("at least one strategy required")
        needs_k = any(s in _TOPK_STRATEGIES for s in self.strategies)
        if needs_k and (not self.ks or any(k < 1 for k in self.ks)):
            raise ConfigError("top-K strategies need at least one positive K")


@dataclass(frozen=True)
class BacktestRecord:
    """One (train year, strategy, K) evaluation on the following year."""

    train_year: int
    test_year: int
    strategy: str
    k: int | None
    annual_return: float
    annual_volatility: float
    sharpe: float
    zero_volatility: bool
    universe: tuple[str, ...]
    weights: dict[str, float]
    degenerate: bool = False
    selection: UniverseSelection | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "train_year": self.train_year,
            "test_year": self.test_year,
            "strategy": self.strategy,
            "k": self.k,
            "annual_return": _json_safe(self.annual_return),
            "annual_volatility": _json_safe(self.annual_volatility),
            "sharpe": _json_safe(self.sharpe),
            "zero_volatility": self.zero_volatility,
            "degenerate": self.degenerate,
            "universe": list(self.universe),
            "weights": {t: float(w) for t, w in self.weights.items()},
        }


def _json_safe(value: float):
    return float(value) if math.isfinite(value) else None


def annual_return(daily_returns) -> float:
    """Annualised return of daily log returns: exp(252 * mean) - 1."""
    daily = np.asarray(daily_returns, dtype=np.float64)
    if daily.size == 0:
        raise DomainError("annual return needs at least one day")
    return float(np.exp(TRADING_DAYS_PER_YEAR * daily.mean()) - 1.0)


def annual_volatility(daily_returns) -> float:
    """Annualised volatility: sample (T-1) std of daily returns times sqrt(252)."""
    daily = np.asarray(daily_returns, dtype=np.float64)
    if daily.size < 2:
        raise DomainError("annual volatility needs at least two days")
    if daily.max() == daily.min():  # constant series: exactly zero, no mean rounding
        return 0.0
    return float(daily.std(ddof=1) * math.sqrt(TRADING_DAYS_PER_YEAR))


def sharpe_from_metrics(ret: float, vol: float) -> float:
    """Sharpe ratio at zero risk-free rate; NaN when volatility is zero."""
    if vol == 0.0:
        return float("nan")
    return ret / vol


def sharpe(daily_returns) -> float:
    """Annualised Sharpe ratio of daily log returns."""
    return sharpe_from_metrics(annual_return(daily_returns), annual_volatility(daily_returns))


def portfolio_daily_returns(panel: ReturnPanel, weights: PortfolioWeights) -> np.ndarray:
    """Daily returns of a buy-and-hold portfolio over the panel.

    Every weighted ticker must be present; a missing ticker is an error
    (weights are never silently renormalised onto the survivors).
    """
    sub = panel.restrict(weights.tickers)
    return weights.weights @ sub.returns


def run_backtest(panel: ReturnPanel, config: BacktestConfig) -> list[BacktestRecord]:
    """Evaluate each configured (train year, strategy, K) on the next year.

    Records come back in a fixed order: years ascending, full strategies
    first, then per ascending K the top-K strategies.
    """
    by_year = {w.year: w.panel for w in partition_years(panel)}
    if config.years is None:
        years = sorted(y for y in by_year if y + 1 in by_year)
        if not years:
            raise DomainError("panel has no consecutive year pair to backtest")
    else:
        years = sorted(config.years)
        missing = [y for y in years if y not in by_year or y + 1 not in by_year]
        if missing:
            raise DomainError(
                f"train years lacking (year, year+1) data: {', '.join(map(str, missing))}"
            )
    ks = sorted(set(config.ks))
    records: list[BacktestRecord] = []
    for year in years:
        train, test = by_year[year], by_year[year + 1]
        logger.info("train %d (%d days) -> test %d (%d days)",
                    year, train.n_days, year + 1, test.n_days)
        moments = estimate_moments(train)

        def evaluate(strategy: str, k: int | None, pw: PortfolioWeights,
                     universe: tuple[str, ...], selection: UniverseSelection | None):
            daily = portfolio_daily_returns(test, pw)
            ret = annual_return(daily)
            vol = annual_volatility(daily)
            records.append(BacktestRecord(
                train_year=year,
                test_year=year + 1,
                strategy=strategy,
                k=k,
                annual_return=ret,
                annual_volatility=vol,
                sharpe=sharpe_from_metrics(ret, vol),
                zero_volatility=vol == 0.0,
                universe=universe,
                weights=pw.as_dict(),
                degenerate=pw.degenerate,
                selection=selection,
            ))

        if "full_markowitz" in config.strategies:
            evaluate("full_markowitz", None, max_sharpe_weights(moments), panel.tickers, None)
        if "full_equal" in config.strategies:
            evaluate("full_equal", None, equal_weights(panel.tickers), panel.tickers, None)
        if any(s in config.strategies for s in _TOPK_STRATEGIES):
            for k in ks:
                if k > panel.n_assets:
                    raise DomainError(f"K={k} exceeds the {panel.n_assets}-asset universe")
                selection = reduce_universe(train, k, window=str(year))
                sub_train = train.restrict(selection.tickers)
                if "topk_markowitz" in config.strategies:
                    evaluate("topk_markowitz", k, max_sharpe_weights(estimate_moments(sub_train)),
                             selection.tickers, selection)
                if "topk_equal" in config.strategies:
                    evaluate("topk_equal", k, equal_weights(selection.tickers),
                             selection.tickers, selection)
    return records


def emit_report(records, out_dir, formats: tuple[str, ...] = ("csv", "json")) -> list[Path]:
    """Write summary, per-metric plot data, and per-universe files.

    Produces ``summary.csv`` / ``summary.json``, one
    ``plotdata_<metric>_K<k>.csv`` per metric and K (columns: test_year then
    the four display strategy labels; absent cells stay empty), and one
    ``universe_<year>_K<k>.csv`` per reduced universe. Output is
    deterministic: fixed orderings, round-trip float formatting, no
    timestamps.
    """
    records = list(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if "csv" in formats:
        path = out_dir / "summary.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["train_year", "test_year", "strategy", "k",
                             "annual_return", "annual_volatility", "sharpe"])
            for r in records:
                writer.writerow([
                    r.train_year, r.test_year, r.strategy,
                    "" if r.k is None else r.k,
                    _csv_float(r.annual_return),
                    _csv_float(r.annual_volatility),
                    _csv_float(r.sharpe),
                ])
        written.append(path)

    if "json" in formats:
        path = out_dir / "summary.json"
        payload = {"records": [r.to_dict() for r in records]}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)

    if "csv" in formats:
        written.extend(_write_plotdata(records, out_dir))
        written.extend(_write_universes(records, out_dir))
    return written


def _csv_float(value: float) -> str:
    return repr(float(value)) if math.isfinite(value) else ""


def _write_plotdata(records, out_dir: Path) -> list[Path]:
    ks = sorted({r.k for r in records if r.k is not None})
    test_years = sorted({r.test_year for r in records})
    cell: dict[tuple[int, str, int | None], BacktestRecord] = {}
    for r in records:
        cell[(r.test_year, r.strategy, r.k)] = r
    written = []
    for metric in METRICS:
        for k in ks:
            path = out_dir / f"plotdata_{metric}_K{k}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["test_year", *STRATEGY_LABELS.values()])
                for year in test_years:
                    row = [year]
                    for strategy in STRATEGY_LABELS:
                        record = cell.get(
                            (year, strategy, None if strategy in _FULL_STRATEGIES else k)
                        )
                        row.append("" if record is None else _csv_float(getattr(record, metric)))
                    writer.writerow(row)
            written.append(path)
    return written


def _write_universes(records, out_dir: Path) -> list[Path]:
    seen: dict[tuple[int, int], UniverseSelection] = {}
    for r in records:
        if r.selection is not None and r.k is not None:
            seen.setdefault((r.train_year, r.k), r.selection)
    written = []
    for (year, k), selection in sorted(seen.items()):
        path = out_dir / f"universe_{year}_K{k}.csv"
        write_selection_csv(selection, path)
        written.append(path)
    return written
