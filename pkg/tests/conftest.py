"""Shared synthetic-data helpers for the test suite."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from hedgegraph.market_data import ReturnPanel


def weekday_dates(start_year: int, n_years: int) -> list[dt.date]:
    """All Mon-Fri dates covering the given calendar years."""
    day = dt.date(start_year, 1, 1)
    end = dt.date(start_year + n_years - 1, 12, 31)
    out = []
    while day <= end:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def gbm_prices(rng: np.random.Generator, n_assets: int, n_days: int) -> np.ndarray:
    """Geometric-Brownian price paths, one row per asset."""
    drift = rng.uniform(-2e-4, 8e-4, size=(n_assets, 1))
    vol = rng.uniform(0.005, 0.03, size=(n_assets, 1))
    shocks = drift + vol * rng.standard_normal((n_assets, n_days))
    start = rng.uniform(20.0, 200.0, size=(n_assets, 1))
    return start * np.exp(np.cumsum(shocks, axis=1))


def synthetic_panel(seed: int = 0, n_assets: int = 8, start_year: int = 2019,
                    n_years: int = 2) -> ReturnPanel:
    """Return panel over real weekday calendars, deterministic per seed."""
    rng = np.random.default_rng(seed)
    dates = weekday_dates(start_year, n_years)
    prices = gbm_prices(rng, n_assets, len(dates))
    tickers = tuple(f"T{i:02d}" for i in range(n_assets))
    returns = np.diff(np.log(prices), axis=1)
    return ReturnPanel(tickers, tuple(dates[1:]), returns)


def write_price_csvs(directory, rng: np.random.Generator, n_assets: int,
                     dates: list[dt.date], price_column: str = "Adjusted Close") -> list[str]:
    """Write per-ticker price CSVs; returns the tickers."""
    prices = gbm_prices(rng, n_assets, len(dates))
    tickers = [f"T{i:02d}" for i in range(n_assets)]
    for i, ticker in enumerate(tickers):
        lines = [f"Date,Open,{price_column}"]
        for t, date in enumerate(dates):
            lines.append(f"{date.isoformat()},{prices[i, t]:.6f},{prices[i, t]:.6f}")
        (directory / f"{ticker}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return tickers


@pytest.fixture
def panel() -> ReturnPanel:
    return synthetic_panel()


VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one verdict line per acceptance criterion after the run."""
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
