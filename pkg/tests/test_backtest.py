import json
import math

import numpy as np
import pytest

from hedgegraph.backtest import (
    BacktestConfig,
    annual_return,
    annual_volatility,
    emit_report,
    portfolio_daily_returns,
    run_backtest,
    sharpe_from_metrics,
)
from hedgegraph.errors import ConfigError, DomainError
from hedgegraph.market_data import partition_years

from conftest import synthetic_panel


class TestMetrics:
    def test_annual_return_formula(self):
        daily = np.full(252, math.log(1.10) / 252)
        assert annual_return(daily) == pytest.approx(0.10, abs=1e-12)

    def test_constant_series_has_zero_volatility(self):
        daily = np.full(100, 0.0003)
        assert annual_volatility(daily) == 0.0

    def test_volatility_annualization(self):
        rng = np.random.default_rng(80)
        daily = rng.normal(0.0, 0.01, size=500)
        expected = float(np.std(daily, ddof=1)) * math.sqrt(252)
        assert annual_volatility(daily) == pytest.approx(expected, abs=1e-15)

    def test_negative_annual_return(self):
        daily = np.full(252, -math.log(2.0) / 252)
        assert annual_return(daily) == pytest.approx(-0.5, abs=1e-12)

    def test_alternating_series_closed_form(self):
        a = 0.004
        t = 80
        daily = np.tile([a, -a], t // 2)
        expected = a * math.sqrt(t / (t - 1)) * math.sqrt(252)
        assert annual_volatility(daily) == pytest.approx(expected, abs=1e-15)

    def test_sharpe(self):
        assert sharpe_from_metrics(0.10, 0.20) == 0.5
        assert math.isnan(sharpe_from_metrics(0.10, 0.0))

    def test_volatility_needs_two_days(self):
        with pytest.raises(DomainError):
            annual_volatility(np.array([0.01]))


class TestPortfolioDailyReturns:
    def test_weighted_combination(self, panel):
        from hedgegraph.portfolio import PortfolioWeights

        w = np.array([0.5, 0.3, 0.2])
        pw = PortfolioWeights(panel.tickers[:3], w, "manual")
        daily = portfolio_daily_returns(panel, pw)
        manual = w @ panel.returns[:3]
        np.testing.assert_allclose(daily, manual, atol=1e-15)

    def test_missing_ticker_rejected(self, panel):
        from hedgegraph.portfolio import PortfolioWeights

        pw = PortfolioWeights(("ZZZ",), np.array([1.0]), "manual")
        with pytest.raises(DomainError, match="ZZZ"):
            portfolio_daily_returns(panel, pw)


class TestRunBacktest:
    def test_record_grid_and_ordering(self):
        panel = synthetic_panel(seed=81, n_assets=10, n_years=3)
        config = BacktestConfig(ks=(3, 5), seed=0)
        records = run_backtest(panel, config)
        years = sorted({w.year for w in partition_years(panel)})
        expected_pairs = [(y, y + 1) for y in years[:-1]]
        assert [(r.train_year, r.test_year) for r in records][:: len(records) // len(expected_pairs)] == expected_pairs
        per_pair = len(records) // len(expected_pairs)
        assert per_pair == 2 + 2 * 2  # full strategies + per-K topk strategies
        for r in records:
            assert r.test_year == r.train_year + 1
            if r.strategy.startswith("full"):
                assert r.k is None
                assert len(r.universe) == panel.n_assets
            else:
                assert len(r.universe) == r.k
            np.testing.assert_allclose(sum(r.weights.values()), 1.0, atol=1e-9)

    def test_equal_strategies_uniform(self):
        panel = synthetic_panel(seed=82, n_assets=6, n_years=2)
        records = run_backtest(panel, BacktestConfig(ks=(4,)))
        for r in records:
            if r.strategy == "topk_equal":
                assert set(r.weights.values()) == {0.25}
            if r.strategy == "full_equal":
                np.testing.assert_allclose(list(r.weights.values()), 1.0 / 6, atol=1e-15)

    def test_no_lookahead(self):
        panel = synthetic_panel(seed=83, n_assets=6, n_years=2)
        records = run_backtest(panel, BacktestConfig(ks=(3,)))
        # perturb the test year's returns; weights must be unchanged
        test_year = records[0].test_year
        returns = panel.returns.copy()
        mask = np.array([d.year == test_year for d in panel.dates])
        returns[:, mask] += 0.001
        from hedgegraph.market_data import ReturnPanel

        perturbed = ReturnPanel(panel.tickers, panel.dates, returns)
        again = run_backtest(perturbed, BacktestConfig(ks=(3,)))
        for a, b in zip(records, again):
            assert a.universe == b.universe
            assert a.weights == b.weights

    def test_years_subset(self):
        panel = synthetic_panel(seed=84, n_assets=5, n_years=3)
        years = sorted({w.year for w in partition_years(panel)})
        records = run_backtest(panel, BacktestConfig(ks=(3,), years=(years[0],)))
        assert {r.train_year for r in records} == {years[0]}

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            BacktestConfig(ks=())
        with pytest.raises(ConfigError):
            BacktestConfig(ks=(0,))
        with pytest.raises(ConfigError):
            BacktestConfig(strategies=("nope",))


class TestEmitReport:
    def test_files_and_determinism(self, tmp_path):
        panel = synthetic_panel(seed=85, n_assets=8, n_years=2)
        records = run_backtest(panel, BacktestConfig(ks=(4,)))
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        emit_report(records, out1)
        emit_report(records, out2)
        names = sorted(p.name for p in out1.iterdir())
        assert "summary.csv" in names and "summary.json" in names
        assert any(n.startswith("plotdata_sharpe") for n in names)
        assert any(n.startswith("universe_") for n in names)
        for name in names:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_summary_json_round_trip(self, tmp_path):
        panel = synthetic_panel(seed=86, n_assets=6, n_years=2)
        records = run_backtest(panel, BacktestConfig(ks=(3,)))
        emit_report(records, tmp_path)
        data = json.loads((tmp_path / "summary.json").read_text())["records"]
        assert len(data) == len(records)
        by_key = {(d["train_year"], d["strategy"], d["k"]): d for d in data}
        for r in records:
            d = by_key[(r.train_year, r.strategy, r.k)]
            if math.isnan(r.sharpe):
                assert d["sharpe"] is None
            else:
                assert d["sharpe"] == pytest.approx(r.sharpe)

    def test_nan_sharpe_serialized_empty(self, tmp_path):
        panel = synthetic_panel(seed=87, n_assets=5, n_years=2)
        records = run_backtest(panel, BacktestConfig(ks=(3,)))
        # force a zero-volatility record copy
        import dataclasses

        frozen = dataclasses.replace(records[0], sharpe=float("nan"), zero_volatility=True)
        emit_report([frozen], tmp_path)
        text = (tmp_path / "summary.csv").read_text()
        row = text.splitlines()[1]
        assert row.endswith(",") or ",," in row
        data = json.loads((tmp_path / "summary.json").read_text())["records"]
        assert data[0]["sharpe"] is None
