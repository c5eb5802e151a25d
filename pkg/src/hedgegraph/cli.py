"""Command-line interface.

Subcommands: ingest, reduce, motifs, opt2, verify-reduction, backtest,
report. Option resolution order is CLI flag > config file > built-in
default; config files are flat ``key = value`` lines (``#`` comments).
Errors print one ``error: ...`` line on stderr and exit 1; usage problems
exit 2. Log verbosity comes from ``HEDGEGRAPH_LOG_LEVEL``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .backtest import BacktestConfig, BacktestRecord, emit_report, run_backtest
from .combinatorial_opt import exact_search, greedy_search, read_edge_list, verify_reduction
from .errors import ConfigError, DomainError, HedgeGraphError
from .hedge_score import hedge_scores, reduce_universe, write_selection_csv
from .market_data import (
    align_panel,
    load_price_directory,
    log_returns,
    partition_years,
    read_returns_csv,
    write_returns_csv,
)
from .motif_count import b2_density_window, window_motif_counts
from .signed_graph import deviations

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Resolved option set for one invocation."""

    data_dir: str | None = None
    panel: str | None = None
    date_column: str = "Date"
    price_column: str | None = None
    min_coverage: float = 0.95
    workers: int = 1
    train_year: int | None = None
    from_year: int | None = None
    to_year: int | None = None
    k: int | None = None
    ks: tuple[int, ...] = (20, 30, 40, 50)
    strategies: tuple[str, ...] = ("full_markowitz", "full_equal", "topk_markowitz", "topk_equal")
    mode: str = "greedy"
    swap_budget: int | None = None
    budget: int = 2_000_000
    seed: int = 0
    out: str = "out"
    format: tuple[str, ...] = ("csv", "json")
    subset: str | None = None
    graph: str | None = None
    clique_size: int | None = None
    records: str | None = None


def _parse_int_list(text) -> tuple[int, ...]:
    if isinstance(text, tuple):
        return text
    try:
        return tuple(int(part) for part in str(text).split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _parse_str_list(text) -> tuple[str, ...]:
    if isinstance(text, tuple):
        return text
    return tuple(part.strip() for part in str(text).split(",") if part.strip())


_CONVERTERS = {
    "min_coverage": float,
    "workers": int,
    "train_year": int,
    "from_year": int,
    "to_year": int,
    "k": int,
    "ks": _parse_int_list,
    "strategies": _parse_str_list,
    "swap_budget": int,
    "budget": int,
    "seed": int,
    "format": _parse_str_list,
    "clique_size": int,
}
_KNOWN_KEYS = {f.name for f in fields(RunConfig)}


def parse_config_file(path) -> dict:
    """Read a flat ``key = value`` config file; unknown keys are rejected."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {line_no} is not 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"{path}: unknown key {key!r} (line {line_no})")
            converter = _CONVERTERS.get(key)
            try:
                values[key] = converter(value) if converter else value
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{path}: bad value for {key!r} (line {line_no}): {exc}") from None
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """CLI flag > config file > default."""
    values = {}
    config_path = getattr(args, "config", None)
    if config_path:
        values.update(parse_config_file(config_path))
    for name in _KNOWN_KEYS:
        provided = getattr(args, name, None)
        if provided is not None:
            converter = _CONVERTERS.get(name)
            values[name] = converter(provided) if converter and isinstance(provided, str) else provided
    cfg = RunConfig(**values)
    logger.info("resolved config: %s", cfg)
    return cfg


def _load_panel(cfg: RunConfig):
    if cfg.panel:
        return read_returns_csv(cfg.panel)
    if cfg.data_dir:
        series = load_price_directory(
            cfg.data_dir,
            date_column=cfg.date_column,
            price_column=cfg.price_column,
            workers=cfg.workers,
        )
        return log_returns(align_panel(series, min_coverage=cfg.min_coverage))
    raise ConfigError("either --data-dir or --panel is required")


def _year_window(panel, year: int | None):
    if year is None:
        return panel
    for window in partition_years(panel):
        if window.year == year:
            return window.panel
    available = ", ".join(str(w.year) for w in partition_years(panel))
    raise DomainError(f"year {year} not in panel (available: {available})")


def _read_subset(cfg: RunConfig, panel) -> list[int] | None:
    if not cfg.subset:
        return None
    names = [ln.strip() for ln in Path(cfg.subset).read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.startswith("#")]
    index = {t: i for i, t in enumerate(panel.tickers)}
    missing = [t for t in names if t not in index]
    if missing:
        raise DomainError(f"subset tickers not in panel: {', '.join(missing)}")
    return [index[t] for t in names]


# --- subcommands --------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> int:
    panel = _load_panel(cfg)
    out = Path(cfg.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "panel.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    write_returns_csv(panel, out)
    print(f"panel: {panel.n_assets} tickers x {panel.n_days} days -> {out}")
    return 0


def cmd_reduce(cfg: RunConfig) -> int:
    if cfg.k is None:
        raise ConfigError("--k is required")
    panel = _year_window(_load_panel(cfg), cfg.train_year)
    window = str(cfg.train_year) if cfg.train_year is not None else "all"
    selection = reduce_universe(panel, cfg.k, window=window)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"universe_{window}_K{cfg.k}.csv"
    write_selection_csv(selection, csv_path)
    json_path = out / f"selection_{window}_K{cfg.k}.json"
    payload = {
        "window": selection.window,
        "k": selection.k,
        "tickers": list(selection.tickers),
        "scores": list(selection.scores),
        "h": list(selection.h),
        "means": list(selection.means),
    }
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"selected {selection.k} of {panel.n_assets} tickers -> {csv_path}, {json_path}")
    return 0


def cmd_motifs(cfg: RunConfig) -> int:
    panel = _year_window(_load_panel(cfg), cfg.train_year)
    subset = _read_subset(cfg, panel)
    dev = deviations(panel)
    counts = window_motif_counts(dev, subset)
    density = b2_density_window(dev, subset).densities
    out = Path(cfg.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "motifs.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    import csv as _csv

    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["date", "n_pos", "n_neg", "t0", "t2", "b0", "b2", "b4", "density"])
        for t, c in enumerate(counts):
            writer.writerow([
                panel.dates[t].isoformat(), c.n_pos, c.n_neg,
                c.t0, c.t2, c.b0, c.b2, c.b4, repr(float(density[t])),
            ])
    print(f"motif census: {len(counts)} days -> {out}")
    return 0


def cmd_opt2(cfg: RunConfig) -> int:
    if cfg.k is None:
        raise ConfigError("--k is required")
    panel = _year_window(_load_panel(cfg), cfg.train_year)
    dev = deviations(panel)
    hs = hedge_scores(dev)
    if cfg.mode == "exact":
        result = exact_search(dev, hs.h, dev.means, cfg.k,
                              tickers=panel.tickers, budget=cfg.budget)
        extra = {}
    elif cfg.mode == "greedy":
        result = greedy_search(dev, hs.h, dev.means, cfg.k,
                               tickers=panel.tickers, swap_budget=cfg.swap_budget)
        extra = {"trace": list(result.trace), "locally_optimal": result.locally_optimal}
    else:
        raise ConfigError(f"--mode must be exact or greedy, got {cfg.mode!r}")
    out = Path(cfg.out)
    if out.suffix != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"opt2_{cfg.mode}_K{cfg.k}.json"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "mode": cfg.mode,
        "k": cfg.k,
        "indices": list(result.subset),
        "tickers": [panel.tickers[i] for i in result.subset],
        "hedge_term": result.objective.hedge_term,
        "motif_term": result.objective.motif_term,
        "total": result.objective.total,
        "evaluations": result.evaluations,
        **extra,
    }
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{cfg.mode} subset objective {result.objective.total!r} -> {out}")
    return 0


def cmd_verify_reduction(cfg: RunConfig) -> int:
    if not cfg.graph:
        raise ConfigError("--graph is required")
    if cfg.clique_size is None:
        raise ConfigError("--clique-size is required")
    adjacency = read_edge_list(cfg.graph)
    has_clique, has_rich = verify_reduction(adjacency, cfg.clique_size)
    print(json.dumps({
        "clique_size": cfg.clique_size,
        "has_clique": has_clique,
        "has_rich_subset": has_rich,
        "equal": has_clique == has_rich,
    }, sort_keys=True))
    return 0


def cmd_backtest(cfg: RunConfig) -> int:
    panel = _load_panel(cfg)
    years = None
    if cfg.from_year is not None or cfg.to_year is not None:
        available = sorted({d.year for d in panel.dates})
        lo = cfg.from_year if cfg.from_year is not None else available[0]
        hi = cfg.to_year if cfg.to_year is not None else available[-1] - 1
        years = tuple(range(lo, hi + 1))
    config = BacktestConfig(ks=cfg.ks, strategies=cfg.strategies, years=years, seed=cfg.seed)
    records = run_backtest(panel, config)
    written = emit_report(records, cfg.out, formats=cfg.format)
    print(f"{len(records)} records, {len(written)} files -> {cfg.out}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    if not cfg.records:
        raise ConfigError("--records is required")
    payload = json.loads(Path(cfg.records).read_text(encoding="utf-8"))
    records = []
    for item in payload.get("records", []):
        records.append(BacktestRecord(
            train_year=item["train_year"],
            test_year=item["test_year"],
            strategy=item["strategy"],
            k=item["k"],
            annual_return=_nan_if_none(item["annual_return"]),
            annual_volatility=_nan_if_none(item["annual_volatility"]),
            sharpe=_nan_if_none(item["sharpe"]),
            zero_volatility=item.get("zero_volatility", False),
            universe=tuple(item.get("universe", ())),
            weights=item.get("weights", {}),
            degenerate=item.get("degenerate", False),
        ))
    written = emit_report(records, cfg.out, formats=cfg.format)
    print(f"re-emitted {len(written)} files -> {cfg.out}")
    return 0


def _nan_if_none(value):
    return math.nan if value is None else float(value)


# --- parser / dispatch ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output file or directory (default: out)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data-dir", dest="data_dir", help="directory of per-ticker CSV files")
    data.add_argument("--panel", help="precomputed return panel CSV (from ingest)")
    data.add_argument("--date-column", dest="date_column", help="date column header")
    data.add_argument("--price-column", dest="price_column", help="price column header")
    data.add_argument("--min-coverage", dest="min_coverage", type=float,
                      help="drop series covering less of the union calendar")
    data.add_argument("--workers", type=int, help="concurrent file loads")

    parser = argparse.ArgumentParser(
        prog="hedgegraph",
        description="Signed-graph hedge scoring, motif counting, and universe reduction",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common, data],
                       help="load, align, and dump a log-return panel CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("reduce", parents=[common, data],
                       help="rank assets by hedge-scaled mean return and keep the top K")
    p.add_argument("--k", type=int, help="universe size to keep")
    p.add_argument("--train-year", dest="train_year", type=int, help="restrict to one year")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("motifs", parents=[common, data],
                       help="per-day signed motif census of a panel (or subset)")
    p.add_argument("--train-year", dest="train_year", type=int, help="restrict to one year")
    p.add_argument("--subset", help="file of tickers, one per line")
    p.set_defaults(func=cmd_motifs)

    p = sub.add_parser("opt2", parents=[common, data],
                       help="optimise the combined hedge/motif subset objective")
    p.add_argument("--k", type=int, help="subset size")
    p.add_argument("--train-year", dest="train_year", type=int, help="restrict to one year")
    p.add_argument("--mode", choices=("exact", "greedy"), help="search mode (default greedy)")
    p.add_argument("--swap-budget", dest="swap_budget", type=int,
                   help="candidate evaluations allowed in the swap phase")
    p.add_argument("--budget", type=int, help="max subsets for exact enumeration")
    p.set_defaults(func=cmd_opt2)

    p = sub.add_parser("verify-reduction", parents=[common],
                       help="exhaustively check the clique reduction on a small graph")
    p.add_argument("--graph", help="edge-list file: first line n, then 'i j' lines")
    p.add_argument("--clique-size", dest="clique_size", type=int, help="clique size to test")
    p.set_defaults(func=cmd_verify_reduction)

    p = sub.add_parser("backtest", parents=[common, data],
                       help="train on year y, evaluate on year y+1, write report files")
    p.add_argument("--ks", help="comma-separated universe sizes (default 20,30,40,50)")
    p.add_argument("--strategies", help="comma-separated strategy keys")
    p.add_argument("--from-year", dest="from_year", type=int, help="first train year")
    p.add_argument("--to-year", dest="to_year", type=int, help="last train year")
    p.add_argument("--seed", type=int, help="seed recorded in the run config")
    p.add_argument("--format", help="comma-separated output formats (csv,json)")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("report", parents=[common],
                       help="re-emit report files from a summary.json")
    p.add_argument("--records", help="summary.json from a previous backtest")
    p.add_argument("--format", help="comma-separated output formats (csv,json)")
    p.set_defaults(func=cmd_report)
    return parser


def dispatch(argv) -> int:
    """Run one CLI invocation; returns the process exit code."""
    logging.basicConfig(
        stream=sys.stderr,
        level=os.environ.get("HEDGEGRAPH_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return args.func(cfg)
    except (HedgeGraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
