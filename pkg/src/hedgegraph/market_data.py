"""Price ingestion and return-panel construction.

The input universe is a directory of per-ticker CSV files (one file per
asset, ticker taken from the file stem). Each file must carry an ISO-8601
date column and at least one price column. Loading is tolerant of row
order (rows are sorted by date before validation) but strict about
content: duplicate dates and non-positive prices are hard errors, as is
any cell that fails to parse.

Alignment intersects the calendars of all retained series so the panel
has no missing cells; a series whose calendar covers too little of the
union calendar is dropped first rather than strangling the intersection.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DataFormatError, DataValidationError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_DATE_COLUMN = "Date"
PRICE_COLUMN_PREFERENCE = ("Adjusted Close", "Close")


def _frozen_array(values, dtype=np.float64, ndim=1) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-dimensional array, got {arr.ndim}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """One asset's close prices on its own trading calendar.

    Parameters
    ----------
    ticker : str
        Asset identifier, typically the source file stem.
    dates : tuple of datetime.date
        Strictly increasing trading dates.
    closes : numpy.ndarray
        Positive, finite close prices aligned with ``dates``.
    """

    ticker: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "closes", _frozen_array(self.closes))
        if len(self.dates) != len(self.closes):
            raise DataValidationError(
                f"{self.ticker}: {len(self.dates)} dates but {len(self.closes)} closes"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise DataValidationError(f"{self.ticker}: dates not strictly increasing at {b}")
        if len(self.closes) and (not np.isfinite(self.closes).all() or (self.closes <= 0).any()):
            raise DataValidationError(f"{self.ticker}: closes must be positive and finite")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class PricePanel:
    """Aligned close prices: one row per ticker, one column per common date."""

    tickers: tuple[str, ...]
    dates: tuple[dt.date, ...]
    closes: np.ndarray
    dropped: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "dropped", tuple(self.dropped))
        object.__setattr__(self, "closes", _frozen_array(self.closes, ndim=2))
        if self.closes.shape != (len(self.tickers), len(self.dates)):
            raise DataValidationError(
                f"panel shape {self.closes.shape} does not match "
                f"{len(self.tickers)} tickers x {len(self.dates)} dates"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise DataValidationError(f"panel dates not strictly increasing at {b}")
        if self.closes.size and (not np.isfinite(self.closes).all() or (self.closes <= 0).any()):
            raise DataValidationError("panel closes must be positive and finite")


@dataclass(frozen=True)
class ReturnPanel:
    """Daily log returns: one row per ticker, one column per return date.

    Column ``t`` holds ``ln(P[t+1] / P[t])`` of the source price panel, so
    the first return date is the second price date.
    """

    tickers: tuple[str, ...]
    dates: tuple[dt.date, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", _frozen_array(self.returns, ndim=2))
        if self.returns.shape != (len(self.tickers), len(self.dates)):
            raise DataValidationError(
                f"return panel shape {self.returns.shape} does not match "
                f"{len(self.tickers)} tickers x {len(self.dates)} dates"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise DataValidationError(f"return dates not strictly increasing at {b}")
        if self.returns.size and not np.isfinite(self.returns).all():
            raise DataValidationError("returns must be finite")

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def restrict(self, tickers) -> "ReturnPanel":
        """Sub-panel holding ``tickers`` in the given order."""
        index = {t: i for i, t in enumerate(self.tickers)}
        missing = [t for t in tickers if t not in index]
        if missing:
            raise DomainError(f"tickers not in panel: {', '.join(missing)}")
        rows = [index[t] for t in tickers]
        return ReturnPanel(tuple(tickers), self.dates, self.returns[rows])


@dataclass(frozen=True)
class YearWindow:
    """All return dates of one calendar year."""

    year: int
    panel: ReturnPanel


def load_price_csv(
    path,
    *,
    ticker: str | None = None,
    date_column: str = DEFAULT_DATE_COLUMN,
    price_column: str | None = None,
) -> PriceSeries:
    """Read one per-ticker CSV into a validated :class:`PriceSeries`.

    Parameters
    ----------
    path : str or Path
        CSV file with a header row.
    ticker : str, optional
        Defaults to the file stem.
    date_column : str
        Header of the ISO-8601 date column.
    price_column : str, optional
        Header of the price column. When omitted, ``"Adjusted Close"`` is
        used if present, else ``"Close"``.

    Raises
    ------
    DataFormatError
        Missing columns or an unparsable cell (message carries the 1-based
        file row).
    DataValidationError
        Duplicate dates or non-positive prices.
    """
    path = Path(path)
    name = ticker if ticker is not None else path.stem
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataFormatError(f"{path}: empty file, no header row")
        if date_column not in header:
            raise DataFormatError(f"{path}: missing date column {date_column!r} (row 1)")
        if price_column is None:
            for candidate in PRICE_COLUMN_PREFERENCE:
                if candidate in header:
                    price_column = candidate
                    break
            else:
                raise DataFormatError(
                    f"{path}: none of {PRICE_COLUMN_PREFERENCE} present (row 1)"
                )
        elif price_column not in header:
            raise DataFormatError(f"{path}: missing price column {price_column!r} (row 1)")

        rows: list[tuple[dt.date, float]] = []
        for row_no, row in enumerate(reader, start=2):
            raw_date = row.get(date_column)
            raw_price = row.get(price_column)
            if raw_date is None or raw_price is None:
                raise DataFormatError(f"{path}: short row (row {row_no})")
            try:
                date = dt.date.fromisoformat(raw_date.strip())
            except ValueError:
                raise DataFormatError(
                    f"{path}: unparsable date {raw_date!r} (row {row_no})"
                ) from None
            try:
                price = float(raw_price)
            except ValueError:
                raise DataFormatError(
                    f"{path}: unparsable price {raw_price!r} (row {row_no})"
                ) from None
            if not math.isfinite(price) or price <= 0.0:
                raise DataValidationError(
                    f"{path}: non-positive or non-finite price {raw_price!r} (row {row_no})"
                )
            rows.append((date, price))

    rows.sort(key=lambda item: item[0])
    for (d1, _), (d2, _) in zip(rows, rows[1:]):
        if d1 == d2:
            raise DataValidationError(f"{path}: duplicate date {d1.isoformat()}")
    return PriceSeries(
        ticker=name,
        dates=tuple(d for d, _ in rows),
        closes=np.array([p for _, p in rows], dtype=np.float64),
    )


def load_price_directory(
    data_dir,
    *,
    date_column: str = DEFAULT_DATE_COLUMN,
    price_column: str | None = None,
    workers: int = 1,
) -> list[PriceSeries]:
    """Load every ``*.csv`` under ``data_dir``, sorted by ticker.

    Files load independently, so ``workers > 1`` reads them concurrently.
    """
    paths = sorted(Path(data_dir).glob("*.csv"))
    if not paths:
        raise DataFormatError(f"{data_dir}: no CSV files found")

    def load(p: Path) -> PriceSeries:
        return load_price_csv(p, date_column=date_column, price_column=price_column)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            series = list(pool.map(load, paths))
    else:
        series = [load(p) for p in paths]
    series.sort(key=lambda s: s.ticker)
    return series


def align_panel(series, min_coverage: float = 0.95) -> PricePanel:
    """Align price series onto their common calendar.

    A series whose own calendar covers less than ``min_coverage`` of the
    union calendar is dropped (with a warning) before intersecting, so one
    short history cannot erase the shared calendar. The retained series are
    then restricted to the exact intersection of their dates.

    Raises
    ------
    AlignmentError
        No series retained, or the intersection is empty; the message lists
        each retained series' date range to make the gap findable.
    """
    series = list(series)
    if not series:
        raise AlignmentError("no price series to align")
    union: set[dt.date] = set()
    for s in series:
        union.update(s.dates)
    if not union:
        raise AlignmentError("all series are empty")

    kept: list[PriceSeries] = []
    dropped: list[str] = []
    for s in series:
        coverage = len(s.dates) / len(union)
        if coverage < min_coverage:
            logger.warning(
                "dropping %s: covers %.1f%% of the union calendar (< %.1f%%)",
                s.ticker, 100.0 * coverage, 100.0 * min_coverage,
            )
            dropped.append(s.ticker)
        else:
            kept.append(s)
    if not kept:
        raise AlignmentError(
            f"all {len(series)} series fall below min_coverage={min_coverage}"
        )

    common = set(kept[0].dates)
    for s in kept[1:]:
        common.intersection_update(s.dates)
    if not common:
        ranges = "; ".join(
            f"{s.ticker}: {s.dates[0].isoformat()}..{s.dates[-1].isoformat()}" for s in kept
        )
        raise AlignmentError(f"no common dates across retained series ({ranges})")

    calendar = sorted(common)
    closes = np.empty((len(kept), len(calendar)), dtype=np.float64)
    for i, s in enumerate(kept):
        lookup = dict(zip(s.dates, s.closes))
        closes[i] = [lookup[d] for d in calendar]
    return PricePanel(
        tickers=tuple(s.ticker for s in kept),
        dates=tuple(calendar),
        closes=closes,
        dropped=tuple(dropped),
    )


def log_returns(panel: PricePanel) -> ReturnPanel:
    """Daily log returns of an aligned price panel.

    ``returns[j, t] = ln(closes[j, t+1] / closes[j, t])``; the first price
    date is consumed and does not appear in the return calendar.
    """
    if len(panel.dates) < 2:
        raise DomainError("need at least two price dates to form returns")
    returns = np.diff(np.log(panel.closes), axis=1)
    return ReturnPanel(panel.tickers, panel.dates[1:], returns)


def partition_years(panel: ReturnPanel) -> list[YearWindow]:
    """Split a return panel into per-calendar-year windows, ascending."""
    years = sorted({d.year for d in panel.dates})
    windows = []
    for year in years:
        cols = [t for t, d in enumerate(panel.dates) if d.year == year]
        windows.append(
            YearWindow(
                year=year,
                panel=ReturnPanel(
                    panel.tickers,
                    tuple(panel.dates[c] for c in cols),
                    panel.returns[:, cols],
                ),
            )
        )
    return windows


def write_returns_csv(panel: ReturnPanel, path) -> None:
    """Dump a return panel as CSV: Date column plus one column per ticker.

    Floats are written with shortest round-trip repr, so reading the file
    back reproduces the panel bit for bit.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Date", *panel.tickers])
        for t, date in enumerate(panel.dates):
            writer.writerow([date.isoformat(), *(repr(float(v)) for v in panel.returns[:, t])])


def read_returns_csv(path) -> ReturnPanel:
    """Read a panel written by :func:`write_returns_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, no header row") from None
        if not header or header[0] != "Date":
            raise DataFormatError(f"{path}: first column must be 'Date'")
        tickers = tuple(header[1:])
        dates: list[dt.date] = []
        rows: list[list[float]] = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataFormatError(f"{path}: short row (row {row_no})")
            try:
                dates.append(dt.date.fromisoformat(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataFormatError(f"{path}: {exc} (row {row_no})") from None
    returns = np.array(rows, dtype=np.float64).T if rows else np.empty((len(tickers), 0))
    return ReturnPanel(tickers, tuple(dates), returns)
