"""Daily price ingestion, simple returns, and cross-sectional moment stats.

Returns are simple daily returns r_t = P_t/P_{t-1} - 1 over Adjusted
Close prices. Moments use the sample (n-1) standard deviation and the
bias-adjusted sample skewness / excess kurtosis estimators, matching the
excess-kurtosis convention (0 for a normal distribution in expectation).
Missing trading days are not imputed; returns run over consecutive
available observations.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import InputError
from .windows import DateRange

logger = logging.getLogger(__name__)

MOMENT_COLUMNS = ("E[R]", "Std[R]", "Skewness[R]", "Kurtosis[R]")
SUMMARY_PERCENTILES = (1, 3, 5, 10, 25, 50, 75, 90, 95, 97, 99)
SUMMARY_ROWS = (
    "Count",
    "Mean",
    "Std",
    "Min",
    "1%",
    "3%",
    "5%",
    "10%",
    "25%",
    "50%",
    "75%",
    "90%",
    "95%",
    "97%",
    "99%",
    "max",
)


@dataclass(frozen=True)
class ReturnSeries:
    """Adjusted-close series and its derived simple daily returns."""

    ticker: str
    dates: tuple[date, ...]
    adj_close: np.ndarray
    returns: np.ndarray

    @classmethod
    def from_prices(cls, ticker: str, dates, prices) -> "ReturnSeries":
        dates = tuple(dates)
        prices = np.asarray(prices, dtype=float)
        if len(dates) != prices.size:
            raise InputError("dates and prices differ in length")
        if len(dates) < 2:
            raise InputError(f"insufficient observations for {ticker}: need >= 2 usable prices")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise InputError(f"dates for {ticker} are not strictly increasing")
        if (prices <= 0).any():
            raise InputError(f"non-positive price in series for {ticker}")
        returns = prices[1:] / prices[:-1] - 1.0
        return cls(ticker=ticker, dates=dates, adj_close=prices, returns=returns)


def load_prices(csv_path: str | Path, ticker: str) -> ReturnSeries:
    """Read a Yahoo-style CSV (Date, Adj Close) into a ReturnSeries.

    Rows with missing, unparsable, zero, or negative Adj Close are dropped
    with a warning. Rows are sorted by date; duplicate dates keep the
    first occurrence.
    """
    path = Path(csv_path)
    if not path.is_file():
        raise InputError(f"price file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "Date" not in header or "Adj Close" not in header:
            raise InputError(f"{path} must have 'Date' and 'Adj Close' columns, got {header}")
        rows: list[tuple[date, float]] = []
        dropped = 0
        for row in reader:
            try:
                d = date.fromisoformat(row["Date"])
                price = float(row["Adj Close"])
            except (TypeError, ValueError):
                dropped += 1
                continue
            if not math.isfinite(price) or price <= 0:
                dropped += 1
                continue
            rows.append((d, price))
    if dropped:
        logger.warning("%s: dropped %d rows with missing/zero/negative Adj Close", ticker, dropped)
    rows.sort(key=lambda item: item[0])
    deduped: list[tuple[date, float]] = []
    for d, price in rows:
        if deduped and deduped[-1][0] == d:
            logger.warning("%s: duplicate date %s, keeping first row", ticker, d)
            continue
        deduped.append((d, price))
    if len(deduped) < 2:
        raise InputError(f"insufficient observations in {path}: {len(deduped)} usable rows")
    return ReturnSeries.from_prices(ticker, [d for d, _ in deduped], [p for _, p in deduped])


def slice_window(series: ReturnSeries, window: DateRange) -> ReturnSeries:
    """Restrict a series to trading dates inside the half-open window."""
    keep = [i for i, d in enumerate(series.dates) if window.contains(d)]
    if len(keep) < 2:
        raise InputError(
            f"insufficient observations for {series.ticker} in {window.start}..{window.end}"
        )
    return ReturnSeries.from_prices(
        series.ticker, [series.dates[i] for i in keep], series.adj_close[keep]
    )


@dataclass(frozen=True)
class MomentStats:
    """Per-ticker moment statistics of daily returns."""

    ticker: str
    mean: float
    std: float
    skewness: float
    kurtosis: float
    n_obs: int
    higher_moments_defined: bool = True


def moments(series: ReturnSeries) -> MomentStats:
    """Mean, sample std, bias-adjusted skewness and excess kurtosis.

    A zero-variance series gets std 0 with skewness/kurtosis flagged
    undefined (NaN).
    """
    r = np.asarray(series.returns, dtype=float)
    n = r.size
    if n < 4:
        raise InputError(f"{series.ticker}: need >= 4 return observations, got {n}")
    mean = float(np.mean(r))
    dev = r - mean
    m2 = float(np.mean(dev**2))
    if m2 == 0.0:
        return MomentStats(series.ticker, mean, 0.0, math.nan, math.nan, n, False)
    std = float(math.sqrt(np.sum(dev**2) / (n - 1)))
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    g1 = m3 / m2**1.5
    g2 = m4 / m2**2 - 3.0
    skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    return MomentStats(series.ticker, mean, std, float(skew), float(kurt), n)


@dataclass(frozen=True)
class CrossSectionSummary:
    """Table-style cross-sectional summary of per-ticker moments.

    ``values[i][j]`` holds SUMMARY_ROWS[i] for MOMENT_COLUMNS[j];
    undefined skewness/kurtosis entries are excluded column-wise, which
    the per-column Count row reflects.
    """

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray


def cross_section_summary(stats: list[MomentStats]) -> CrossSectionSummary:
    """Count/mean/std/min/percentile/max summary per moment column.

    Percentiles use linear interpolation between order statistics.
    """
    if not stats:
        raise InputError("no moment statistics to summarize")
    columns = {
        "E[R]": np.array([s.mean for s in stats], dtype=float),
        "Std[R]": np.array([s.std for s in stats], dtype=float),
        "Skewness[R]": np.array([s.skewness for s in stats], dtype=float),
        "Kurtosis[R]": np.array([s.kurtosis for s in stats], dtype=float),
    }
    values = np.full((len(SUMMARY_ROWS), len(MOMENT_COLUMNS)), math.nan)
    for j, name in enumerate(MOMENT_COLUMNS):
        col = columns[name]
        col = col[np.isfinite(col)]
        values[0, j] = col.size
        if col.size == 0:
            continue
        values[1, j] = np.mean(col)
        values[2, j] = np.std(col, ddof=1) if col.size > 1 else math.nan
        values[3, j] = np.min(col)
        for i, q in enumerate(SUMMARY_PERCENTILES):
            values[4 + i, j] = np.percentile(col, q, method="linear")
        values[-1, j] = np.max(col)
    return CrossSectionSummary(rows=SUMMARY_ROWS, columns=MOMENT_COLUMNS, values=values)
