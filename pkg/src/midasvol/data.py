"""CSV ingestion and daily/monthly alignment.

Daily prices (``date,price``) and monthly index levels (``month,value``) are
parsed into validated, immutable series, transformed into log returns / log
changes, and joined into an :class:`AlignedPanel`, the single input object
consumed by the estimators.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

logger = logging.getLogger(__name__)

MIN_TRADING_DAYS = 15


class DataError(ValueError):
    """Raised for malformed or inconsistent input data.

    ``line`` is the 1-based line number in the source text when the error
    is tied to a specific row.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientHistoryError(DataError):
    """Factor series do not cover the months required by the returns."""


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DailySeries:
    """Date-indexed values on trading days.

    ``dates`` is a ``datetime64[D]`` array, strictly increasing; ``values``
    are finite floats of the same length.
    """

    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = _frozen(self.dates, "datetime64[D]")
        values = _frozen(self.values, float)
        if dates.ndim != 1 or dates.shape != values.shape:
            raise DataError("dates and values must be 1-d arrays of equal length")
        if dates.size > 1 and not np.all(np.diff(dates.astype(np.int64)) > 0):
            raise DataError("dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DataError("values must be finite")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def to_pandas(self):
        import pandas as pd

        return pd.Series(self.values, index=pd.DatetimeIndex(self.dates), name="value")


@dataclass(frozen=True, eq=False)
class MonthlySeries:
    """Values on a contiguous run of calendar months (``datetime64[M]``)."""

    months: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        months = _frozen(self.months, "datetime64[M]")
        values = _frozen(self.values, float)
        if months.ndim != 1 or months.shape != values.shape:
            raise DataError("months and values must be 1-d arrays of equal length")
        if months.size > 1:
            step = np.diff(months.astype(np.int64))
            if np.any(step <= 0):
                raise DataError("months must be strictly increasing")
            if np.any(step != 1):
                gap = months[1:][step != 1][0]
                raise DataError(f"gap in monthly series before {gap}")
        if not np.all(np.isfinite(values)):
            raise DataError("values must be finite")
        object.__setattr__(self, "months", months)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def value_at(self, months):
        """Values at ``months``; NaN where the series has no observation."""
        months = np.asarray(months, dtype="datetime64[M]")
        out = np.full(months.shape, np.nan)
        if len(self) == 0:
            return out
        pos = (months - self.months[0]).astype(np.int64)
        ok = (pos >= 0) & (pos < len(self))
        out[ok] = self.values[pos[ok]]
        return out


def _read_rows(text, header):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    text = text.lstrip("﻿")
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = []
    seen_header = False
    for lineno, row in enumerate(reader, start=1):
        row = [c.strip() for c in row]
        if not row or all(c == "" for c in row):
            continue
        if not seen_header:
            if [c.lower() for c in row] != list(header):
                raise DataError(f"expected header {','.join(header)!r}", lineno)
            seen_header = True
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", lineno)
        rows.append((lineno, row))
    if not seen_header:
        raise DataError(f"missing header {','.join(header)!r}")
    return rows


def _parse_float(s, lineno):
    try:
        x = float(s)
    except ValueError:
        raise DataError(f"not a number: {s!r}", lineno) from None
    if not math.isfinite(x):
        raise DataError(f"non-finite value: {s!r}", lineno)
    return x


def _check_order(keys, lines, what):
    for i in range(1, len(keys)):
        if keys[i] == keys[i - 1]:
            raise DataError(f"duplicate {what} {keys[i]}", lines[i])
        if keys[i] < keys[i - 1]:
            raise DataError(f"out-of-order {what} {keys[i]}", lines[i])


def parse_daily_prices(text):
    """Parse ``date,price`` CSV text into a :class:`DailySeries` of prices."""
    dates, values, lines = [], [], []
    for lineno, (d, p) in _read_rows(text, ("date", "price")):
        try:
            date = np.datetime64(d, "D")
        except ValueError:
            raise DataError(f"malformed date {d!r}", lineno) from None
        price = _parse_float(p, lineno)
        if price <= 0:
            raise DataError(f"non-positive price {p}", lineno)
        dates.append(date)
        values.append(price)
        lines.append(lineno)
    _check_order(dates, lines, "date")
    return DailySeries(np.array(dates, dtype="datetime64[D]"), np.array(values))


def parse_daily_returns(text):
    """Parse ``date,return`` CSV text (already-computed log returns)."""
    dates, values, lines = [], [], []
    for lineno, (d, r) in _read_rows(text, ("date", "return")):
        try:
            dates.append(np.datetime64(d, "D"))
        except ValueError:
            raise DataError(f"malformed date {d!r}", lineno) from None
        values.append(_parse_float(r, lineno))
        lines.append(lineno)
    _check_order(dates, lines, "date")
    return DailySeries(np.array(dates, dtype="datetime64[D]"), np.array(values))


def parse_monthly_index(text):
    """Parse ``month,value`` CSV text (months as ``YYYY-MM``)."""
    months, values, lines = [], [], []
    for lineno, (m, v) in _read_rows(text, ("month", "value")):
        if len(m) != 7 or m[4] != "-":
            raise DataError(f"malformed month label {m!r}", lineno)
        try:
            month = np.datetime64(m, "M")
        except ValueError:
            raise DataError(f"malformed month label {m!r}", lineno) from None
        months.append(month)
        values.append(_parse_float(v, lineno))
        lines.append(lineno)
    _check_order(months, lines, "month")
    for i in range(1, len(months)):
        if (months[i] - months[i - 1]).astype(int) != 1:
            raise DataError(f"gap between {months[i - 1]} and {months[i]}", lines[i])
    return MonthlySeries(np.array(months, dtype="datetime64[M]"), np.array(values))


def read_daily_csv(path):
    """Read a daily CSV file holding either prices or returns.

    A ``date,price`` file is converted to log returns; a ``date,return``
    file is taken as is.
    """
    text = Path(path).read_text(encoding="utf-8")
    first = text.lstrip("﻿").split("\n", 1)[0].strip().lower().replace(" ", "")
    if first == "date,return":
        return parse_daily_returns(text)
    return log_returns(parse_daily_prices(text))


def read_monthly_csv(path):
    return parse_monthly_index(Path(path).read_text(encoding="utf-8"))


def log_returns(prices):
    """Daily log returns ``ln(p_t / p_{t-1})`` dated at day ``t``."""
    if len(prices) < 2:
        raise DataError("need at least 2 prices to form a return")
    p = prices.values
    if np.any(p <= 0):
        raise DataError("prices must be positive")
    return DailySeries(prices.dates[1:], np.log(p[1:] / p[:-1]))


def log_changes(index):
    """Monthly log changes ``ln(v_m / v_{m-1})`` dated at month ``m``."""
    if len(index) < 2:
        raise DataError("need at least 2 observations to form a change")
    v = index.values
    if np.any(v <= 0):
        raise DataError("index values must be positive for log changes")
    return MonthlySeries(index.months[1:], np.log(v[1:] / v[:-1]))


@dataclass(frozen=True)
class PanelWarning:
    month: str
    reason: str


@dataclass(frozen=True, eq=False)
class AlignedPanel:
    """Daily returns joined with monthly factors on a contiguous month axis.

    ``months`` runs from the earliest factor month (or the first return
    month, whichever is earlier) through the last return month.
    ``month_of_day[i]`` indexes ``months`` for return day ``i``.
    ``trading_days[j]`` counts return days in ``months[j]`` (0 for pure
    factor-history months). ``retained[j]`` marks months that enter the
    likelihood. ``monthly_factors`` maps factor names to series restricted
    to the month axis.
    """

    returns: DailySeries
    months: np.ndarray
    month_of_day: np.ndarray
    trading_days: np.ndarray
    retained: np.ndarray
    monthly_factors: Mapping[str, MonthlySeries] = field(default_factory=dict)
    warnings: tuple = ()
    min_days: int = MIN_TRADING_DAYS

    def __post_init__(self):
        object.__setattr__(self, "months", _frozen(self.months, "datetime64[M]"))
        object.__setattr__(self, "month_of_day", _frozen(self.month_of_day, np.int64))
        object.__setattr__(self, "trading_days", _frozen(self.trading_days, np.int64))
        object.__setattr__(self, "retained", _frozen(self.retained, bool))
        object.__setattr__(self, "monthly_factors", dict(self.monthly_factors))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n_days(self):
        return len(self.returns)

    @property
    def dates(self):
        return self.returns.dates

    @property
    def day_retained(self):
        """Boolean mask over days: the day's month enters the likelihood."""
        return self.retained[self.month_of_day]

    @property
    def return_months(self):
        """Indices into ``months`` of months that carry return days."""
        return np.flatnonzero(self.trading_days > 0)

    def factor(self, name):
        """Factor values on the month axis (NaN where not observed)."""
        try:
            series = self.monthly_factors[name]
        except KeyError:
            raise KeyError(f"factor {name!r} not in panel; have {sorted(self.monthly_factors)}") from None
        return series.value_at(self.months)

    def truncate(self, end):
        """Panel restricted to return days strictly before ``end``."""
        end = np.datetime64(end, "D")
        keep = self.returns.dates < end
        if not np.any(keep):
            raise DataError(f"no return days before {end}")
        n = int(np.count_nonzero(keep))
        last_month = int(self.month_of_day[n - 1])
        counts = self.trading_days.copy()[: last_month + 1]
        counts[last_month] = int(np.count_nonzero(self.month_of_day[:n] == last_month))
        retained = self.retained.copy()[: last_month + 1]
        return AlignedPanel(
            returns=DailySeries(self.returns.dates[:n], self.returns.values[:n]),
            months=self.months[: last_month + 1],
            month_of_day=self.month_of_day[:n],
            trading_days=counts,
            retained=retained,
            monthly_factors=self.monthly_factors,
            warnings=self.warnings,
            min_days=self.min_days,
        )


def align(returns, factors=None, *, min_days=MIN_TRADING_DAYS, history_months=0):
    """Join daily returns with monthly factors.

    Parameters
    ----------
    returns : DailySeries
        Daily log returns.
    factors : mapping of str to MonthlySeries, optional
        Monthly factors; each must cover every month touched by the returns
        plus ``history_months`` months before the first return month.
    min_days : int
        Months with fewer return days are excluded from the likelihood.
        Short months at either edge of the sample are trimmed from the panel
        altogether; short interior months keep their returns (they still
        feed realized-volatility factors and the GARCH recursion) but are
        masked out of the likelihood.
    history_months : int
        Required factor history before the first return month.

    Returns
    -------
    AlignedPanel
    """
    factors = dict(factors or {})
    if len(returns) == 0:
        raise DataError("empty return series")
    day_months = returns.dates.astype("datetime64[M]")
    first_m, last_m = day_months[0], day_months[-1]
    all_months = np.arange(first_m, last_m + 1, dtype="datetime64[M]")
    counts = np.bincount((day_months - first_m).astype(np.int64), minlength=all_months.size)

    warnings = []
    short = counts < min_days
    lo, hi = 0, all_months.size
    while lo < hi and short[lo]:
        warnings.append(PanelWarning(str(all_months[lo]), f"{counts[lo]} trading days < {min_days}; trimmed"))
        lo += 1
    while hi > lo and short[hi - 1]:
        warnings.append(PanelWarning(str(all_months[hi - 1]), f"{counts[hi - 1]} trading days < {min_days}; trimmed"))
        hi -= 1
    if lo >= hi:
        raise DataError("no month has enough trading days")
    for j in range(lo, hi):
        if short[j]:
            warnings.append(PanelWarning(str(all_months[j]), f"{counts[j]} trading days < {min_days}; excluded from likelihood"))
    for w in warnings:
        logger.warning("month %s: %s", w.month, w.reason)

    first_m, last_m = all_months[lo], all_months[hi - 1]
    keep = (day_months >= first_m) & (day_months <= last_m)
    dates, values = returns.dates[keep], returns.values[keep]
    day_months = day_months[keep]

    start = first_m - history_months
    for name, series in factors.items():
        if len(series) == 0:
            raise InsufficientHistoryError(f"factor {name!r} is empty")
        if series.months[-1] < last_m:
            raise InsufficientHistoryError(
                f"factor {name!r} ends {series.months[-1]}, returns run through {last_m}")
        if series.months[0] > start:
            raise InsufficientHistoryError(
                f"factor {name!r} starts {series.months[0]}, need history from {start}")
        if series.months[0] > first_m or series.months[-1] < first_m:
            raise InsufficientHistoryError(f"factor {name!r} does not overlap the returns")

    axis_start = min([first_m] + [s.months[0] for s in factors.values()])
    months = np.arange(axis_start, last_m + 1, dtype="datetime64[M]")
    month_of_day = (day_months - axis_start).astype(np.int64)
    trading_days = np.bincount(month_of_day, minlength=months.size)
    retained = trading_days >= min_days

    clipped = {}
    for name, series in factors.items():
        sel = (series.months >= axis_start) & (series.months <= last_m)
        clipped[name] = MonthlySeries(series.months[sel], series.values[sel])

    return AlignedPanel(
        returns=DailySeries(dates, values),
        months=months,
        month_of_day=month_of_day,
        trading_days=trading_days,
        retained=retained,
        monthly_factors=clipped,
        warnings=tuple(warnings),
        min_days=min_days,
    )
