"""MIDAS lag weights and low-frequency factor construction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .data import DailySeries, DataError, MonthlySeries

DEFAULT_WINDOW = 22


@dataclass(frozen=True, eq=False)
class WeightProfile:
    """Normalized Beta lag polynomial over lags ``k = 1..K``."""

    omega1: float
    omega2: float
    K: int
    weights: np.ndarray

    def __len__(self):
        return self.K


def beta_weights(omega1, omega2, K):
    """Two-parameter Beta lag weights.

    ``phi_k`` is proportional to ``k**(omega1 - 1) * (K - k)**(omega2 - 1)``
    for ``k = 1..K`` and normalized to sum to one. The last lag ``k = K``
    therefore gets zero weight whenever ``omega2 > 1``. Evaluated in log
    space so large ``omega2`` does not overflow. With ``K = 1`` the single
    lag carries all the weight.
    """
    K = int(K)
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not (omega1 >= 1 and omega2 >= 1):
        raise ValueError(f"omega1 and omega2 must be >= 1, got ({omega1}, {omega2})")
    if K == 1:
        w = np.ones(1)
    else:
        k = np.arange(1, K + 1, dtype=float)
        logw = xlogy(omega1 - 1.0, k) + xlogy(omega2 - 1.0, K - k)
        w = np.exp(logw - logw.max())
        w /= w.sum()
    w.setflags(write=False)
    return WeightProfile(float(omega1), float(omega2), K, w)


def lag_matrix(x, K, stride=1):
    """Matrix ``L`` with ``L[i, k-1] = x[i - k*stride]`` (NaN before the start)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.full((n, K), np.nan)
    for k in range(1, K + 1):
        shift = k * stride
        if shift < n:
            out[shift:, k - 1] = x[: n - shift]
    return out


def realized_vol_fixed(panel):
    """Monthly realized variance: the sum of squared daily returns per month.

    Covers every month from the first to the last return month of the panel,
    including interior months excluded from the likelihood.
    """
    if panel.n_days == 0:
        raise DataError("empty panel")
    months_idx = panel.return_months
    lo, hi = months_idx[0], months_idx[-1] + 1
    rv = np.bincount(panel.month_of_day - lo, weights=panel.returns.values ** 2, minlength=hi - lo)
    return MonthlySeries(panel.months[lo:hi], rv)


def _rolling_rv_values(r, window):
    # direct window sums keep exact zeros and avoid cumsum drift
    r2 = np.asarray(r, dtype=float) ** 2
    n = r2.size
    out = np.full(n, np.nan)
    if n > window:
        win = np.lib.stride_tricks.sliding_window_view(r2, window)[: n - window]
        out[window:] = win.sum(axis=1)
    return out


def realized_vol_rolling(returns, window=DEFAULT_WINDOW):
    """Backward rolling realized variance over the previous ``window`` days.

    Day ``i`` gets ``sum(r[i-window:i] ** 2)``; it is defined only for days
    with ``window`` predecessors, so the output starts at day ``window``.
    """
    window = int(window)
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(returns) < window + 1:
        raise DataError(f"need more than {window} returns, got {len(returns)}")
    rv = _rolling_rv_values(returns.values, window)
    return DailySeries(returns.dates[window:], rv[window:])


def expand_to_days(panel, monthly_values):
    """Copy month-axis values onto each return day of the month."""
    return np.asarray(monthly_values, dtype=float)[panel.month_of_day]


def _macro_rolling_values(daily, window):
    # plain window mean; exact for constant inputs
    n = daily.size
    out = np.full(n, np.nan)
    if n > window:
        win = np.lib.stride_tricks.sliding_window_view(daily, window)[: n - window]
        out[window:] = win.mean(axis=1)
    return out


def macro_rolling(panel, factor, window=DEFAULT_WINDOW, values=None):
    """Rolling mean of a day-expanded monthly factor.

    Each trading day carries its month's factor value; day ``i`` then gets
    the mean over days ``i-window .. i-1``. ``values`` optionally replaces
    the panel's stored monthly values (e.g. after a log transform).
    """
    window = int(window)
    if values is None:
        values = panel.factor(factor)
    daily = expand_to_days(panel, values)
    if not np.all(np.isfinite(daily)):
        raise DataError(f"factor {factor!r} missing for some return months")
    if panel.n_days < window + 1:
        raise DataError(f"need more than {window} days of factor history, got {panel.n_days}")
    mv = _macro_rolling_values(daily, window)
    return DailySeries(panel.dates[window:], mv[window:])
