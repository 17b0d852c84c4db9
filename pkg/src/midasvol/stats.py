"""Descriptive statistics and the augmented Dickey-Fuller unit-root test."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

# MacKinnon (2010) response surfaces: crit = b0 + b1/T + b2/T**2 + b3/T**3
# keyed by deterministic terms, rows for the 1%, 5% and 10% levels
ADF_CRITICAL_SURFACES = {
    "n": ((-2.56574, -2.2358, -3.627, 0.0),
          (-1.94100, -0.2686, -3.365, 31.223),
          (-1.61682, 0.2656, -2.714, 25.364)),
    "c": ((-3.43035, -6.5393, -16.786, -79.433),
          (-2.86154, -2.8903, -4.234, -40.040),
          (-2.56677, -1.5384, -2.809, 0.0)),
    "ct": ((-3.95877, -9.0531, -28.428, -134.155),
           (-3.41049, -4.3904, -9.036, -45.374),
           (-3.12705, -2.5856, -3.925, -22.380)),
}
LEVELS = ("1%", "5%", "10%")
MIN_ADF_OBS = 25


@dataclass(frozen=True)
class ADFResult:
    statistic: float
    lag: int
    nobs: int
    critical_values: dict
    reject_level: str | None
    regression: str = "c"

    @property
    def stars(self):
        return {"1%": "***", "5%": "**", "10%": "*"}.get(self.reject_level, "")


@dataclass(frozen=True)
class SummaryStats:
    """Table-style description of a return series.

    ``kurtosis`` is raw (a normal sample gives about 3). ``skewness`` and
    ``kurtosis`` are NaN for a constant series; the ADF fields are filled
    by :func:`describe`.
    """

    n: int
    mean: float
    min: float
    max: float
    std_dev: float
    skewness: float
    kurtosis: float
    adf_stat: float = math.nan
    adf_reject_level: str | None = None

    def to_dict(self):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in self.__dict__.items()}


def summary(values):
    """Moments of ``values``: sample std (n - 1), skew ``m3/m2**1.5``, raw kurtosis ``m4/m2**2``."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-d sample with at least 2 values")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d ** 2))
    if m2 > 0:
        # standardize first; m2 ** 1.5 can underflow for tiny spreads
        z = d / math.sqrt(m2)
        skew = float(np.mean(z ** 3))
        kurt = float(np.mean(z ** 4))
    else:
        skew = kurt = math.nan
    return SummaryStats(
        n=int(x.size),
        mean=mean,
        min=float(x.min()),
        max=float(x.max()),
        std_dev=float(np.std(x, ddof=1)),
        skewness=skew,
        kurtosis=kurt,
    )


def adf_critical_values(nobs, regression="c"):
    """Finite-sample critical values at 1%, 5% and 10%."""
    rows = ADF_CRITICAL_SURFACES[regression]
    return {lev: b[0] + b[1] / nobs + b[2] / nobs ** 2 + b[3] / nobs ** 3 for lev, b in zip(LEVELS, rows)}


def _adf_design(y, lag, maxlag, regression):
    dy = np.diff(y)
    n = dy.size - maxlag
    cols = [y[maxlag:-1]]
    for j in range(1, lag + 1):
        cols.append(dy[maxlag - j:maxlag - j + n])
    if regression in ("c", "ct"):
        cols.append(np.ones(n))
    if regression == "ct":
        cols.append(np.arange(1, n + 1, dtype=float))
    return np.column_stack(cols), dy[maxlag:]


def _ols(X, z):
    beta, *_ = np.linalg.lstsq(X, z, rcond=None)
    resid = z - X @ beta
    return beta, resid


def adf_test(values, regression="c", max_lag=None):
    """Augmented Dickey-Fuller test for a unit root.

    Regresses ``dy_t`` on ``y_{t-1}``, lagged differences and the
    deterministic terms (``"n"``, ``"c"`` or ``"ct"``). The lag order
    minimizes BIC over ``0..max_lag`` on a common sample (default
    ``max_lag = floor(12 * (n/100)**0.25)``); the chosen model is then
    re-estimated on all available observations.

    Returns
    -------
    ADFResult
        ``reject_level`` is the smallest of 1%, 5%, 10% at which the unit
        root is rejected, or None.
    """
    if regression not in ADF_CRITICAL_SURFACES:
        raise ValueError(f"regression must be one of {sorted(ADF_CRITICAL_SURFACES)}")
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or not np.all(np.isfinite(y)):
        raise ValueError("need a finite 1-d series")
    n = y.size
    if n < MIN_ADF_OBS:
        raise ValueError(f"ADF needs at least {MIN_ADF_OBS} observations, got {n}")
    if max_lag is None:
        max_lag = int(math.floor(12.0 * (n / 100.0) ** 0.25))
    n_det = {"n": 0, "c": 1, "ct": 2}[regression]
    max_lag = max(0, min(int(max_lag), n // 2 - n_det - 2))

    best_lag, best_bic = 0, math.inf
    for lag in range(max_lag + 1):
        X, z = _adf_design(y, lag, max_lag, regression)
        _, resid = _ols(X, z)
        m = z.size
        ssr = float(resid @ resid)
        if ssr <= 0:
            best_lag = lag
            break
        bic = m * math.log(ssr / m) + X.shape[1] * math.log(m)
        if bic < best_bic:
            best_lag, best_bic = lag, bic

    X, z = _adf_design(y, best_lag, best_lag, regression)
    beta, resid = _ols(X, z)
    m, k = X.shape
    s2 = float(resid @ resid) / (m - k)
    cov = s2 * np.linalg.pinv(X.T @ X)
    se = math.sqrt(cov[0, 0]) if cov[0, 0] > 0 else math.nan
    stat = float(beta[0] / se) if se > 0 else -math.inf
    crit = adf_critical_values(m, regression)
    level = next((lev for lev in LEVELS if stat < crit[lev]), None)
    return ADFResult(stat, best_lag, m, crit, level, regression)


def describe(values, regression="c"):
    """:func:`summary` plus the ADF statistic and its rejection level."""
    s = summary(values)
    adf = adf_test(values, regression)
    return SummaryStats(**{**s.__dict__, "adf_stat": adf.statistic, "adf_reject_level": adf.reject_level})


def summary_table_csv(rows):
    """CSV with one line per series.

    ``rows`` is a sequence of ``(variable, freq, SummaryStats)``.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variable", "obs", "freq", "mean", "min", "max", "std", "skew", "kurt", "ADF"])
    stars = {"1%": "***", "5%": "**", "10%": "*"}
    for name, freq, s in rows:
        adf = "" if not math.isfinite(s.adf_stat) else f"{s.adf_stat:.2f}{stars.get(s.adf_reject_level, '')}"
        w.writerow([name, s.n, freq] + [f"{v:.6g}" for v in
                   (s.mean, s.min, s.max, s.std_dev, s.skewness, s.kurtosis)] + [adf])
    return buf.getvalue()
