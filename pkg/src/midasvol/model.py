"""GARCH-MIDAS model family: long-run component, short-run filter, simulation.

Ten variants are covered by :class:`ModelSpec`: one or two long-run factors
(realized volatility, a monthly macro index level, or its log change),
combined in a fixed-span (monthly) or rolling-window (daily) long-run
component. The conditional variance is ``sigma2 = tau * g``, with ``g`` a
unit-mean GARCH(1,1) recursion on returns standardized by ``tau``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .data import DailySeries, DataError, MonthlySeries, align
from .kernels import (
    DEFAULT_WINDOW,
    _macro_rolling_values,
    _rolling_rv_values,
    beta_weights,
    expand_to_days,
    lag_matrix,
)

RV = "rv"
GEPU = "gepu"
GEPU_CHANGE = "gepu-change"

FACTOR_ALIASES = {
    "rv": RV,
    "gepu": GEPU,
    "gepu-level": GEPU,
    "gepu-change": GEPU_CHANGE,
    "dgepu": GEPU_CHANGE,
}

# model id -> (factors, window mode)
MODEL_IDS = {
    "I": ((RV,), "fixed"),
    "II": ((RV,), "rolling"),
    "III": ((GEPU,), "fixed"),
    "IV": ((GEPU_CHANGE,), "fixed"),
    "V": ((GEPU,), "rolling"),
    "VI": ((GEPU_CHANGE,), "rolling"),
    "VII": ((RV, GEPU), "fixed"),
    "VIII": ((RV, GEPU_CHANGE), "fixed"),
    "IX": ((RV, GEPU), "rolling"),
    "X": ((RV, GEPU_CHANGE), "rolling"),
}

# AR(1) coefficient and stationary sd of the synthetic macro factor
SIM_AR_COEF = 0.9
SIM_FACTOR_SD = 0.18
SIM_GEPU_LEVEL = 152.81


class InfeasibleParametersError(ValueError):
    """Parameters violate the model's constraints or give a non-positive variance."""


@dataclass(frozen=True)
class ModelSpec:
    """Which GARCH-MIDAS variant to build.

    Parameters
    ----------
    factors : tuple of str
        One factor, or two with ``"rv"`` first. Names other than ``"rv"``
        refer to monthly factors stored in the panel.
    mode : {"fixed", "rolling"}
        Fixed-span (monthly constant) or rolling-window (daily) long-run term.
    K : int
        Number of MIDAS lags.
    stride : int
        Days between successive MIDAS lags in rolling mode.
    window : int
        Rolling window length in trading days for the rolling factors.
    link : {"linear", "exp"}
        ``tau = m + sum(...)`` or ``tau = exp(m + sum(...))``.
    macro_transform : {None, "identity", "log", "standardize"}
        Applied to macro factors before weighting. ``None`` means log for
        index levels (``"gepu"``) and identity for everything else.
    fit_omega1 : bool
        Estimate the first Beta shape parameter instead of fixing it at 1.
    """

    factors: tuple = (RV,)
    mode: str = "rolling"
    K: int = 36
    stride: int = 22
    window: int = DEFAULT_WINDOW
    link: str = "linear"
    macro_transform: str | None = None
    fit_omega1: bool = False

    def __post_init__(self):
        factors = tuple(FACTOR_ALIASES.get(str(f).lower(), str(f)) for f in self.factors)
        if len(factors) == 2 and RV in factors:
            factors = (RV,) + tuple(f for f in factors if f != RV)
        object.__setattr__(self, "factors", factors)
        if len(factors) not in (1, 2) or len(set(factors)) != len(factors):
            raise ValueError(f"need one or two distinct factors, got {factors}")
        if len(factors) == 2 and factors[0] != RV:
            raise ValueError("two-factor models must include 'rv'")
        if self.mode not in ("fixed", "rolling"):
            raise ValueError(f"mode must be 'fixed' or 'rolling', got {self.mode!r}")
        if self.link not in ("linear", "exp"):
            raise ValueError(f"link must be 'linear' or 'exp', got {self.link!r}")
        if self.macro_transform not in (None, "identity", "log", "standardize"):
            raise ValueError(f"unknown macro_transform {self.macro_transform!r}")
        if int(self.K) < 1 or int(self.stride) < 1 or int(self.window) < 1:
            raise ValueError("K, stride and window must be >= 1")

    @classmethod
    def from_model_id(cls, model_id, **kwargs):
        """Spec for one of the numbered variants ``"I"`` .. ``"X"``."""
        factors, mode = MODEL_IDS[str(model_id).upper()]
        return cls(factors=factors, mode=mode, **kwargs)

    @property
    def model_id(self):
        for key, (factors, mode) in MODEL_IDS.items():
            if factors == self.factors and mode == self.mode:
                return key
        return None

    @property
    def macro_factors(self):
        return tuple(f for f in self.factors if f != RV)

    @property
    def theta_names(self):
        if len(self.factors) == 1:
            return ("theta",)
        return ("theta_rv", "theta_mv")

    @property
    def param_names(self):
        names = ("mu", "alpha", "beta") + self.theta_names + ("omega2", "m")
        if self.fit_omega1:
            names += ("omega1",)
        return names

    @property
    def n_params(self):
        return len(self.param_names)

    def transform_for(self, factor):
        if self.macro_transform is not None:
            return self.macro_transform
        return "log" if factor == GEPU else "identity"

    def to_dict(self):
        return {
            "factors": list(self.factors),
            "fit_omega1": self.fit_omega1,
            "K": self.K,
            "link": self.link,
            "macro_transform": self.macro_transform,
            "mode": self.mode,
            "model_id": self.model_id,
            "stride": self.stride,
            "window": self.window,
        }


@dataclass(frozen=True)
class ParamSet:
    """Model parameters.

    ``thetas`` holds one slope per factor, in ``ModelSpec.factors`` order.
    Zero ``alpha``/``beta`` are accepted (degenerate short-run component).
    """

    mu: float
    alpha: float
    beta: float
    thetas: tuple
    omega2: float
    m: float
    omega1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(float(t) for t in np.atleast_1d(self.thetas)))
        for name in ("mu", "alpha", "beta", "omega2", "m", "omega1"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InfeasibleParametersError(f"{name} is not finite")
            object.__setattr__(self, name, value)
        if not all(math.isfinite(t) for t in self.thetas):
            raise InfeasibleParametersError("theta is not finite")
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta >= 1:
            raise InfeasibleParametersError(
                f"need alpha >= 0, beta >= 0, alpha + beta < 1; got {self.alpha}, {self.beta}")
        if self.omega2 < 1 or self.omega1 < 1:
            raise InfeasibleParametersError("omega1 and omega2 must be >= 1")

    def to_vector(self, spec):
        v = [self.mu, self.alpha, self.beta, *self.thetas, self.omega2, self.m]
        if spec.fit_omega1:
            v.append(self.omega1)
        return np.array(v, dtype=float)

    @classmethod
    def from_vector(cls, x, spec):
        x = np.asarray(x, dtype=float)
        nt = len(spec.factors)
        omega1 = x[5 + nt] if spec.fit_omega1 else 1.0
        return cls(x[0], x[1], x[2], tuple(x[3:3 + nt]), x[3 + nt], x[4 + nt], omega1)

    def as_dict(self, spec):
        return dict(zip(spec.param_names, self.to_vector(spec).tolist()))


@dataclass(frozen=True, eq=False)
class VolatilityPath:
    """Filtered variance decomposition over the filtering span.

    ``tau`` is in the spec's native frequency (monthly for fixed span,
    daily for rolling); ``tau_daily``, ``g`` and ``sigma2`` share dates.
    """

    tau: object
    tau_daily: DailySeries
    g: DailySeries
    sigma2: DailySeries

    @property
    def dates(self):
        return self.sigma2.dates

    def to_frame(self, annualize=False, periods=252):
        import pandas as pd

        df = pd.DataFrame({
            "date": self.dates.astype(str),
            "sigma2": self.sigma2.values,
            "tau": self.tau_daily.values,
            "g": self.g.values,
        })
        if annualize:
            df["annualized_vol"] = np.sqrt(periods * self.sigma2.values)
        return df


# --- factor preparation -------------------------------------------------

def transform_factor(values, how):
    values = np.asarray(values, dtype=float)
    if how == "identity":
        return values
    if how == "log":
        ok = np.isfinite(values)
        if np.any(values[ok] <= 0):
            raise DataError("log transform needs a positive factor")
        return np.log(values)
    if how == "standardize":
        ok = np.isfinite(values)
        sd = values[ok].std(ddof=1) if ok.sum() > 1 else 0.0
        if not sd > 0:
            raise DataError("cannot standardize a constant factor")
        return (values - values[ok].mean()) / sd
    raise ValueError(f"unknown transform {how!r}")


def monthly_factor_values(panel, spec, factor):
    """Prepared factor on the panel's month axis (fixed-span mode)."""
    if factor == RV:
        out = np.full(panel.months.size, np.nan)
        idx = panel.return_months
        lo, hi = idx[0], idx[-1] + 1
        out[lo:hi] = np.bincount(panel.month_of_day - lo, weights=panel.returns.values ** 2, minlength=hi - lo)
        return out
    return transform_factor(panel.factor(factor), spec.transform_for(factor))


def daily_factor_values(panel, spec, factor):
    """Prepared rolling-window factor on the return-day axis (NaN before defined)."""
    if factor == RV:
        return _rolling_rv_values(panel.returns.values, spec.window)
    monthly = transform_factor(panel.factor(factor), spec.transform_for(factor))
    daily = expand_to_days(panel, monthly)
    if not np.all(np.isfinite(daily)):
        raise DataError(f"factor {factor!r} missing for some return months")
    return _macro_rolling_values(daily, spec.window)


@dataclass(frozen=True, eq=False)
class Design:
    """Parameter-free precomputation of the long-run regressors for a panel.

    ``lags[f]`` has one row per long-run unit (month or day) and one column
    per MIDAS lag. ``unit_of_day`` maps return days to rows; ``first_day``
    is the first day whose long-run component is computable.
    """

    spec: ModelSpec
    lags: tuple
    unit_of_day: np.ndarray
    first_day: int
    unit_dates: np.ndarray

    def weighted(self, weights):
        """Weighted factor sums, one column per factor, per unit."""
        return np.column_stack([L @ weights for L in self.lags])

    def tau_units(self, params, weights=None):
        if weights is None:
            weights = beta_weights(params.omega1, params.omega2, self.spec.K).weights
        x = self.weighted(weights) @ np.asarray(params.thetas)
        if self.spec.link == "exp":
            return np.exp(params.m + x)
        return params.m + x

    def tau_daily(self, params, weights=None):
        return self.tau_units(params, weights)[self.unit_of_day]


def build_design(panel, spec):
    if spec.mode == "fixed":
        arrays = [monthly_factor_values(panel, spec, f) for f in spec.factors]
        lags = tuple(lag_matrix(a, spec.K, 1) for a in arrays)
        unit_of_day = panel.month_of_day
        unit_dates = panel.months
    else:
        arrays = [daily_factor_values(panel, spec, f) for f in spec.factors]
        lags = tuple(lag_matrix(a, spec.K, spec.stride) for a in arrays)
        unit_of_day = np.arange(panel.n_days)
        unit_dates = panel.dates
    ok_units = np.all([np.all(np.isfinite(L), axis=1) for L in lags], axis=0)
    ok_days = ok_units[unit_of_day]
    if not np.any(ok_days):
        need = f"{spec.K} months" if spec.mode == "fixed" else f"{spec.K * spec.stride + spec.window} days"
        raise DataError(f"insufficient history: the long-run component needs {need} of factor history")
    first = int(np.argmax(ok_days))
    if not np.all(ok_days[first:]):
        raise DataError("long-run component undefined inside the sample")
    for L in lags:
        L[~ok_units] = 0.0
    return Design(spec, lags, np.asarray(unit_of_day), first, unit_dates)


# --- operations ---------------------------------------------------------

def _weights_for(params, spec, weights):
    if weights is None:
        return beta_weights(params.omega1, params.omega2, spec.K)
    if len(weights.weights) != spec.K:
        raise ValueError(f"weights have {len(weights.weights)} lags, spec has K={spec.K}")
    return weights


def _combine(params, spec, lag_mats, phi):
    x = sum(t * (L @ phi) for t, L in zip(params.thetas, lag_mats))
    if spec.link == "exp":
        return np.exp(params.m + x)
    return params.m + x


def long_run_fixed(params, spec, factors, weights=None):
    """Monthly long-run variance from prepared monthly factors.

    ``factors`` maps each name in ``spec.factors`` to a :class:`MonthlySeries`
    already in model units (realized variance, transformed macro index).
    The result covers months with ``K`` lagged observations of every factor.
    Non-positive values under the linear link are returned as is; callers
    treat them as infeasible parameters.
    """
    weights = _weights_for(params, spec, weights)
    if len(params.thetas) != len(spec.factors):
        raise ValueError("one theta per factor required")
    series = [factors[f] for f in spec.factors]
    start = min(s.months[0] for s in series)
    end = max(s.months[-1] for s in series) + 1
    axis = np.arange(start, end, dtype="datetime64[M]")
    lag_mats = [lag_matrix(s.value_at(axis), spec.K, 1) for s in series]
    ok = np.all([np.all(np.isfinite(L), axis=1) for L in lag_mats], axis=0)
    if not np.any(ok):
        raise DataError(f"insufficient factor history: need {spec.K} months before the first output month")
    tau = _combine(params, spec, [L[ok] for L in lag_mats], weights.weights)
    return MonthlySeries(axis[ok], tau)


def long_run_rolling(params, spec, factors, weights=None):
    """Daily long-run variance from prepared rolling factors.

    Each factor is a :class:`DailySeries` on (a suffix of) a common
    trading-day grid; lag ``k`` reads the value ``k * stride`` grid days back.
    """
    weights = _weights_for(params, spec, weights)
    if len(params.thetas) != len(spec.factors):
        raise ValueError("one theta per factor required")
    series = [factors[f] for f in spec.factors]
    grid = np.unique(np.concatenate([s.dates for s in series]))
    lag_mats = []
    for s in series:
        x = np.full(grid.size, np.nan)
        x[np.searchsorted(grid, s.dates)] = s.values
        lag_mats.append(lag_matrix(x, spec.K, spec.stride))
    ok = np.all([np.all(np.isfinite(L), axis=1) for L in lag_mats], axis=0)
    if not np.any(ok):
        raise DataError(
            f"insufficient factor history: need {spec.K * spec.stride} days before the first output day")
    tau = _combine(params, spec, [L[ok] for L in lag_mats], weights.weights)
    return DailySeries(grid[ok], tau)


def _filter_g(resid, tau, alpha, beta, prev_resid=None):
    """Unit-mean GARCH(1,1) recursion on ``resid / sqrt(tau)``.

    ``g[0]`` starts from the unconditional mean 1, updated with
    ``prev_resid`` when the residual before the span is known.
    """
    n = resid.size
    g = np.empty(n)
    if n == 0:
        return g
    omega = 1.0 - alpha - beta
    g0 = 1.0 if prev_resid is None else omega + alpha * prev_resid ** 2 / tau[0] + beta
    g[0] = g0
    if n > 1:
        c = omega + alpha * resid[:-1] ** 2 / tau[1:]
        g[1:], _ = lfilter([1.0], [1.0, -beta], c, zi=[beta * g0])
    return g


def filter_short_run(params, returns, tau_daily):
    """Short-run component ``g`` for a return series and an aligned daily ``tau``.

    ``g_i = (1 - alpha - beta) + alpha * (r_{i-1} - mu)**2 / tau_i + beta * g_{i-1}``
    with ``g_1 = 1``.
    """
    if not np.array_equal(returns.dates, tau_daily.dates):
        raise DataError("tau_daily must be aligned to the returns")
    tau = tau_daily.values
    if np.any(tau <= 0):
        raise InfeasibleParametersError("tau must be positive")
    if params.alpha + params.beta >= 1:
        raise InfeasibleParametersError("alpha + beta must be < 1")
    g = _filter_g(returns.values - params.mu, tau, params.alpha, params.beta)
    return DailySeries(returns.dates, g)


def total_variance(tau, g, panel=None):
    """``sigma2 = tau * g`` with monthly ``tau`` expanded to the days of ``g``."""
    if isinstance(tau, MonthlySeries):
        if panel is None:
            day_months = g.dates.astype("datetime64[M]")
        else:
            pos = np.searchsorted(panel.dates, g.dates)
            if np.any(pos >= panel.n_days) or not np.array_equal(panel.dates[pos], g.dates):
                raise DataError("g dates not in panel")
            day_months = panel.months[panel.month_of_day[pos]]
        t = tau.value_at(day_months)
        if np.any(~np.isfinite(t)):
            raise DataError("tau does not cover every month of g")
    else:
        if len(tau) != len(g) or not np.array_equal(tau.dates, g.dates):
            raise DataError(f"length mismatch: tau has {len(tau)} days, g has {len(g)}")
        t = tau.values
    return DailySeries(g.dates, t * g.values)


def _span_start(design, panel, sample_start):
    i0 = design.first_day
    if sample_start is not None:
        i0 = max(i0, int(np.searchsorted(panel.dates, np.datetime64(sample_start, "D"))))
    if i0 >= panel.n_days:
        raise DataError("no days left after burn-in / sample start")
    return i0


def compute_path(params, panel, spec, design=None, sample_start=None):
    """Filtered :class:`VolatilityPath` for ``params`` on ``panel``.

    Filtering starts at the first day whose long-run component is defined
    (or ``sample_start`` if later); the previous day's return, when present,
    seeds the first short-run update.
    """
    if design is None:
        design = build_design(panel, spec)
    i0 = _span_start(design, panel, sample_start)
    tau_units = design.tau_units(params)
    tau = tau_units[design.unit_of_day][i0:]
    if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
        raise InfeasibleParametersError("long-run variance is not positive")
    r = panel.returns.values
    resid = r[i0:] - params.mu
    prev = r[i0 - 1] - params.mu if i0 > 0 else None
    g = _filter_g(resid, tau, params.alpha, params.beta, prev)
    dates = panel.dates[i0:]
    if spec.mode == "fixed":
        used = np.unique(design.unit_of_day[i0:])
        tau_native = MonthlySeries(design.unit_dates[used], tau_units[used])
    else:
        tau_native = DailySeries(dates, tau)
    return VolatilityPath(
        tau=tau_native,
        tau_daily=DailySeries(dates, tau),
        g=DailySeries(dates, g),
        sigma2=DailySeries(dates, tau * g),
    )


# --- simulation ---------------------------------------------------------

def _synthetic_factor(rng, n, factor):
    sd_innov = SIM_FACTOR_SD * math.sqrt(1 - SIM_AR_COEF ** 2)
    x = np.empty(n)
    x[0] = rng.normal(0.0, SIM_FACTOR_SD)
    eta = rng.normal(0.0, sd_innov, size=n)
    for t in range(1, n):
        x[t] = SIM_AR_COEF * x[t - 1] + eta[t]
    if factor == GEPU:
        return SIM_GEPU_LEVEL * np.exp(x)
    return x


def simulate(params, spec, months, days_per_month=22, seed=0, start="2000-01"):
    """Simulate returns and the latent variance path.

    Months have ``days_per_month`` trading days (calendar days 1..n, so at
    most 28). Macro factors are stationary AR(1) paths with ``K`` months of
    history before the first return month. Until the long-run component
    becomes computable, returns are Gaussian with a constant warm-up
    variance: the long-run fixed point with macro factors at their sample
    mean (``m`` when that point does not exist).

    Returns
    -------
    panel : AlignedPanel
    path : VolatilityPath
        True ``tau``, ``g`` and ``sigma2`` from the first computable day.
    """
    if not isinstance(params, ParamSet):
        raise TypeError("params must be a ParamSet")
    if len(params.thetas) != len(spec.factors):
        raise ValueError("one theta per factor required")
    months, dpm = int(months), int(days_per_month)
    if months < 1 or not 1 <= dpm <= 28:
        raise ValueError("need months >= 1 and 1 <= days_per_month <= 28")
    rng = np.random.default_rng(seed)
    first_month = np.datetime64(start, "M")
    month_axis = np.arange(first_month, first_month + months, dtype="datetime64[M]")
    dates = (month_axis.astype("datetime64[D]")[:, None] + np.arange(dpm)).ravel()
    n = dates.size
    month_of_day = np.repeat(np.arange(months), dpm)

    hist = spec.K
    factor_series = {}
    prepared = {}
    for f in spec.macro_factors:
        raw = _synthetic_factor(rng, hist + months, f)
        axis = np.arange(first_month - hist, first_month + months, dtype="datetime64[M]")
        factor_series[f] = MonthlySeries(axis, raw)
        prepared[f] = transform_factor(raw, spec.transform_for(f))

    phi = beta_weights(params.omega1, params.omega2, spec.K).weights
    eps = rng.standard_normal(n)

    macro_level = sum(t * prepared[f].mean() for t, f in zip(params.thetas, spec.factors) if f != RV)
    if spec.link == "exp":
        v0 = math.exp(params.m + macro_level)
    else:
        theta_rv = params.thetas[0] if spec.factors[0] == RV else 0.0
        span = spec.window if spec.mode == "rolling" else dpm
        denom = 1.0 - theta_rv * span
        v0 = (params.m + macro_level) / denom if denom > 0 else params.m
        if not v0 > 0:
            v0 = params.m
    if not v0 > 0:
        raise InfeasibleParametersError("no positive warm-up variance for these parameters")

    r = np.empty(n)
    tau = np.full(n, np.nan)
    g = np.full(n, np.nan)
    macro_daily = {f: prepared[f][hist:][month_of_day] for f in spec.macro_factors}
    rv_month = np.zeros(months)
    W, S, K = spec.window, spec.stride, spec.K
    first = None

    def tau_rolling(i):
        x = 0.0
        for theta, f in zip(params.thetas, spec.factors):
            vals = np.empty(K)
            for k in range(1, K + 1):
                j = i - k * S
                if j < W:
                    return None
                if f == RV:
                    vals[k - 1] = np.sum(r[j - W:j] ** 2)
                else:
                    vals[k - 1] = np.mean(macro_daily[f][j - W:j])
            x += theta * (vals @ phi)
        return x

    def tau_fixed(t):
        x = 0.0
        for theta, f in zip(params.thetas, spec.factors):
            if f == RV:
                if t < K:
                    return None
                vals = rv_month[t - K:t][::-1]
            else:
                vals = prepared[f][hist + t - K:hist + t][::-1]
            x += theta * (vals @ phi)
        return x

    month_tau = None
    omega = 1.0 - params.alpha - params.beta
    for i in range(n):
        t = month_of_day[i]
        if spec.mode == "fixed":
            if i % dpm == 0:
                if t > 0:
                    rv_month[t - 1] = np.sum(r[i - dpm:i] ** 2)
                month_tau = tau_fixed(t)
            x = month_tau
        else:
            x = tau_rolling(i)
        if x is None:
            r[i] = params.mu + math.sqrt(v0) * eps[i]
            continue
        ti = math.exp(params.m + x) if spec.link == "exp" else params.m + x
        if not (ti > 0 and math.isfinite(ti)):
            raise InfeasibleParametersError(f"long-run variance {ti} at day {i}")
        if first is None:
            first = i
            gi = 1.0 if i == 0 else omega + params.alpha * (r[i - 1] - params.mu) ** 2 / ti + params.beta
        else:
            gi = omega + params.alpha * (r[i - 1] - params.mu) ** 2 / ti + params.beta * g[i - 1]
        tau[i], g[i] = ti, gi
        r[i] = params.mu + math.sqrt(ti * gi) * eps[i]
        if not math.isfinite(r[i]):
            raise InfeasibleParametersError("simulated path overflowed")

    if first is None:
        raise DataError("simulation too short for the long-run component to start")

    panel = align(DailySeries(dates, r), factor_series, min_days=min(dpm, 15))
    sl = slice(first, n)
    d = dates[sl]
    if spec.mode == "fixed":
        used = np.unique(month_of_day[sl])
        tau_native = MonthlySeries(month_axis[used], tau[sl][np.searchsorted(month_of_day[sl], used)])
    else:
        tau_native = DailySeries(d, tau[sl])
    path = VolatilityPath(
        tau=tau_native,
        tau_daily=DailySeries(d, tau[sl]),
        g=DailySeries(d, g[sl]),
        sigma2=DailySeries(d, tau[sl] * g[sl]),
    )
    return panel, path
