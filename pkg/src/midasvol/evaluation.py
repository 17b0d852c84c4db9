"""Out-of-sample variance forecasts, loss functions and the Diebold-Mariano test."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .data import DailySeries, DataError
from .estimator import FitOptions, _json_float, fit, significance_stars
from .model import compute_path
from ._validation import check_panel_for_spec, check_same_dates

logger = logging.getLogger(__name__)

METRICS = ("RMSE", "RMAE", "RMSD", "RMAD")
BETTER_A = "better-A"
BETTER_B = "better-B"
INDISTINGUISHABLE = "indistinguishable"


# --- losses -------------------------------------------------------------

def _values(x):
    return np.asarray(x.values if isinstance(x, DailySeries) else x, dtype=float)


def loss(actuals, predictions, metric):
    """Forecast loss between realized and predicted variances.

    ``RMSE`` and ``RMAE`` compare variances; ``RMSD`` and ``RMAD`` compare
    their square roots. ``RMAE``/``RMAD`` are square roots of the mean
    absolute error.
    """
    metric = metric.upper()
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if isinstance(actuals, DailySeries) and isinstance(predictions, DailySeries):
        check_same_dates(actuals, predictions, "loss")
    a, p = _values(actuals), _values(predictions)
    if a.shape != p.shape:
        raise ValueError(f"length mismatch ({a.size} vs {p.size})")
    if a.size == 0:
        raise ValueError("empty input")
    if metric in ("RMSD", "RMAD"):
        if np.any(a < 0) or np.any(p < 0):
            raise ValueError("variances must be non-negative")
        a, p = np.sqrt(a), np.sqrt(p)
    e = a - p
    if metric in ("RMSE", "RMSD"):
        return math.sqrt(float(np.mean(e ** 2)))
    return math.sqrt(float(np.mean(np.abs(e))))


def all_losses(actuals, predictions):
    return {m.lower(): loss(actuals, predictions, m) for m in METRICS}


# --- Diebold-Mariano ----------------------------------------------------

@dataclass(frozen=True)
class DMOutcome:
    """Diebold-Mariano comparison of two error series.

    ``statistic`` is negative when ``A`` has the smaller squared errors.
    ``statistic`` and ``p_value`` are NaN when the loss differential is
    constant.
    """

    statistic: float
    p_value: float
    sign: str
    n: int
    hac_lags: int = 0

    @property
    def stars(self):
        return significance_stars(self.p_value)

    def to_dict(self):
        return {
            "hac_lags": self.hac_lags,
            "n": self.n,
            "p_value": _json_float(self.p_value),
            "sign": self.sign,
            "statistic": _json_float(self.statistic),
        }


def _long_run_variance(d, lags):
    # truncated (uniform) kernel; lags = 0 gives the plain variance
    dc = d - d.mean()
    n = dc.size
    v = float(dc @ dc) / n
    for k in range(1, lags + 1):
        v += 2.0 * float(dc[k:] @ dc[:-k]) / n
    return v


def dm_test(errors_a, errors_b, hac_lags=0, alpha=0.05):
    """Diebold-Mariano test on squared-error loss.

    ``D_s = e_A,s**2 - e_B,s**2`` and ``DM = mean(D) / sqrt(var(D) / n)``
    with the population variance of ``D``, referred to N(0, 1) two-sided.
    ``hac_lags > 0`` replaces ``var(D)`` by a truncated-kernel long-run
    variance. A constant ``D`` (or a non-positive long-run variance) gives
    an indistinguishable outcome without a statistic.
    """
    if isinstance(errors_a, DailySeries) and isinstance(errors_b, DailySeries):
        check_same_dates(errors_a, errors_b, "dm_test")
    ea, eb = _values(errors_a), _values(errors_b)
    if ea.shape != eb.shape:
        raise ValueError(f"length mismatch ({ea.size} vs {eb.size})")
    n = ea.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    hac_lags = int(hac_lags)
    if not 0 <= hac_lags < n:
        raise ValueError(f"hac_lags must be in [0, {n - 1}]")
    d = ea ** 2 - eb ** 2
    v = _long_run_variance(d, hac_lags)
    if not v > 0 or np.all(d == d[0]):
        return DMOutcome(math.nan, math.nan, INDISTINGUISHABLE, n, hac_lags)
    stat = float(np.mean(d)) / math.sqrt(v / n)
    p = float(2.0 * norm.sf(abs(stat)))
    if p >= alpha:
        sign = INDISTINGUISHABLE
    else:
        sign = BETTER_A if stat < 0 else BETTER_B
    return DMOutcome(stat, p, sign, n, hac_lags)


def dm_matrix(errors, hac_lags=0, alpha=0.05):
    """Pairwise DM outcomes; ``errors`` maps model labels to error series."""
    labels = list(errors)
    return {(a, b): dm_test(errors[a], errors[b], hac_lags, alpha)
            for a in labels for b in labels if a != b}


def dm_matrix_csv(errors, hac_lags=0, alpha=0.05):
    """Render pairwise DM statistics as a CSV matrix.

    Row model is ``A``, column model is ``B``; cells hold the statistic to
    two decimals with significance stars, and are empty on the diagonal or
    for indistinguishable constant differentials.
    """
    labels = list(errors)
    res = dm_matrix(errors, hac_lags, alpha)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model"] + labels)
    for a in labels:
        row = [a]
        for b in labels:
            o = res.get((a, b))
            row.append("" if o is None or not math.isfinite(o.statistic) else f"{o.statistic:.2f}{o.stars}")
        w.writerow(row)
    return buf.getvalue()


# --- rolling forecasts --------------------------------------------------

@dataclass(eq=False)
class EvalReport:
    """One-step-ahead variance forecasts and their losses.

    ``predictions`` hold ``E_s(sigma2_{s+1})`` and ``actuals`` the realized
    proxy ``(r_{s+1} - mu)**2`` on the same dates. ``refits`` lists each
    calibration origin with its parameter estimates.
    """

    model_id: str
    predictions: DailySeries
    actuals: DailySeries
    rmse: float
    rmae: float
    rmsd: float
    rmad: float
    n: int
    horizon: int = 1
    refits: list = field(default_factory=list)

    def __post_init__(self):
        check_same_dates(self.predictions, self.actuals, "EvalReport")

    @property
    def errors(self):
        """Variance forecast errors ``actual - predicted``."""
        return DailySeries(self.actuals.dates, self.actuals.values - self.predictions.values)

    def losses(self):
        return {"rmae": self.rmae, "rmad": self.rmad, "rmse": self.rmse, "rmsd": self.rmsd}

    def to_dict(self, include_series=True):
        out = {
            "horizon": self.horizon,
            "losses": self.losses(),
            "model_id": self.model_id,
            "n": self.n,
            "refits": self.refits,
        }
        if include_series:
            out["forecasts"] = [
                {"actual": float(a), "date": str(d), "predicted": float(p)}
                for d, a, p in zip(self.actuals.dates, self.actuals.values, self.predictions.values)
            ]
        return out

    def to_json(self, include_series=True):
        return json.dumps(self.to_dict(include_series), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d):
        rows = d.get("forecasts")
        if not rows:
            raise DataError("report has no forecast series")
        dates = np.array([r["date"] for r in rows], dtype="datetime64[D]")
        pred = DailySeries(dates, np.array([r["predicted"] for r in rows], dtype=float))
        act = DailySeries(dates, np.array([r["actual"] for r in rows], dtype=float))
        return cls(model_id=d.get("model_id") or "custom", predictions=pred, actuals=act,
                   n=len(rows), horizon=d.get("horizon", 1), refits=d.get("refits", []),
                   **all_losses(act, pred))

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame({
            "date": self.actuals.dates.astype(str),
            "actual": self.actuals.values,
            "predicted": self.predictions.values,
        })


def one_step_forecasts(params, panel, spec, start, end=None, sample_start=None):
    """Forecasts ``E_s(sigma2_{s+1})`` for days ``start <= s+1 < end``.

    The filtered variance on day ``s+1`` depends on returns and factors
    through day ``s`` only, so it is the one-step-ahead forecast. Filtering
    starts at ``sample_start`` (or the end of burn-in).

    Returns
    -------
    (predictions, actuals) : tuple of DailySeries
    """
    path = compute_path(params, panel, spec, sample_start=sample_start)
    dates = path.dates
    sel = dates >= np.datetime64(start, "D")
    if end is not None:
        sel &= dates < np.datetime64(end, "D")
    if not np.any(sel):
        raise DataError(f"no forecast days on or after {start}")
    d = dates[sel]
    pos = np.searchsorted(panel.dates, d)
    actual = (panel.returns.values[pos] - params.mu) ** 2
    return DailySeries(d, path.sigma2.values[sel]), DailySeries(d, actual)


def _shift_years(date, years):
    d = np.datetime64(date, "D")
    y = d.astype("datetime64[Y]").astype(int) + 1970
    month_day = str(d)[4:]
    if month_day == "-02-29":
        month_day = "-02-28"
    return np.datetime64(f"{y + years:04d}{month_day}", "D")


def rolling_forecast(panel, spec, calib_years=13, refit_every=22, split=None,
                     options=None, params=None, n_jobs=1):
    """Rolling-origin one-step-ahead variance evaluation.

    Parameters
    ----------
    panel : AlignedPanel
    spec : ModelSpec
    calib_years : int
        Length of the calibration window preceding each refit origin.
    refit_every : int or None
        Forecast days between refits; ``None`` (or ``math.inf``) calibrates
        once at the split.
    split : date-like, optional
        First forecast date. Defaults to the first return date plus
        ``calib_years``.
    options : FitOptions, optional
    params : ParamSet, optional
        Fixed parameters; skips estimation entirely.
    n_jobs : int
        Refits run in a thread pool of this size.

    Returns
    -------
    EvalReport
    """
    check_panel_for_spec(panel, spec)
    dates = panel.dates
    split = _shift_years(dates[0], calib_years) if split is None else np.datetime64(split, "D")
    s0 = int(np.searchsorted(dates, split))
    if s0 == 0 or s0 >= panel.n_days:
        raise DataError(f"split {split} leaves no calibration or no forecast days")
    if refit_every is None or refit_every == math.inf:
        step = panel.n_days - s0
    else:
        step = int(refit_every)
        if step < 1:
            raise ValueError("refit_every must be >= 1")
    origins = list(range(s0, panel.n_days, step))
    options = options or FitOptions()

    def window(idx):
        origin = dates[idx]
        stop = dates[idx + step] if idx + step < panel.n_days else None
        cal_start = _shift_years(origin, -calib_years)
        if params is not None:
            p, ok = params, True
        else:
            sub = panel.truncate(origin)
            res = fit(sub, spec, replace(options, sample_start=cal_start, compute_std_errors=False))
            p, ok = res.params, res.converged
        pred, act = one_step_forecasts(p, panel, spec, origin, stop, sample_start=cal_start)
        return origin, p, pred, act, ok

    if n_jobs and n_jobs > 1 and params is None:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(window, origins))
    else:
        parts = [window(i) for i in origins]

    pred_d = np.concatenate([p[2].dates for p in parts])
    pred_v = np.concatenate([p[2].values for p in parts])
    act_v = np.concatenate([p[3].values for p in parts])
    predictions = DailySeries(pred_d, pred_v)
    actuals = DailySeries(pred_d, act_v)
    refits = [{"converged": ok, "origin": str(o), "params": p.as_dict(spec)} for o, p, _, _, ok in parts]
    logger.info("rolling forecast: %d days, %d calibrations", pred_d.size, len(parts))
    return EvalReport(
        model_id=spec.model_id or "custom",
        predictions=predictions,
        actuals=actuals,
        n=int(pred_d.size),
        refits=refits,
        **all_losses(actuals, predictions),
    )
