"""Gaussian quasi-maximum-likelihood estimation of GARCH-MIDAS models."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import minimize
from scipy.stats import norm
from sklearn.base import BaseEstimator

from .data import DataError
from .kernels import beta_weights, lag_matrix
from .model import (
    InfeasibleParametersError,
    ModelSpec,
    ParamSet,
    VolatilityPath,
    _filter_g,
    _span_start,
    build_design,
    compute_path,
    monthly_factor_values,
)
from ._validation import check_panel, check_panel_for_spec

logger = logging.getLogger(__name__)

PENALTY = 1e10
LOG_2PI = math.log(2 * math.pi)
SIMPLEX_CAP = 1.0 - 1e-6


class DegenerateInputError(DataError):
    """Returns have zero variance over the likelihood span."""


def information_criteria(llf, p, n):
    """Bayesian information criterion ``p * ln(n) - 2 * llf``."""
    if n < 1 or p < 1:
        raise ValueError("need n >= 1 and p >= 1")
    return p * math.log(n) - 2.0 * llf


def gaussian_nll(resid, sigma2):
    """Sum of ``0.5 * (ln 2pi + ln sigma2 + resid**2 / sigma2)``."""
    return 0.5 * float(np.sum(LOG_2PI + np.log(sigma2) + resid ** 2 / sigma2))


class Objective:
    """Negative log-likelihood of a spec on a panel, as a function of parameters.

    Construction does all parameter-free work (factor lags, likelihood mask);
    evaluation is a weighted lag sum plus one linear filter pass.
    """

    def __init__(self, panel, spec, sample_start=None):
        check_panel_for_spec(panel, spec)
        self.panel = panel
        self.spec = spec
        self.design = build_design(panel, spec)
        self.i0 = _span_start(self.design, panel, sample_start)
        u = self.design.unit_of_day[self.i0:]
        self.u0 = int(u[0])
        self.lags = [L[self.u0:] for L in self.design.lags]
        self.unit_idx = u - self.u0
        r = panel.returns.values
        self.r = r[self.i0:]
        self.r_prev = r[self.i0 - 1] if self.i0 > 0 else None
        self.mask = panel.day_retained[self.i0:]
        self.n_obs = int(np.count_nonzero(self.mask))
        if self.n_obs == 0:
            raise DataError("no retained days in the likelihood span")

    def tau(self, params):
        phi = beta_weights(params.omega1, params.omega2, self.spec.K).weights
        x = 0.0
        for theta, L in zip(params.thetas, self.lags):
            x = x + theta * (L @ phi)
        if self.spec.link == "exp":
            t = np.exp(params.m + x)
        else:
            t = params.m + x
        return np.broadcast_to(t, (len(self.lags[0]),))[self.unit_idx]

    def __call__(self, params):
        """NLL at ``params``; :data:`PENALTY` when they are infeasible."""
        if not isinstance(params, ParamSet):
            try:
                params = ParamSet.from_vector(params, self.spec)
            except (InfeasibleParametersError, ValueError):
                return PENALTY
        tau = self.tau(params)
        if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
            return PENALTY
        resid = self.r - params.mu
        prev = None if self.r_prev is None else self.r_prev - params.mu
        g = _filter_g(resid, tau, params.alpha, params.beta, prev)
        sigma2 = tau * g
        if not np.all(np.isfinite(sigma2)) or np.any(sigma2 <= 0):
            return PENALTY
        value = gaussian_nll(resid[self.mask], sigma2[self.mask])
        return value if math.isfinite(value) else PENALTY


def negative_log_likelihood(params, panel, spec, sample_start=None):
    """Gaussian NLL over the likelihood days of ``panel``.

    Burn-in days (long-run component not yet computable) and months below
    the trading-day threshold are excluded. Infeasible parameters give a
    large finite penalty instead of raising.
    """
    return Objective(panel, spec, sample_start)(params)


# --- reparameterization -------------------------------------------------

def _softplus(x):
    return np.logaddexp(0.0, x)


def _softplus_inv(y):
    y = max(float(y), 1e-12)
    return y + math.log(-math.expm1(-y))


class Reparam:
    """Smooth bijection between unconstrained coordinates and parameters.

    ``alpha, beta`` live on the open simplex scaled by ``1 - 1e-6``; the
    Beta shapes are ``1 + softplus``. Location/scale parameters are divided
    by data-derived scales so all coordinates are of order one.
    """

    def __init__(self, spec, mu_scale, m_scale, theta_scales):
        self.spec = spec
        self.scale_r = mu_scale
        self.theta_scales = np.asarray(theta_scales, dtype=float)
        self.m_scale = 1.0 if spec.link == "exp" else m_scale

    def to_params(self, u):
        u = np.asarray(u, dtype=float)
        nt = len(self.spec.factors)
        lse = np.logaddexp(0.0, np.logaddexp(u[1], u[2]))
        alpha = SIMPLEX_CAP * math.exp(u[1] - lse)
        beta = SIMPLEX_CAP * math.exp(u[2] - lse)
        thetas = tuple(u[3:3 + nt] * self.theta_scales)
        omega2 = 1.0 + float(_softplus(u[3 + nt]))
        m = u[4 + nt] * self.m_scale
        omega1 = 1.0 + float(_softplus(u[5 + nt])) if self.spec.fit_omega1 else 1.0
        return ParamSet(u[0] * self.scale_r, alpha, beta, thetas, omega2, m, omega1)

    def to_unconstrained(self, params):
        rest = SIMPLEX_CAP - params.alpha - params.beta
        a = max(params.alpha, 1e-10)
        b = max(params.beta, 1e-10)
        rest = max(rest, 1e-10)
        u = [params.mu / self.scale_r, math.log(a / rest), math.log(b / rest)]
        u += list(np.asarray(params.thetas) / self.theta_scales)
        u += [_softplus_inv(params.omega2 - 1.0), params.m / self.m_scale]
        if self.spec.fit_omega1:
            u.append(_softplus_inv(params.omega1 - 1.0))
        return np.array(u, dtype=float)


# --- numerical derivatives ----------------------------------------------

def hessian_steps(x):
    return np.maximum(1e-5, 1e-4 * np.abs(np.asarray(x, dtype=float)))


def numerical_hessian(func, x, steps=None):
    """Central-difference Hessian of ``func`` at ``x``.

    Default steps are ``max(1e-5, 1e-4 * |x_i|)`` per coordinate.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    h = hessian_steps(x) if steps is None else np.asarray(steps, dtype=float)
    f0 = func(x)
    H = np.empty((n, n))
    E = np.diag(h)
    for i in range(n):
        fp, fm = func(x + E[i]), func(x - E[i])
        H[i, i] = (fp - 2 * f0 + fm) / h[i] ** 2
        for j in range(i):
            fpp = func(x + E[i] + E[j])
            fpm = func(x + E[i] - E[j])
            fmp = func(x - E[i] + E[j])
            fmm = func(x - E[i] - E[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4 * h[i] * h[j])
    return H


def hessian_std_errors(func, x, steps=None, penalty=None):
    """Standard errors from the inverse numerical Hessian of an NLL.

    Returns ``(se, ok)``. ``ok`` is False (and ``se`` all NaN) when the
    Hessian is not positive definite, or when any stencil point hit
    ``penalty`` (the stencil crossed the feasible boundary).
    """
    x = np.asarray(x, dtype=float)
    hit = []

    def wrapped(z):
        v = func(z)
        if penalty is not None and v >= penalty:
            hit.append(z)
        return v

    H = numerical_hessian(wrapped, x, steps)
    nan = np.full(x.size, np.nan)
    if hit or not np.all(np.isfinite(H)):
        return nan, False
    H = 0.5 * (H + H.T)
    d = np.diag(H)
    if np.any(d <= 0):
        return nan, False
    # definiteness judged on the unit-diagonal form; parameters differ in scale by many orders
    s = 1.0 / np.sqrt(d)
    if np.linalg.eigvalsh(H * np.outer(s, s))[0] <= 1e-10:
        return nan, False
    try:
        c = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return nan, False
    cinv = np.linalg.solve(c, np.eye(x.size))
    cov = cinv.T @ cinv
    return np.sqrt(np.diag(cov)), True


def central_gradient(func, x, rel_step=6e-6):
    x = np.asarray(x, dtype=float)
    h = rel_step * np.maximum(1.0, np.abs(x))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (func(x + e) - func(x - e)) / (2 * h[i])
    return g


# --- fitting ------------------------------------------------------------

@dataclass
class FitOptions:
    """Optimizer settings.

    Each restart runs a Nelder-Mead simplex search and then cycles of BFGS
    with central-difference gradients until one cycle improves the
    objective by less than ``ftol`` and moves less than ``xtol``.
    """

    n_restarts: int = 8
    seed: int = 0
    ftol: float = 1e-8
    xtol: float = 1e-6
    max_nm_evals: int | None = None
    max_cycles: int = 4
    gtol: float = 1e-5
    perturb_scale: float = 0.5
    n_jobs: int = 1
    sample_start: object = None
    compute_std_errors: bool = True


@dataclass
class RestartOutcome:
    nll: float
    u: np.ndarray
    converged: bool
    trace: list
    n_evals: int
    start: np.ndarray


@dataclass(eq=False)
class FitResult:
    """Outcome of :func:`fit`."""

    params: ParamSet
    spec: ModelSpec
    std_errors: dict
    hessian_ok: bool
    llf: float
    bic: float
    n_obs: int
    path: VolatilityPath
    converged: bool
    n_restarts_used: int
    objective_trace: list = field(default_factory=list)
    restart_nlls: list = field(default_factory=list)
    sample_start: object = None

    @property
    def n_params(self):
        return self.spec.n_params

    def parameter_table(self):
        rows = []
        est = self.params.as_dict(self.spec)
        for name in self.spec.param_names:
            value = est[name]
            se = self.std_errors.get(name, math.nan)
            if math.isfinite(se) and se > 0:
                z = value / se
                p = 2 * norm.sf(abs(z))
            else:
                z = p = math.nan
            rows.append({
                "name": name,
                "estimate": value,
                "std_error": _json_float(se),
                "z": _json_float(z),
                "p_value": _json_float(p),
                "stars": significance_stars(p),
                "fixed": False,
            })
        if not self.spec.fit_omega1:
            rows.insert(len(rows) - 1, {
                "name": "omega1", "estimate": self.params.omega1, "std_error": None,
                "z": None, "p_value": None, "stars": "", "fixed": True,
            })
        return rows

    def to_dict(self):
        return {
            "bic": self.bic,
            "converged": self.converged,
            "hessian_ok": self.hessian_ok,
            "llf": self.llf,
            "n_obs": self.n_obs,
            "n_params": self.n_params,
            "n_restarts_used": self.n_restarts_used,
            "parameters": self.parameter_table(),
            "restart_nlls": [_json_float(v) for v in self.restart_nlls],
            "sample_start": None if self.sample_start is None else str(self.sample_start),
            "spec": self.spec.to_dict(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _json_float(v):
    return None if v is None or not math.isfinite(v) else float(v)


def significance_stars(p):
    """``***``/``**``/``*`` for two-sided p-values below 1%/5%/10%."""
    if p is None or not math.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def local_variance(r, window=22):
    """Centered moving average of squared returns, floored away from zero.

    A nonparametric variance proxy used only to weight starting values and
    to set coordinate scales; it makes both insensitive to strong trends
    in volatility.
    """
    v = uniform_filter1d(np.asarray(r, dtype=float) ** 2, size=2 * window + 1, mode="nearest")
    pos = v[v > 0]
    floor = pos.min() if pos.size else 1.0
    return np.maximum(v, floor)


def starting_values(objective):
    """Deterministic starting point.

    ``mu`` is the precision-weighted sample mean (weights from
    :func:`local_variance`; the plain mean under homoskedasticity),
    ``alpha = 0.05``, ``beta = 0.90``, ``omega2 = 5``. Intercept and slopes
    come from a relative-error least-squares regression of monthly mean
    squared returns on equal-weighted lag averages of each factor.
    """
    spec, panel = objective.spec, objective.panel
    r = objective.r[objective.mask]
    w = 1.0 / local_variance(r, spec.window)
    mu = float(np.sum(w * r) / np.sum(w))
    level = float(1.0 / np.mean(w))
    coef = None
    months = panel.return_months
    n_t = panel.trading_days[months]
    y = np.bincount(panel.month_of_day, weights=(panel.returns.values - mu) ** 2,
                    minlength=panel.months.size)[months] / n_t
    cols = []
    for f in spec.factors:
        vals = monthly_factor_values(panel, spec, f)
        cols.append(np.mean(lag_matrix(vals, spec.K, 1), axis=1)[months])
    X = np.column_stack([np.ones(months.size)] + cols)
    ok = np.all(np.isfinite(X), axis=1) & (y > 0)
    if ok.sum() > X.shape[1] + 1:
        if spec.link == "exp":
            coef, *_ = np.linalg.lstsq(X[ok], np.log(y[ok]), rcond=None)
        else:
            coef, *_ = np.linalg.lstsq(X[ok] / y[ok, None], np.ones(ok.sum()), rcond=None)
    nt = len(spec.factors)
    m0 = math.log(level) if spec.link == "exp" else level
    if coef is not None and np.all(np.isfinite(coef)):
        cand = ParamSet(mu, 0.05, 0.90, tuple(coef[1:]), 5.0, float(coef[0]))
        if objective(cand) < PENALTY:
            return cand
    return ParamSet(mu, 0.05, 0.90, (0.0,) * nt, 5.0, m0)


def coordinate_scales(objective):
    """Typical magnitudes of ``mu``, ``m`` and each ``theta``.

    Variances are harmonic means of :func:`local_variance`, matching the
    ``1 / sigma2`` weighting of the likelihood; slope scales are median
    ratios of that variance proxy to the first-lag factor value.
    """
    v = local_variance(objective.r, objective.spec.window)
    level = float(1.0 / np.mean(1.0 / v[objective.mask]))
    theta_scales = []
    for L in objective.lags:
        x = np.abs(L[objective.unit_idx, 0])
        ok = (x > 0) & np.isfinite(x)
        if objective.spec.link == "exp":
            s = 1.0 / float(np.median(x[ok])) if ok.any() else 1.0
        else:
            s = float(np.median(v[ok] / x[ok])) if ok.any() else level
        theta_scales.append(s if s > 0 and math.isfinite(s) else 1.0)
    return math.sqrt(level), level, theta_scales


# omega2 - 1 values visited by the decay scan; the profile likelihood in
# omega2 is often multimodal and flat near the boundary
DECAY_GRID = np.array([1e-9, 0.25, 0.5, 1, 2, 3, 5, 8, 13, 20, 35, 60, 100, 200, 400, 800])


def _polish(counted, u0, opts, cb):
    dim = u0.size
    maxfev = opts.max_nm_evals or 600 * dim
    res = minimize(counted, u0, method="Nelder-Mead", callback=cb,
                   options={"xatol": opts.xtol, "fatol": opts.ftol, "maxfev": maxfev, "adaptive": dim > 4})
    u, fu = res.x, float(res.fun)
    for _ in range(opts.max_cycles):
        q = minimize(counted, u, method="BFGS", jac=lambda z: central_gradient(counted, z),
                     callback=cb, options={"gtol": opts.gtol, "maxiter": 200 * dim})
        step = float(np.max(np.abs(q.x - u)))
        gain = fu - float(q.fun)
        if q.fun <= fu:
            u, fu = q.x, float(q.fun)
        if gain < opts.ftol and step < opts.xtol:
            return u, fu, True
    return u, fu, False


def _local_search(f, u0, opts, decay_index=None):
    """Simplex then BFGS cycles; optionally re-entered from the best point
    of a one-dimensional scan over the decay coordinate."""
    trace = []
    n_evals = 0

    def counted(u):
        nonlocal n_evals
        n_evals += 1
        return f(u)

    def cb(intermediate_result):
        trace.append(float(intermediate_result.fun))

    u, fu, converged = _polish(counted, u0, opts, cb)
    if decay_index is not None:
        for _ in range(3):
            cands = []
            for g in DECAY_GRID:
                z = u.copy()
                z[decay_index] = _softplus_inv(g)
                cands.append((counted(z), z))
            fz, z = min(cands, key=lambda c: c[0])
            if not fz < fu - 10 * opts.ftol:
                break
            u, fu, converged = _polish(counted, z, opts, cb)
    return RestartOutcome(fu, u, converged, trace, n_evals, u0)


def _restart_points(f, u_base, opts):
    rng = np.random.default_rng(opts.seed)
    points = [u_base]
    while len(points) < max(1, opts.n_restarts):
        for attempt in range(50):
            scale = opts.perturb_scale * (0.8 ** (attempt // 10))
            cand = u_base + rng.normal(0.0, scale, size=u_base.size)
            if f(cand) < PENALTY:
                break
        else:
            cand = u_base.copy()
        points.append(cand)
    return points


def fit(panel, spec, options=None, **kwargs):
    """Multi-start QML fit of ``spec`` on ``panel``.

    Parameters
    ----------
    panel : AlignedPanel
    spec : ModelSpec
    options : FitOptions, optional
        Keyword arguments override individual option fields.

    Returns
    -------
    FitResult
        ``converged`` is False when no restart met the tolerance test; the
        best point found is still reported.
    """
    options = replace(options or FitOptions(), **kwargs)
    check_panel(panel)
    objective = Objective(panel, spec, options.sample_start)
    r = objective.r[objective.mask]
    if not np.ptp(r) > 0:
        raise DegenerateInputError("returns are constant over the likelihood span")
    reparam = Reparam(spec, *coordinate_scales(objective))

    def f(u):
        try:
            params = reparam.to_params(u)
        except (InfeasibleParametersError, ValueError, OverflowError):
            return PENALTY
        return objective(params)

    start = starting_values(objective)
    u_base = reparam.to_unconstrained(start)
    points = _restart_points(f, u_base, options)
    decay = 3 + len(spec.factors)
    if options.n_jobs and options.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=options.n_jobs) as pool:
            outcomes = list(pool.map(lambda u: _local_search(f, u, options, decay), points))
    else:
        outcomes = [_local_search(f, u, options, decay) for u in points]

    best = min(outcomes, key=lambda o: o.nll)
    if best.nll >= PENALTY:
        raise DataError("no feasible parameters found")
    params = reparam.to_params(best.u)
    converged = best.converged
    if not converged:
        logger.warning("fit did not meet the convergence tolerance in %d restarts", len(outcomes))
    nll = objective(params)
    llf = -nll
    result = FitResult(
        params=params,
        spec=spec,
        std_errors={name: math.nan for name in spec.param_names},
        hessian_ok=False,
        llf=llf,
        bic=information_criteria(llf, spec.n_params, objective.n_obs),
        n_obs=objective.n_obs,
        path=compute_path(params, panel, spec, objective.design, options.sample_start),
        converged=converged,
        n_restarts_used=len(outcomes),
        objective_trace=best.trace,
        restart_nlls=[o.nll for o in outcomes],
        sample_start=options.sample_start,
    )
    if options.compute_std_errors:
        se, ok = _std_errors(objective, params)
        result.std_errors = dict(zip(spec.param_names, se.tolist()))
        result.hessian_ok = ok
        if not ok:
            logger.warning("Hessian not positive definite; standard errors not available")
    return result


def _std_errors(objective, params):
    spec = objective.spec
    x = params.to_vector(spec)
    return hessian_std_errors(lambda z: objective(ParamSet.from_vector(z, spec)) if _feasible(z, spec) else PENALTY,
                              x, penalty=PENALTY)


def _feasible(z, spec):
    try:
        ParamSet.from_vector(z, spec)
    except (InfeasibleParametersError, ValueError):
        return False
    return True


def standard_errors(result, panel, spec=None):
    """Per-parameter standard errors from the inverse numerical Hessian.

    Returns a dict keyed by parameter name; all entries are NaN when the
    Hessian is not positive definite.
    """
    spec = spec or result.spec
    objective = Objective(panel, spec, result.sample_start)
    se, _ = _std_errors(objective, result.params)
    return dict(zip(spec.param_names, se.tolist()))


# --- scikit-learn style front end ---------------------------------------

class GarchMidas(BaseEstimator):
    """GARCH-MIDAS volatility model with an estimator-style interface.

    ``fit`` takes an :class:`~midasvol.data.AlignedPanel` as ``X``;
    ``transform`` returns the filtered conditional variance path and
    ``predict`` the one-step-ahead variance forecasts on the panel's days.

    Parameters mirror :class:`~midasvol.model.ModelSpec` and
    :class:`FitOptions`.
    """

    def __init__(self, factors=("rv",), mode="rolling", K=36, stride=22, window=22,
                 link="linear", macro_transform=None, fit_omega1=False,
                 n_restarts=8, random_state=0, n_jobs=1, sample_start=None):
        self.factors = factors
        self.mode = mode
        self.K = K
        self.stride = stride
        self.window = window
        self.link = link
        self.macro_transform = macro_transform
        self.fit_omega1 = fit_omega1
        self.n_restarts = n_restarts
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.sample_start = sample_start

    def _spec(self):
        return ModelSpec(factors=tuple(self.factors), mode=self.mode, K=self.K, stride=self.stride,
                         window=self.window, link=self.link, macro_transform=self.macro_transform,
                         fit_omega1=self.fit_omega1)

    def fit(self, X, y=None):
        panel = check_panel(X)
        self.spec_ = self._spec()
        opts = FitOptions(n_restarts=self.n_restarts, seed=self.random_state or 0,
                          n_jobs=self.n_jobs or 1, sample_start=self.sample_start)
        self.result_ = fit(panel, self.spec_, opts)
        self.params_ = self.result_.params
        self.llf_ = self.result_.llf
        self.bic_ = self.result_.bic
        return self

    def _check_fitted(self):
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "result_")

    def transform(self, X):
        """Filtered :class:`~midasvol.model.VolatilityPath` on ``X``."""
        self._check_fitted()
        return compute_path(self.params_, check_panel(X), self.spec_)

    def predict(self, X):
        """One-step-ahead conditional variances ``E_{s}(sigma2_{s+1})``."""
        return self.transform(X).sigma2

    def score(self, X, y=None):
        """Average log-likelihood per observation."""
        self._check_fitted()
        obj = Objective(check_panel(X), self.spec_, self.sample_start)
        return -obj(self.params_) / obj.n_obs
