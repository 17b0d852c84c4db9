import numpy as np
import pytest

from midasvol.data import DailySeries, MonthlySeries, align
from midasvol.model import ModelSpec, ParamSet, simulate


def uniform_dates(start, months, days_per_month):
    """``days_per_month`` consecutive calendar days at the start of each month."""
    m0 = np.datetime64(start, "M")
    axis = np.arange(m0, m0 + months, dtype="datetime64[M]")
    return (axis.astype("datetime64[D]")[:, None] + np.arange(days_per_month)).ravel()


def plain_garch_filter(resid, omega, alpha, beta, sigma2_0):
    """Reference GARCH(1,1): sigma2_i = omega + alpha * e_{i-1}**2 + beta * sigma2_{i-1}."""
    out = np.empty(resid.size)
    s = sigma2_0
    for i in range(resid.size):
        if i > 0:
            s = omega + alpha * resid[i - 1] ** 2 + beta * s
        out[i] = s
    return out


def naive_nll(resid, sigma2):
    total = 0.0
    for e, s in zip(resid, sigma2):
        total += 0.5 * (np.log(2 * np.pi) + np.log(s) + e * e / s)
    return total


@pytest.fixture(scope="session")
def model_ii_panel():
    spec = ModelSpec.from_model_id("II")
    params = ParamSet(3e-4, 0.06, 0.92, (0.015,), 5.0, 1e-4)
    panel, path = simulate(params, spec, months=120, days_per_month=22, seed=3)
    return panel, path, spec, params


@pytest.fixture(scope="session")
def model_x_panel():
    spec = ModelSpec.from_model_id("X")
    params = ParamSet(3e-4, 0.06, 0.92, (0.015, 2e-5), 5.0, 1e-4)
    panel, path = simulate(params, spec, months=91, days_per_month=22, seed=11)
    return panel, path, spec, params


@pytest.fixture
def small_panel():
    dates = uniform_dates("2001-01", 6, 20)
    rng = np.random.default_rng(0)
    r = DailySeries(dates, rng.normal(0, 0.01, dates.size))
    gepu = MonthlySeries(np.arange(np.datetime64("2000-01"), np.datetime64("2001-07")), np.linspace(100, 150, 18))
    return align(r, {"gepu": gepu})
