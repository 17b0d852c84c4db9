"""GARCH-MIDAS mixed-frequency volatility modelling.

Daily returns are joined with monthly macro factors, the conditional
variance is split into a short-run GARCH component and a long-run MIDAS
component, and models are estimated by Gaussian QMLE and compared out of
sample.
"""
from .data import (
    AlignedPanel,
    DailySeries,
    DataError,
    InsufficientHistoryError,
    MonthlySeries,
    align,
    log_changes,
    log_returns,
    parse_daily_prices,
    parse_daily_returns,
    parse_monthly_index,
    read_daily_csv,
    read_monthly_csv,
)
from .estimator import (
    DegenerateInputError,
    FitOptions,
    FitResult,
    GarchMidas,
    fit,
    information_criteria,
    negative_log_likelihood,
    standard_errors,
)
from .evaluation import (
    DMOutcome,
    EvalReport,
    all_losses,
    dm_matrix,
    dm_matrix_csv,
    dm_test,
    loss,
    one_step_forecasts,
    rolling_forecast,
)
from .kernels import WeightProfile, beta_weights, macro_rolling, realized_vol_fixed, realized_vol_rolling
from .model import (
    InfeasibleParametersError,
    ModelSpec,
    ParamSet,
    VolatilityPath,
    compute_path,
    filter_short_run,
    long_run_fixed,
    long_run_rolling,
    simulate,
    total_variance,
)
from .stats import ADFResult, SummaryStats, adf_test, describe, summary

__version__ = "0.1.0"

__all__ = [
    "ADFResult",
    "AlignedPanel",
    "DMOutcome",
    "DailySeries",
    "DataError",
    "DegenerateInputError",
    "EvalReport",
    "FitOptions",
    "FitResult",
    "GarchMidas",
    "InfeasibleParametersError",
    "InsufficientHistoryError",
    "ModelSpec",
    "MonthlySeries",
    "ParamSet",
    "SummaryStats",
    "VolatilityPath",
    "WeightProfile",
    "adf_test",
    "align",
    "all_losses",
    "beta_weights",
    "compute_path",
    "describe",
    "dm_matrix",
    "dm_matrix_csv",
    "dm_test",
    "filter_short_run",
    "fit",
    "information_criteria",
    "log_changes",
    "log_returns",
    "long_run_fixed",
    "long_run_rolling",
    "loss",
    "macro_rolling",
    "negative_log_likelihood",
    "one_step_forecasts",
    "parse_daily_prices",
    "parse_daily_returns",
    "parse_monthly_index",
    "read_daily_csv",
    "read_monthly_csv",
    "realized_vol_fixed",
    "realized_vol_rolling",
    "rolling_forecast",
    "simulate",
    "standard_errors",
    "summary",
    "total_variance",
]
