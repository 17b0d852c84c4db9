"""Input validation helpers shared by the estimators and the evaluator."""
import numpy as np

from .data import AlignedPanel, DataError


def check_panel(X):
    """Return ``X`` if it is a usable :class:`AlignedPanel`, else raise."""
    if not isinstance(X, AlignedPanel):
        raise TypeError(f"expected an AlignedPanel, got {type(X).__name__}")
    if X.n_days == 0:
        raise DataError("panel has no return days")
    if not np.any(X.retained):
        raise DataError("panel has no month with enough trading days")
    return X


def check_panel_for_spec(panel, spec):
    """Every macro factor named by ``spec`` must be present in ``panel``."""
    check_panel(panel)
    missing = [f for f in spec.macro_factors if f not in panel.monthly_factors]
    if missing:
        raise DataError(f"panel lacks factor(s) {missing}; have {sorted(panel.monthly_factors)}")
    return panel


def check_same_dates(a, b, what="series"):
    if len(a) != len(b):
        raise ValueError(f"{what}: length mismatch ({len(a)} vs {len(b)})")
    if hasattr(a, "dates") and hasattr(b, "dates") and not np.array_equal(a.dates, b.dates):
        raise ValueError(f"{what}: dates differ")
