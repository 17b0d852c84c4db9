import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midasvol.data import DailySeries, DataError, MonthlySeries, align
from midasvol.kernels import (
    beta_weights,
    lag_matrix,
    macro_rolling,
    realized_vol_fixed,
    realized_vol_rolling,
)

from conftest import uniform_dates


def naive_beta(omega1, omega2, K):
    num = [k ** (omega1 - 1) * (K - k) ** (omega2 - 1) for k in range(1, K + 1)]
    s = sum(num)
    return [v / s for v in num]


class TestBetaWeights:
    def test_flat(self):
        np.testing.assert_array_equal(beta_weights(1, 1, 4).weights, [0.25] * 4)

    def test_hand_value(self):
        np.testing.assert_allclose(beta_weights(1, 2, 3).weights, [2 / 3, 1 / 3, 0], atol=1e-15)

    def test_calibrated_shape(self):
        w = beta_weights(1, 5.478, 36).weights
        assert np.all(np.diff(w[:35]) < 0)
        assert abs(w.sum() - 1) < 1e-12
        assert w[-1] == 0.0

    def test_matches_direct_formula(self):
        for args in [(1, 3, 12), (2.5, 4, 20), (1.2, 1, 7)]:
            np.testing.assert_allclose(beta_weights(*args).weights, naive_beta(*args), rtol=1e-12, atol=1e-300)

    def test_single_lag(self):
        np.testing.assert_array_equal(beta_weights(1, 5, 1).weights, [1.0])

    def test_large_omega_no_overflow(self):
        w = beta_weights(1, 900, 60).weights
        assert np.all(np.isfinite(w)) and abs(w.sum() - 1) < 1e-12

    @pytest.mark.parametrize("args", [(1, 1, 0), (0.5, 2, 5), (1, 0.9, 5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            beta_weights(*args)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1, 30), st.floats(1, 300), st.integers(1, 120))
    def test_normalized_nonnegative(self, w1, w2, K):
        w = beta_weights(w1, w2, K).weights
        assert abs(w.sum() - 1) < 1e-12
        assert np.all(w >= 0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1, 200), st.integers(2, 120))
    def test_nonincreasing_for_unit_omega1(self, w2, K):
        w = beta_weights(1, w2, K).weights
        assert np.all(np.diff(w) <= 1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1, 50), st.floats(0.01, 10), st.integers(3, 60))
    def test_front_loading_increases_with_omega2(self, w2, dw, K):
        a = beta_weights(1, w2, K).weights
        b = beta_weights(1, w2 + dw, K).weights
        assert b[K - 2] / b[0] < a[K - 2] / a[0]


def test_lag_matrix():
    L = lag_matrix(np.arange(6.0), 2, stride=2)
    assert np.isnan(L[:2, 0]).all() and np.isnan(L[:4, 1]).all()
    np.testing.assert_array_equal(L[4], [2.0, 0.0])
    np.testing.assert_array_equal(L[5], [3.0, 1.0])


def one_month_panel(values, start="2001-03"):
    d = uniform_dates(start, 1, len(values))
    return align(DailySeries(d, values), min_days=1)


class TestRealizedVol:
    def test_fixed_hand_value(self):
        rv = realized_vol_fixed(one_month_panel([0.01, -0.02, 0.03]))
        assert rv.values[0] == pytest.approx(0.0014, abs=1e-18)
        assert rv.months[0] == np.datetime64("2001-03")

    def test_fixed_zero_and_identical(self):
        d = uniform_dates("2001-01", 2, 16)
        r = np.tile(np.linspace(-0.02, 0.02, 16), 2)
        rv = realized_vol_fixed(align(DailySeries(d, r)))
        assert rv.values[0] == rv.values[1]
        assert realized_vol_fixed(one_month_panel(np.zeros(16))).values[0] == 0.0

    def test_rolling_constant(self):
        d = uniform_dates("2001-01", 3, 25)
        rv = realized_vol_rolling(DailySeries(d, np.full(d.size, 0.02)))
        np.testing.assert_allclose(rv.values, 22 * 0.02 ** 2, rtol=1e-14)
        assert rv.dates[0] == d[22]

    def test_rolling_zero(self):
        d = uniform_dates("2001-01", 2, 25)
        assert np.all(realized_vol_rolling(DailySeries(d, np.zeros(d.size))).values == 0)

    def test_rolling_hand_value(self):
        d = uniform_dates("2001-01", 1, 3)
        rv = realized_vol_rolling(DailySeries(d, [0.01, 0.02, 0.03]), window=2)
        assert rv.values[-1] == pytest.approx(0.0005, abs=1e-18)
        assert len(rv) == 1

    def test_rolling_too_short(self):
        d = uniform_dates("2001-01", 1, 22)
        with pytest.raises(DataError):
            realized_vol_rolling(DailySeries(d, np.zeros(22)))

    def test_rolling_equals_fixed_on_uniform_calendar(self):
        d = uniform_dates("2001-01", 6, 22)
        r = np.random.default_rng(1).normal(0, 0.01, d.size)
        panel = align(DailySeries(d, r))
        fixed = realized_vol_fixed(panel)
        rolling = realized_vol_rolling(panel.returns, 22)
        # the rolling value on the first day of month t+1 covers exactly month t
        for t in range(5):
            first_next = d[22 * (t + 1)]
            j = np.searchsorted(rolling.dates, first_next)
            assert rolling.values[j] == pytest.approx(fixed.values[t], rel=1e-13)

    def test_time_shift_equivariance(self):
        d = uniform_dates("2001-01", 3, 22)
        r = np.random.default_rng(2).normal(0, 0.01, d.size)
        a = realized_vol_rolling(DailySeries(d, r))
        b = realized_vol_rolling(DailySeries(d + 4000, r))
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.dates + 4000, b.dates)


class TestMacroRolling:
    def panel(self, levels, dpm=22):
        n = len(levels)
        d = uniform_dates("2001-01", n, dpm)
        m0 = np.datetime64("2001-01", "M")
        f = MonthlySeries(np.arange(m0, m0 + n), levels)
        return align(DailySeries(d, np.zeros(d.size)), {"gepu": f})

    def test_constant(self):
        out = macro_rolling(self.panel([7.5, 7.5, 7.5]), "gepu")
        np.testing.assert_allclose(out.values, 7.5, rtol=1e-15)

    def test_step_ramps_linearly(self):
        out = macro_rolling(self.panel([100.0, 200.0, 200.0]), "gepu", window=22)
        # day 22 (first of month 2) averages 22 days of 100; each later day swaps one 100 for a 200
        np.testing.assert_allclose(out.values[:23], 100 + 100 * np.arange(23) / 22, rtol=1e-13)
        np.testing.assert_allclose(out.values[22:], 200.0, rtol=1e-14)

    def test_zero(self):
        assert np.all(macro_rolling(self.panel([0.0, 0.0]), "gepu").values == 0)

    def test_missing_factor(self):
        with pytest.raises(KeyError):
            macro_rolling(self.panel([1.0, 1.0]), "other")

    def test_insufficient_history(self):
        with pytest.raises(DataError):
            macro_rolling(self.panel([1.0], dpm=20), "gepu")
