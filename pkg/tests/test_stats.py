import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midasvol.stats import adf_critical_values, adf_test, describe, summary, summary_table_csv

adfuller = pytest.importorskip("statsmodels.tsa.stattools").adfuller


class TestSummary:
    def test_two_point(self):
        s = summary([-1.0, 1.0] * 50)
        assert s.n == 100 and s.mean == 0.0
        assert s.skewness == 0.0
        assert s.kurtosis == pytest.approx(1.0, abs=1e-15)
        assert s.min == -1.0 and s.max == 1.0
        assert s.std_dev == pytest.approx(math.sqrt(100 / 99), rel=1e-15)

    def test_normal_kurtosis(self):
        s = summary(np.random.default_rng(0).standard_normal(100_000))
        assert abs(s.kurtosis - 3) < 0.1
        assert abs(s.skewness) < 0.05

    def test_hand_skew(self):
        x = np.array([0.0, 0.0, 3.0])
        d = x - 1
        assert summary(x).skewness == pytest.approx(np.mean(d ** 3) / np.mean(d ** 2) ** 1.5, rel=1e-14)

    def test_constant(self):
        s = summary([2.0, 2.0, 2.0])
        assert s.std_dev == 0.0
        assert math.isnan(s.skewness) and math.isnan(s.kurtosis)
        assert s.to_dict()["kurtosis"] is None

    @pytest.mark.parametrize("bad", [[1.0], [], [1.0, np.nan], [[1.0, 2.0]]])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            summary(bad)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=50), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        a, b = summary(xs), summary(ys)
        for f in ("mean", "min", "max", "std_dev"):
            assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-12, abs=1e-9)
        if a.std_dev > 1e-6 * max(1.0, abs(a.mean)):
            assert a.kurtosis == pytest.approx(b.kurtosis, rel=1e-8)
            assert a.skewness == pytest.approx(b.skewness, rel=1e-6, abs=1e-8)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=50), st.floats(-5, 5), st.floats(0.1, 10))
    def test_affine_equivariant(self, xs, a, b):
        s = summary(xs)
        if not s.std_dev > 1e-3:
            return
        t = summary(a + b * np.asarray(xs))
        assert t.mean == pytest.approx(a + b * s.mean, rel=1e-9, abs=1e-9)
        assert t.std_dev == pytest.approx(b * s.std_dev, rel=1e-9)
        assert t.skewness == pytest.approx(s.skewness, rel=1e-6, abs=1e-9)
        assert t.kurtosis == pytest.approx(s.kurtosis, rel=1e-6)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
    def test_bounds(self, xs):
        s = summary(xs)
        assert s.min <= s.mean + 1e-9 * max(1.0, abs(s.mean)) and s.mean <= s.max + 1e-9 * max(1.0, abs(s.mean))
        assert s.std_dev >= 0
        if math.isfinite(s.kurtosis):
            assert s.kurtosis >= 1 - 1e-9

    def test_negative_scale_flips_skew(self):
        x = np.random.default_rng(1).exponential(size=500)
        assert summary(-x).skewness == pytest.approx(-summary(x).skewness, rel=1e-12)


class TestADF:
    @pytest.mark.parametrize("regression", ["n", "c", "ct"])
    @pytest.mark.parametrize("seed", range(4))
    def test_matches_statsmodels(self, regression, seed):
        rng = np.random.default_rng(seed)
        y = np.cumsum(rng.normal(size=400)) if seed % 2 else rng.normal(size=400)
        if seed == 3:
            y = np.zeros(400)
            for t in range(1, 400):
                y[t] = 0.7 * y[t - 1] + 0.2 * (y[t - 1] - y[t - 2] if t > 1 else 0) + rng.normal()
        ours = adf_test(y, regression)
        stat, _, lag, nobs, crit, _ = adfuller(y, regression=regression, autolag="BIC")
        assert ours.statistic == pytest.approx(stat, rel=1e-9)
        assert ours.lag == lag and ours.nobs == nobs
        for k, v in crit.items():
            assert ours.critical_values[k] == pytest.approx(v, abs=1e-3)

    def test_fixed_max_lag(self):
        y = np.cumsum(np.random.default_rng(9).normal(size=300))
        ours = adf_test(y, max_lag=4)
        stat, _, lag, *_ = adfuller(y, maxlag=4, autolag="BIC")
        assert ours.lag == lag <= 4
        assert ours.statistic == pytest.approx(stat, rel=1e-9)

    def test_critical_values_large_sample(self):
        c = adf_critical_values(10 ** 9)
        assert c["1%"] == pytest.approx(-3.43035, abs=1e-6)
        assert c["5%"] < c["10%"] and c["1%"] < c["5%"]

    def test_power_on_white_noise(self):
        hits = sum(adf_test(np.random.default_rng(s).normal(size=1000)).reject_level == "1%" for s in range(100))
        assert hits >= 95

    def test_size_on_random_walk(self):
        hits = sum(adf_test(np.cumsum(np.random.default_rng(s).normal(size=1000))).reject_level in ("1%", "5%")
                   for s in range(100))
        assert hits <= 10

    def test_too_short(self):
        with pytest.raises(ValueError, match="at least"):
            adf_test(np.arange(10.0))

    def test_bad_regression(self):
        with pytest.raises(ValueError):
            adf_test(np.random.default_rng(0).normal(size=100), regression="t")

    def test_stars(self):
        r = adf_test(np.random.default_rng(0).normal(size=500))
        assert r.reject_level == "1%" and r.stars == "***"


def test_describe_and_csv():
    x = np.random.default_rng(3).normal(0, 0.02, 800)
    s = describe(x)
    assert s.adf_reject_level == "1%" and s.adf_stat < -10
    assert s.mean == summary(x).mean
    lines = summary_table_csv([("brent", "daily", s), ("flat", "daily", summary([1.0, 2.0, 3.0]))]).splitlines()
    assert lines[0] == "variable,obs,freq,mean,min,max,std,skew,kurt,ADF"
    cells = lines[1].split(",")
    assert cells[:3] == ["brent", "800", "daily"] and cells[-1].endswith("***")
    assert lines[2].split(",")[-1] == ""
