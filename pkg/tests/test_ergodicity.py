import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaycluster._common import DomainError, stream
from delaycluster.ergodicity import (
    CovarianceCurve,
    UnresolvedTailWarning,
    clt_check,
    estimate_covariance,
    fit_exponential,
    green_kubo_variance,
    observable,
)
from delaycluster.ou import OUParams, SamplePath, stationary_cov
from delaycluster.sim import DriftSpec, SimConfig, simulate_reference

ident = observable("identity")
NULL = DriftSpec("zero", 1.0, 0.0)


def _exact_curve(theta1, theta2, max_lag=10.0, n=1001):
    lags = np.linspace(0, max_lag, n)
    return CovarianceCurve(lags, theta1 * np.exp(-theta2 * lags), np.zeros(n))


@pytest.fixture(scope="module")
def ou_path():
    p = OUParams(1.0, math.sqrt(2.0))
    return simulate_reference(p, SimConfig(dt=0.01, horizon=1e4, seed=77))


@pytest.fixture(scope="module")
def ou_curve(ou_path):
    return estimate_covariance(ou_path, ident, ident, 5.0)


class TestCurveType:
    def test_rejects_bad_lags(self):
        with pytest.raises(DomainError):
            CovarianceCurve([0.1, 0.2], [1, 1], [0, 0])
        with pytest.raises(DomainError):
            CovarianceCurve([0.0, 0.0], [1, 1], [0, 0])
        with pytest.raises(DomainError):
            CovarianceCurve([0.0, 1.0], [1, 1, 1], [0, 0])

    def test_csv(self, tmp_path):
        c = _exact_curve(1.0, 1.0, n=5)
        c.to_csv(tmp_path / "c.csv")
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0] == "lag,cov,se" and len(lines) == 6
        assert float(lines[2].split(",")[1]) == c.cov[1]


class TestEstimator:
    def test_white_noise(self):
        x = stream(3).standard_normal(200_000)
        c = estimate_covariance(SamplePath(0.0, 1.0, x), ident, ident, 20.0)
        assert c.cov[0] == pytest.approx(1.0, abs=4 * c.se[0])
        assert np.all(np.abs(c.cov[1:]) <= 4 * c.se[1:])

    def test_ou_decay(self, ou_curve):
        exact = np.array([stationary_cov(s, OUParams(1.0, math.sqrt(2.0))) for s in ou_curve.lags])
        assert np.all(np.abs(ou_curve.cov - exact) <= 4 * ou_curve.se)

    def test_lag_zero_is_the_variance(self):
        x = stream(4).standard_normal(5000).cumsum() * 0.01
        c = estimate_covariance(SamplePath(0.0, 0.1, x), ident, ident, 2.0)
        n_used = (x.size - 20) // 20 * 20
        assert c.cov[0] == pytest.approx(np.mean((x[:n_used] - x.mean()) ** 2), rel=1e-12)

    def test_symmetric_in_f_and_g(self, ou_path):
        sq = observable("square")
        fg = estimate_covariance(ou_path, ident, sq, 3.0)
        gf = estimate_covariance(ou_path, sq, ident, 3.0)
        assert np.all(np.abs(fg.cov - gf.cov) <= 4 * np.hypot(fg.se, gf.se))

    def test_several_paths(self):
        p = OUParams(1.0, math.sqrt(2.0))
        paths = [simulate_reference(p, SimConfig(dt=0.05, horizon=500.0), replica=r) for r in range(8)]
        c = estimate_covariance(paths, ident, ident, 4.0)
        assert np.all(np.abs(c.cov - np.exp(-c.lags)) <= 4 * c.se)

    def test_too_short(self):
        with pytest.raises(DomainError):
            estimate_covariance(SamplePath(0.0, 0.1, np.zeros(100)), ident, ident, 1.0)

    def test_mixed_grids_rejected(self):
        a = SamplePath(0.0, 0.1, np.zeros(10))
        b = SamplePath(0.0, 0.2, np.zeros(10))
        with pytest.raises(DomainError):
            estimate_covariance([a, b], ident, ident, 0.1)


class TestFit:
    def test_planted_exponential(self):
        fit = fit_exponential(_exact_curve(2.0, 3.0, max_lag=2.0))
        assert fit.theta1 == pytest.approx(2.0, rel=1e-12)
        assert fit.theta2 == pytest.approx(3.0, rel=1e-12)
        assert fit.r2 == 1.0
        assert fit.available and not fit.low_decay

    @given(st.floats(0.01, 100), st.floats(0.05, 5))
    def test_recovers_any_planted_pair(self, t1, t2):
        fit = fit_exponential(_exact_curve(t1, t2, max_lag=10.0 / t2, n=200))
        assert fit.theta1 == pytest.approx(t1, rel=1e-9)
        assert fit.theta2 == pytest.approx(t2, rel=1e-9)

    def test_ou_rate(self, ou_curve):
        assert 0.9 <= ou_curve.theta2 <= 1.1
        assert ou_curve.r2 > 0.95

    def test_flat_curve(self):
        lags = np.linspace(0, 1, 50)
        fit = fit_exponential(CovarianceCurve(lags, np.full(50, 0.7), np.zeros(50)))
        assert abs(fit.theta2) < 1e-12
        assert fit.low_decay

    def test_too_few_lags(self):
        c = CovarianceCurve([0, 1, 2, 3, 4], [1.0, 0.01, 0.0, 0.0, 0.0], [0.1] * 5)
        fit = fit_exponential(c)
        assert not fit.available and math.isnan(fit.theta2)

    def test_fits_only_the_significant_run(self):
        lags = np.arange(10.0)
        cov = np.exp(-lags)
        se = np.full(10, 0.01)
        cov[6:] = [0.5, -0.5, 0.5, -0.5]  # noise after the true curve has entered the band
        fit = fit_exponential(CovarianceCurve(lags, cov, se))
        # exp(-4) is already inside the 3 se band
        assert fit.n_lags == 4
        assert fit.theta2 == pytest.approx(1.0, rel=1e-9)


class TestGreenKubo:
    def test_exponential(self):
        c = _exact_curve(1.0, 1.0, max_lag=10.0, n=20001)
        # a noiseless curve never enters a zero-width noise band
        with pytest.warns(UnresolvedTailWarning):
            gk = green_kubo_variance(c)
        assert gk.value == pytest.approx(2.0, rel=1e-6)
        assert gk.tail == pytest.approx(math.exp(-10), rel=1e-6)

    def test_zero_curve(self):
        c = CovarianceCurve(np.linspace(0, 1, 11), np.zeros(11), np.zeros(11))
        assert green_kubo_variance(c).value == 0.0

    @given(st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3))
    def test_linear_in_scaling(self, scale):
        lags = np.linspace(0, 5, 101)
        cov = np.exp(-lags) * (1 + 0.1 * np.cos(7 * lags))
        se = np.full(101, 0.02)
        base = green_kubo_variance(CovarianceCurve(lags, cov, se)).value
        scaled = green_kubo_variance(CovarianceCurve(lags, scale * cov, abs(scale) * se)).value
        assert scaled == pytest.approx(scale * base, rel=1e-12)

    def test_ou_value(self, ou_curve):
        assert green_kubo_variance(ou_curve).value == pytest.approx(2.0, rel=0.1)

    def test_unresolved_tail_warns(self):
        lags = np.linspace(0, 1, 11)
        c = CovarianceCurve(lags, np.exp(-0.01 * lags), np.full(11, 1e-3))
        with pytest.warns(UnresolvedTailWarning):
            gk = green_kubo_variance(c)
        assert not gk.tail_resolved


class TestCLT:
    def test_unit_rate(self):
        p = OUParams(1.0, math.sqrt(2.0))
        rep = clt_check(p, NULL, SimConfig(dt=0.01, horizon=200.0), ident, replicas=500)
        assert rep.empirical_variance == pytest.approx(2.0, rel=0.15)
        assert rep.green_kubo == pytest.approx(2.0, rel=0.15)
        assert rep.ad_pvalue > 1e-3
        assert rep.replicas == 500 and rep.statistics.shape == (500,)
        json.dumps(rep.to_dict())

    def test_rate_two_uses_green_kubo_not_sigma_squared(self):
        p = OUParams(2.0, math.sqrt(2.0))
        rep = clt_check(p, NULL, SimConfig(dt=0.01, horizon=100.0), ident, replicas=300)
        assert rep.empirical_variance == pytest.approx(0.5, rel=0.2)
        assert abs(rep.empirical_variance - 2.0) > 1.0

    def test_zero_observable(self):
        p = OUParams(1.0, math.sqrt(2.0))
        rep = clt_check(p, NULL, SimConfig(dt=0.05, horizon=20.0), observable("zero"), replicas=200)
        assert rep.empirical_variance == 0.0
        assert np.all(rep.statistics == 0.0)
        assert rep.relative_gap == 0.0
        assert rep.to_dict()["ad_pvalue"] is None

    def test_needs_replicas(self):
        with pytest.raises(DomainError):
            clt_check(OUParams(1.0, 1.0), NULL, SimConfig(dt=0.1, horizon=10.0), ident, replicas=50)


def test_unknown_observable():
    with pytest.raises(DomainError):
        observable("cube")


def test_observables_vectorised():
    v = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_array_equal(observable("positive")(v), [0.0, 1.0, 1.0])
    np.testing.assert_array_equal(observable("square")(v), [1.0, 0.0, 4.0])
