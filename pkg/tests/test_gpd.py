import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.integrate import quad

from evtkit import gpd
from evtkit.errors import DegenerateDataError, DomainError, MinimumSampleError
from evtkit.gpd import GpdParams


@pytest.mark.parametrize("xi", [-0.4, -1e-9, 0.0, 0.1, 0.7])
def test_survival_matches_scipy(xi):
    y = np.linspace(0, 12, 50)
    p = GpdParams(2.0, xi)
    expected = stats.genpareto.sf(y, xi, scale=2.0)
    # Below |xi| = 1e-8 the exponential limit is used, off by O(xi y^2).
    rtol = 1e-10 if abs(xi) > 1e-8 else 1e-7
    np.testing.assert_allclose(gpd.gpd_survival(y, p), expected, rtol=rtol, atol=1e-14)


def test_survival_zero_beyond_endpoint():
    p = GpdParams(1.0, -0.5)
    assert p.upper_endpoint == pytest.approx(2.0)
    assert gpd.gpd_survival(3.0, p) == 0.0


def test_scale_must_be_positive():
    with pytest.raises(DomainError):
        GpdParams(0.0, 0.1)


def test_negative_excess_rejected():
    with pytest.raises(DomainError):
        gpd.gpd_survival(-1.0, GpdParams(1.0, 0.1))


def test_quantile_bounds():
    with pytest.raises(DomainError):
        gpd.gpd_quantile(1.0, GpdParams(1.0, 0.1))


@settings(max_examples=60, deadline=None)
@given(
    p=st.floats(0.0, 0.999999),
    scale=st.floats(0.01, 100.0),
    xi=st.floats(-0.9, 1.5),
)
def test_quantile_inverts_cdf(p, scale, xi):
    params = GpdParams(scale, xi)
    y = gpd.gpd_quantile(p, params)
    assert gpd.gpd_cdf(y, params) == pytest.approx(p, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(0.1, 10.0), xi=st.floats(-0.5, 0.9), y=st.floats(0.0, 50.0))
def test_survival_monotone_and_bounded(scale, xi, y):
    params = GpdParams(scale, xi)
    a = gpd.gpd_survival(y, params)
    b = gpd.gpd_survival(y + 0.5, params)
    assert 0.0 <= b <= a <= 1.0


def test_logpdf_matches_scipy():
    y = np.linspace(0, 5, 11)
    np.testing.assert_allclose(
        gpd.gpd_logpdf(y, GpdParams(1.5, 0.2)), stats.genpareto.logpdf(y, 0.2, scale=1.5), rtol=1e-12
    )


def test_mle_agrees_with_scipy(rng):
    y = stats.genpareto.rvs(0.2, scale=3.0, size=3000, random_state=rng)
    ours = gpd.gpd_fit_mle(y)
    c, _, s = stats.genpareto.fit(y, floc=0)
    assert ours.params.shape == pytest.approx(c, abs=2e-3)
    assert ours.params.scale == pytest.approx(s, rel=2e-3)
    assert ours.loglik >= gpd.gpd_loglik(y, GpdParams(s, c)) - 1e-6


def test_mle_fixed_shape(rng):
    y = rng.exponential(2.0, size=2000)
    fit = gpd.gpd_fit_mle(y, shape_fixed=0.0)
    assert fit.params.shape == 0.0
    assert fit.params.scale == pytest.approx(y.mean(), rel=1e-6)


def test_mle_errors():
    with pytest.raises(MinimumSampleError):
        gpd.gpd_fit_mle([1.0, 2.0])
    with pytest.raises(DegenerateDataError):
        gpd.gpd_fit_mle(np.ones(50))
    with pytest.raises(DomainError):
        gpd.gpd_fit_mle(np.r_[np.ones(20), -1.0])


def _crps_quad(y, scale, xi):
    cdf = lambda x: 1.0 - stats.genpareto.sf(x, xi, scale=scale)
    upper = stats.genpareto.ppf(1 - 1e-13, xi, scale=scale) if xi < 0.3 else np.inf
    a = quad(lambda x: cdf(x) ** 2, 0, max(y, 0))[0] if y > 0 else 0.0
    b = quad(lambda x: (1 - cdf(x)) ** 2, max(y, 0), upper, limit=200)[0]
    return a + b + max(-y, 0)


@pytest.mark.parametrize("y,scale,xi", [(0.5, 1.0, 0.0), (3.0, 2.0, 0.2), (0.1, 1.0, -0.3), (-1.0, 1.0, 0.1), (10.0, 1.5, 0.4)])
def test_crps_closed_form_matches_quadrature(y, scale, xi):
    assert gpd.gpd_crps(y, scale, xi) == pytest.approx(_crps_quad(y, scale, xi), rel=1e-6, abs=1e-8)


def test_crps_shape_limit():
    with pytest.raises(DomainError):
        gpd.gpd_crps(1.0, 1.0, 1.0)


def test_pwm_close_to_truth(rng):
    y = stats.genpareto.rvs(0.1, scale=2.0, size=20000, random_state=rng)
    p = gpd.pwm_estimate(y)
    assert p.scale == pytest.approx(2.0, rel=0.05)
    assert p.shape == pytest.approx(0.1, abs=0.05)
