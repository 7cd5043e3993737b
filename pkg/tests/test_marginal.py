import numpy as np
import pandas as pd
import pytest

from evtkit import gpd
from evtkit.errors import DomainError
from evtkit.evgam import GpdSpec, fit_nonstationary_gpd
from evtkit.marginal import CHALLENGE_EXCEEDANCE, MarginalTail, marginal_cdf, marginal_quantile
from evtkit.synth import gen_univariate


@pytest.fixture(scope="module")
def two_strata():
    s = gen_univariate({"n": 6000, "scale_season": 0.4}, seed=5)
    return s, fit_nonstationary_gpd(GpdSpec(scale="scale ~ 1 + ind(season==1)"), s)


def test_constant_model_equals_conditional():
    s = gen_univariate({"n": 4000, "thresholds": {1: 25, 2: 25}}, seed=6)
    fit = fit_nonstationary_gpd(GpdSpec(threshold="threshold ~ 1", rate_by=None), s)
    y = fit.threshold_at(s.frame.iloc[:1])[0] + 7.0
    assert marginal_cdf(fit, s, y) == pytest.approx(fit.cdf(y, s.frame.iloc[:1])[0], abs=1e-14)


def test_two_term_mixture(two_strata):
    s, fit = two_strata
    season = s.frame.season.to_numpy()
    y = 80.0
    parts = []
    for k in (1, 2):
        row = s.frame[season == k].iloc[:1]
        parts.append((np.mean(season == k), fit.cdf(y, row)[0]))
    mix = sum(w * f for w, f in parts)
    assert marginal_cdf(fit, s, y) == pytest.approx(mix, abs=1e-10)


def test_round_trip_and_monotone(two_strata):
    s, fit = two_strata
    tail = MarginalTail(fit, s)
    for p in (0.999, 0.9999, 1 - CHALLENGE_EXCEEDANCE):
        assert tail.cdf(tail.quantile(p)) == pytest.approx(p, abs=1e-7)
    grid = np.linspace(tail.floor, tail.floor + 200, 200)
    vals = [tail.cdf(y) for y in grid]
    assert np.all(np.diff(vals) >= 0)
    assert tail.cdf(1e9) == pytest.approx(1.0)
    assert tail.quantile(0.9999) > tail.quantile(0.999)


def test_exponential_tail_closed_form():
    s = gen_univariate({"n": 4000, "thresholds": {1: 25, 2: 25}}, seed=7)
    fit = fit_nonstationary_gpd(GpdSpec(threshold="threshold ~ 1", rate_by=None, shape_fixed=0.0), s)
    sigma = fit.scale_at(s.frame.iloc[:1])[0]
    v = fit.threshold_at(s.frame.iloc[:1])[0]
    lam = fit.overall_rate
    p = 1 - lam * np.exp(-5.0)
    assert marginal_quantile(fit, s, p) == pytest.approx(v + 5.0 * sigma, rel=1e-8)


def test_below_threshold_is_an_error(two_strata):
    s, fit = two_strata
    with pytest.raises(DomainError, match="tail"):
        marginal_cdf(fit, s, 1.0)
    with pytest.raises(DomainError):
        marginal_quantile(fit, s, 0.5)


def test_challenge_exceedance():
    assert CHALLENGE_EXCEEDANCE == pytest.approx(1 / 60000)
