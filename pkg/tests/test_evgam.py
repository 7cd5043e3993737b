import dataclasses
import warnings

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evtkit import gpd
from evtkit.errors import DomainError, ExtrapolationWarning, MinimumSampleError, SparseDataWarning
from evtkit.evgam import (
    GpdSpec,
    conditional_cdf,
    exponential_qq,
    fit_nonstationary_gpd,
    fit_threshold_quantile,
    transform_excesses_to_exponential,
)
from evtkit.series import Series
from evtkit.synth import gen_univariate, true_log_scale


@pytest.fixture(scope="module")
def sample():
    return gen_univariate({"n": 6000, "scale_amplitude": 0.5, "scale_season": 0.3}, seed=1)


@pytest.fixture(scope="module")
def fit(sample):
    spec = GpdSpec(scale="scale ~ 1 + ind(season==1) + crs(x, B=5)")
    return fit_nonstationary_gpd(spec, sample)


def test_quantile_threshold_indicator_cells(sample):
    th = fit_threshold_quantile("threshold ~ 1 + ind(season==1)", sample, 0.9)
    y = sample.y
    season = sample.frame.season.to_numpy()
    v = th(sample.frame)
    for s in (1, 2):
        rows = season == s
        assert np.mean(y[rows] <= v[rows]) == pytest.approx(0.9, abs=1e-3)


def test_quantile_threshold_lp_matches_statsmodels_style_check(sample):
    # The LP solution satisfies the pinball-loss optimality condition:
    # about tau of the points sit at or below the fitted surface.
    th = fit_threshold_quantile("threshold ~ 1 + lin(x)", sample, 0.8)
    frac = np.mean(sample.y <= th(sample.frame) * (1 + 1e-9))
    assert frac == pytest.approx(0.8, abs=2e-3)


def test_threshold_errors(sample):
    with pytest.raises(DomainError):
        fit_threshold_quantile("threshold ~ 1", sample, 1.0)
    bad = sample.with_response(np.r_[-1.0, sample.y[1:]])
    with pytest.raises(DomainError):
        fit_threshold_quantile("threshold ~ 1", bad, 0.9)


def test_fit_recovers_scale_shape(sample, fit):
    cfg = sample.meta["truth"]
    grid = pd.DataFrame({"x": np.linspace(0.05, 0.95, 19), "season": 1})
    truth = cfg["scale_intercept"] + cfg["scale_season"] + cfg["scale_amplitude"] * np.sin(2 * np.pi * grid.x)
    rmse = np.sqrt(np.mean((np.log(fit.scale_at(grid)) - truth) ** 2))
    assert rmse < 0.2
    assert abs(fit.xi - cfg["xi"]) < 0.15
    assert fit.n_v == pytest.approx(600, abs=5)


def test_information_criteria(fit):
    assert fit.aic == pytest.approx(2 * fit.nll + 2 * fit.edf)
    assert fit.bic == pytest.approx(2 * fit.nll + np.log(fit.n_v) * fit.edf)
    p = fit.beta.size + 1
    assert 2.0 <= fit.edf <= p + 1e-8


def test_cdf_monotone_and_quantile_inverse(sample, fit):
    rows = sample.frame.iloc[:40]
    for i in range(0, 40, 7):
        row = rows.iloc[[i]]
        ys = np.linspace(0.1, 200, 300)
        vals = np.array([fit.cdf(y, row)[0] for y in ys])
        assert np.all(np.diff(vals) >= -1e-12)
        assert vals[0] >= 0 and vals[-1] <= 1
    p = np.array([0.95, 0.99, 0.9999])
    for pi in p:
        q = fit.quantile(pi, rows)
        np.testing.assert_allclose(fit.cdf(q, rows), pi, atol=1e-10)


def test_cdf_rate_at_threshold(sample, fit):
    rows = sample.frame.iloc[:5]
    v = fit.threshold_at(rows)
    np.testing.assert_allclose(fit.cdf(v, rows), 1 - fit.rate_at(rows), atol=1e-12)
    assert conditional_cdf(fit, v[0], rows.iloc[[0]]) == pytest.approx(1 - fit.rate_at(rows)[0])


def test_quantile_domain(sample, fit):
    with pytest.raises(DomainError):
        fit.quantile(1.0, sample.frame.iloc[:2])


@settings(max_examples=15, deadline=None)
@given(c=st.floats(0.2, 20.0))
def test_scale_equivariance(c):
    s = gen_univariate({"n": 3000}, seed=4)
    spec = GpdSpec(scale="scale ~ 1 + ind(season==1)")
    a = fit_nonstationary_gpd(spec, s)
    b = fit_nonstationary_gpd(spec, s.with_response(c * s.y))
    rows = s.frame.iloc[:3]
    np.testing.assert_allclose(b.scale_at(rows), c * a.scale_at(rows), rtol=1e-5)
    assert b.xi == pytest.approx(a.xi, abs=1e-6)
    np.testing.assert_allclose(b.quantile(0.999, rows), c * a.quantile(0.999, rows), rtol=1e-5)


def test_exponential_transform_is_standard(fit, sample):
    e = transform_excesses_to_exponential(fit, sample)
    assert e.size == fit.n_v
    assert e.mean() == pytest.approx(1.0, abs=0.12)
    qq = exponential_qq(e)
    assert {"theoretical", "empirical"} <= set(qq.columns)


def test_case_deletion_uses_model_columns_only():
    s = gen_univariate({"n": 3000, "missing": 0.1}, seed=2)
    fit = fit_nonstationary_gpd(GpdSpec(scale="scale ~ 1 + crs(x, B=4)"), s)
    assert fit.drop_fraction == pytest.approx(s.frame.x.isna().mean())
    fit0 = fit_nonstationary_gpd(GpdSpec(), s)
    assert fit0.drop_fraction == 0.0


def test_too_few_exceedances():
    s = gen_univariate({"n": 300}, seed=3)
    with pytest.raises(MinimumSampleError):
        fit_nonstationary_gpd(GpdSpec(), s)


def test_fixed_shape_and_smoothing(sample):
    spec = GpdSpec(scale="scale ~ 1 + crs(x, B=5)", shape_fixed=0.0, smoothing=(1.0,))
    fit = fit_nonstationary_gpd(spec, sample)
    assert fit.xi == 0.0
    assert list(fit.smoothing) == [1.0]
    with pytest.warns(ExtrapolationWarning):
        fit.scale_at(pd.DataFrame({"x": [2.0]}))


def test_summary_is_plain(fit):
    import json

    json.dumps(fit.summary())
