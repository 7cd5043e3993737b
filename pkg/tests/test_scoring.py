import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from evtkit import gpd
from evtkit.errors import DomainError
from evtkit.evgam import GpdSpec, fit_nonstationary_gpd
from evtkit.scoring import competition_loss, crps, forward_select, k_fold_cv
from evtkit.synth import gen_univariate


@pytest.mark.parametrize("q_hat,expected", [(100.0, 0.0), (95.0, 3.6), (105.0, 0.4), (99.0, 0.0), (101.0, 0.0)])
def test_loss_hand_values(q_hat, expected):
    assert competition_loss(100.0, q_hat) == pytest.approx(expected, abs=1e-12)


def test_loss_rejects_nonpositive_q():
    with pytest.raises(DomainError):
        competition_loss(0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(q=st.floats(0.01, 1e4))
def test_loss_continuous_at_breakpoints(q):
    for edge in (0.99 * q, 1.01 * q):
        left = competition_loss(q, np.nextafter(edge, -np.inf))
        right = competition_loss(q, np.nextafter(edge, np.inf))
        assert abs(left - right) < 1e-12 * max(1.0, q)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0.1, 100), a=st.floats(0, 200), b=st.floats(0, 200))
def test_loss_piecewise_linear(q, a, b):
    lo, hi = sorted((a, b))
    mid = 0.5 * (lo + hi)
    f = lambda x: competition_loss(q, x)
    # Convex and piecewise linear: midpoint value never above the chord.
    assert f(mid) <= 0.5 * (f(lo) + f(hi)) + 1e-9


def test_crps_examples():
    uniform = lambda x: min(max(x, 0.0), 1.0)
    assert crps(uniform, 0.5, 0.0, 1.0) == pytest.approx(1 / 12, abs=1e-6)
    expo = lambda x: 1 - np.exp(-x) if x > 0 else 0.0
    assert crps(expo, 0.0, 0.0, 60.0) == pytest.approx(0.5, abs=1e-6)
    step = lambda x: float(x >= 2.0)
    assert crps(step, 2.0, 0.0, 4.0) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(DomainError):
        crps(uniform, 0.5, 1.0, 0.0)


def test_crps_quadrature_matches_gpd_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(50):
        scale = rng.uniform(0.2, 5)
        xi = rng.uniform(-0.4, 0.4)
        y = stats.genpareto.rvs(xi, scale=scale, random_state=rng)
        upper = -scale / xi if xi < 0 else stats.genpareto.isf(1e-9, xi, scale=scale)
        cdf = lambda x: 1 - gpd.sf(max(x, 0.0), scale, xi)
        num = crps(cdf, y, 0.0, upper)
        assert num == pytest.approx(gpd.gpd_crps(y, scale, xi), abs=1e-6)


@pytest.fixture(scope="module")
def small():
    return gen_univariate({"n": 3000, "scale_season": 0.5}, seed=9)


def test_k_fold_bounds(small):
    spec = GpdSpec()
    with pytest.raises(ValueError):
        k_fold_cv(small, spec, k=1)
    with pytest.raises(ValueError):
        k_fold_cv(small, spec, metric="rmse")


def test_k_fold_prefers_true_structure(small):
    a = k_fold_cv(small, GpdSpec(scale="scale ~ 1"), k=5)
    b = k_fold_cv(small, GpdSpec(scale="scale ~ 1 + ind(season==1)"), k=5)
    assert b < a
    assert k_fold_cv(small, GpdSpec(), k=5, metric="loss") >= 0


def test_k_fold_is_deterministic(small):
    spec = GpdSpec(scale="scale ~ 1 + ind(season==1)")
    assert k_fold_cv(small, spec, k=4) == k_fold_cv(small, spec, k=4)


def test_aic_bic_identity(small):
    fit = fit_nonstationary_gpd(GpdSpec(scale="scale ~ 1 + crs(x, B=4)"), small)
    assert fit.bic - fit.aic == pytest.approx((np.log(fit.n_v) - 2) * fit.edf, abs=1e-8)


def test_forward_select_empty_pool(small):
    rep = forward_select(small, [], GpdSpec(), k=3)
    assert rep.chosen == 1
    assert len(rep.table) == 1
    row = rep.table.iloc[0]
    assert row.delta_crps == row.delta_aic == row.delta_bic == 0.0


def test_forward_select_finds_season(small):
    rep = forward_select(small, ["ind(season==1)", "crs(wind, B=4)"], GpdSpec(), k=3)
    assert "ind(season==1)" in rep.chosen_formula
    base = rep.table.crps.iloc[0]
    assert rep.table.loc[rep.table.model == rep.chosen, "crps"].iloc[0] <= base
    csv = rep.to_csv()
    assert csv.splitlines()[0] == "model,formula,delta_crps,delta_aic,delta_bic"


@pytest.mark.slow
def test_forward_select_recovers_full_model():
    hits = 0
    for r in range(20):
        s = gen_univariate({"n": 12000, "scale_season": 0.3, "scale_amplitude": 0.4, "scale_wind": 0.3}, seed=100 + r)
        rep = forward_select(s, ["ind(season==1)", "crs(x, B=5)", "crs(wind, B=4)"], GpdSpec(), k=5)
        f = rep.chosen_formula
        hits += all(t in f for t in ("ind(season==1)", "crs(x, B=5)", "crs(wind, B=4)"))
    assert hits >= 16
