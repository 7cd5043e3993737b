import warnings

import numpy as np
import pandas as pd
import pytest

from evtkit.errors import DomainError, EvtWarning, PreconditionError
from evtkit.evgam import GpdSpec, excess_design, fit_nonstationary_gpd
from evtkit.series import Series, add_calendar
from evtkit.synth import gen_univariate
from evtkit.threshold import eqd_select, expected_discrepancy, loss_augmented_refit

POLLUTED = {"n": 6000, "rates": {1: 0.2, 2: 0.2}, "body_a": 1.0, "body_b": 1.0}
GRID = [0.6, 0.7, 0.8, 0.85, 0.9, 0.95]


def test_polluted_body_picks_high_level():
    s = gen_univariate(POLLUTED, seed=3)
    res = eqd_select(s, GpdSpec(), GRID, n_boot=50)
    assert res.chosen >= 0.8
    assert res.discrepancy[GRID.index(res.chosen)] == np.nanmin(res.discrepancy)
    t = res.table()
    assert t.chosen.sum() == 1


def test_single_candidate():
    s = gen_univariate(POLLUTED, seed=4)
    assert eqd_select(s, GpdSpec(), [0.9], n_boot=50).chosen == 0.9


def _null_result():
    rng = np.random.default_rng(0)
    frame = add_calendar(pd.DataFrame({"y": rng.exponential(size=6000) + 1.0}))
    return eqd_select(Series(frame), GpdSpec(), [0.6, 0.7, 0.8, 0.9, 0.95], n_boot=50)


@pytest.mark.xfail(strict=True, reason="pure sampling noise scales as 1/sqrt(n_v): ratio ~ sqrt(0.40/0.05) ~ 2.8")
def test_iid_exponential_null_within_factor_two():
    d = np.asarray(_null_result().discrepancy)
    assert d.max() <= 2 * d.min()


def test_iid_exponential_null_after_size_scaling():
    res = _null_result()
    d = np.asarray(res.discrepancy) * np.sqrt([res.fits[c].n_v for c in res.candidates])
    assert d.max() <= 2 * d.min()


def test_affine_invariance():
    s = gen_univariate(POLLUTED, seed=5)
    a = eqd_select(s, GpdSpec(), GRID, n_boot=50)
    b = eqd_select(s.with_response(3 * s.y + 1), GpdSpec(), GRID, n_boot=50)
    assert a.chosen == b.chosen


def test_argument_checks():
    s = gen_univariate({"n": 2000}, seed=1)
    with pytest.raises(DomainError):
        eqd_select(s, GpdSpec(), [0.3], n_boot=50)
    with pytest.raises(ValueError):
        eqd_select(s, GpdSpec(), [0.9], n_boot=10)


def test_sparse_candidate_skipped():
    s = gen_univariate({"n": 2000}, seed=1)
    with pytest.warns(EvtWarning, match="skipped"):
        res = eqd_select(s, GpdSpec(), [0.8, 0.99], n_boot=50)
    assert np.isnan(res.discrepancy[1]) and res.chosen == 0.8
    assert res.to_dict()["table"][1]["discrepancy"] is None


def test_discrepancy_variance_shrinks():
    e = np.random.default_rng(1).exponential(size=400)
    vals = [expected_discrepancy(e, b, np.random.default_rng(7)) for b in (50, 200, 800)]
    assert max(vals) - min(vals) < 0.05 * np.mean(vals)


@pytest.fixture(scope="module")
def base():
    s = gen_univariate({"n": 6000, "scale_season": 0.3}, seed=2)
    return s, fit_nonstationary_gpd(GpdSpec(scale="scale ~ 1 + ind(season==1)"), s)


def test_refit_weight_zero_is_identity(base):
    s, fit = base
    out = loss_augmented_refit(fit, s, weight=0.0)
    np.testing.assert_allclose(out.beta, fit.beta, atol=1e-8)
    assert out.xi == pytest.approx(fit.xi, abs=1e-8)


def test_refit_moves_quantiles_up(base):
    s, fit = base
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EvtWarning)
        out = loss_augmented_refit(fit, s)
    rows = s.frame.iloc[:2]
    assert np.all(out.quantile(0.9999, rows) >= fit.quantile(0.9999, rows) - 1e-6)


def test_refit_without_exceedances(base):
    s, fit = base
    low = s.with_response(np.full(s.n, 1e-3))
    with pytest.raises(PreconditionError):
        loss_augmented_refit(fit, low)
