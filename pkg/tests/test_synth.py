import numpy as np
import pytest

from evtkit.dependence import chi_matrix, cluster_by_chi
from evtkit.synth import (
    TrivariateConfig,
    UnivariateConfig,
    gen_grouped50,
    gen_trivariate,
    gen_univariate,
    true_conditional_quantile,
    trivariate_truth,
)


def test_univariate_truth_and_determinism():
    a = gen_univariate({"n": 3000}, seed=3)
    b = gen_univariate({"n": 3000}, seed=3)
    assert a.frame.equals(b.frame)
    assert a.meta["truth"]["xi"] == 0.05
    with pytest.raises(ValueError):
        gen_univariate({"nope": 1})


def test_univariate_rates_and_quantile():
    s = gen_univariate({"n": 60000}, seed=1)
    cfg = UnivariateConfig(n=60000)
    v = np.where(s.frame.season == 1, 20.0, 30.0)
    assert np.mean(s.y > v) == pytest.approx(0.1, abs=0.005)
    q = true_conditional_quantile(cfg, s.frame, 0.99)
    assert np.mean(s.y > q) == pytest.approx(0.01, abs=0.002)


def test_missing_fraction():
    s = gen_univariate({"n": 20000, "missing": 0.06}, seed=0)
    frac = s.frame[["x", "wind"]].isna().any(axis=1).mean()
    assert frac == pytest.approx(1 - 0.94**2, abs=0.01)


@pytest.mark.parametrize("copula", ["independent", "comonotone", "gaussian", "logistic"])
def test_trivariate_margins_exponential(copula):
    z, cov, truth = gen_trivariate({"copula": copula, "n": 20000}, seed=2)
    assert z.shape == (20000, 3)
    assert np.all(z > 0)
    np.testing.assert_allclose(z.mean(axis=0), 1.0, atol=0.05)
    assert {"season", "atmosphere"} <= set(cov.columns)
    assert cov.groupby(["year", "month"]).atmosphere.nunique().max() == 1


def test_logistic_chi_matches_truth():
    z, _, truth = gen_trivariate({"copula": "logistic", "theta": 0.5, "n": 100000}, seed=1)
    from evtkit.dependence import chi_u

    assert chi_u(z, (0, 1), 0.99) == pytest.approx(truth["chi"], abs=0.05)


def test_gaussian_truth():
    t = trivariate_truth(TrivariateConfig(rho=0.5))
    assert t["eta"] == 0.75 and t["lambda_center"] == pytest.approx(0.5)


def test_grouped_partition_recovered():
    w, truth = gen_grouped50({"n": 10000}, seed=0)
    assert w.shape == (10000, 50)
    res = cluster_by_chi(chi_matrix(w, 0.95), 0.1)
    assert sorted(map(sorted, res.groups)) == sorted(map(sorted, truth["groups"]))
