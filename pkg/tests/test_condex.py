import warnings

import numpy as np
import pytest

from evtkit.condex import (
    challenge_levels,
    condition_sweep,
    factorized_probability,
    fit_condext,
    group_exceedance_probability,
    laplace_quantile,
    laplace_sf,
    simulate_conditional,
    single_site_fit,
)
from evtkit.errors import DomainError, PreconditionError, SparseDataWarning
from evtkit.synth import gen_ht_pair


def test_laplace_functions():
    assert laplace_quantile(0.5) == 0.0
    assert laplace_sf(laplace_quantile(0.99)) == pytest.approx(0.01)
    s1, s2 = challenge_levels()
    assert s1 == pytest.approx(np.log(150.0)) and s1 == pytest.approx(5.0106, abs=1e-4)
    assert s2 == pytest.approx(np.log(12.5)) and s2 == pytest.approx(2.5257, abs=1e-4)


@pytest.fixture(scope="module")
def planted():
    w = gen_ht_pair(10**5, alpha=0.5, beta=0.2, seed=1)
    return w, fit_condext(w, 0, 0.85)


def test_planted_recovery(planted):
    _, fit = planted
    assert fit.alpha[0] == pytest.approx(0.5, abs=0.05)
    assert fit.beta[0] == pytest.approx(0.2, abs=0.1)
    assert fit.n_exceed == pytest.approx(0.15 * 10**5 * (1 / 0.15) * laplace_sf(fit.u_value), rel=0.01)


def test_residual_round_trip(planted):
    w, fit = planted
    rows = w[w[:, 0] > fit.u_value]
    back = fit.alpha * rows[:, [0]] + rows[:, [0]] ** fit.beta * fit.residuals
    np.testing.assert_allclose(back, rows[:, [1]], atol=1e-10)


def test_simulated_conditional_mean_ratio(planted):
    _, fit = planted
    sims = simulate_conditional(fit, 200000, level=40.0, rng=1)
    assert np.mean(sims[:, 1] / sims[:, 0]) == pytest.approx(fit.alpha[0], abs=0.05)


def test_memoryless_conditioning(planted):
    _, fit = planted
    wi = simulate_conditional(fit, 200000, rng=2)[:, 0]
    assert np.mean(wi > fit.u_value + 1.0) == pytest.approx(np.exp(-1.0), abs=0.005)
    with pytest.raises(DomainError):
        simulate_conditional(fit, 10, level=fit.u_value - 1)


def test_comonotone_pair():
    x = laplace_quantile(np.random.default_rng(0).random(10**4))
    fit = fit_condext(np.c_[x, x], 0, 0.85)
    assert fit.alpha[0] == 1.0 and fit.beta[0] == 0.0
    np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-12)
    sims = simulate_conditional(fit, 1000, rng=0)
    np.testing.assert_allclose(sims[:, 0], sims[:, 1])


def test_independent_pair():
    w = laplace_quantile(np.random.default_rng(3).random((10**5, 2)))
    fit = fit_condext(w, 0, 0.85)
    assert fit.alpha[0] == pytest.approx(0.0, abs=0.1)
    assert fit.beta[0] == pytest.approx(0.0, abs=0.2)
    s = -np.log(2 / 300)
    p = group_exceedance_probability(fit, [s, s], n_sim=10**6, seed=0)
    assert (1 / 300) ** 2 / 2 < p < 2 * (1 / 300) ** 2


def test_comonotone_group_of_eight():
    x = laplace_quantile(np.random.default_rng(4).random(10**4))
    fit = fit_condext(np.tile(x[:, None], (1, 8)), 0, 0.85)
    s = -np.log(2 / 300)
    assert group_exceedance_probability(fit, [s] * 8, n_sim=10**5) == pytest.approx(1 / 300, rel=1e-12)


def test_single_site_group():
    x = laplace_quantile(np.random.default_rng(5).random(1000))
    fit = single_site_fit(x)
    assert group_exceedance_probability(fit, [3.0]) == pytest.approx(np.exp(-3.0) / 2, rel=1e-14)


def test_group_probability_preconditions(planted):
    _, fit = planted
    with pytest.raises(PreconditionError, match="site 0"):
        group_exceedance_probability(fit, [fit.u_value - 0.5, 3.0])
    with pytest.raises(DomainError):
        group_exceedance_probability(fit, [5.0])


def test_sparse_warning():
    w = laplace_quantile(np.random.default_rng(6).random((400, 2)))
    with pytest.warns(SparseDataWarning):
        fit_condext(w, 0, 0.9)


def test_factorised_product():
    assert factorized_probability([0.1, 0.2]) == pytest.approx(0.02)
    assert factorized_probability([0.3, 0.0]) == 0.0
    with pytest.raises(ValueError):
        factorized_probability([])


def test_condition_sweep_is_stable():
    w = gen_ht_pair(10**5, alpha=0.5, beta=0.2, seed=7)
    s = -np.log(2 / 300)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = condition_sweep(w, [s, s], quantiles=(0.8, 0.85, 0.9, 0.95), n_sim=10**5)
    vals = np.array(list(out.values()))
    assert vals.min() > 0 and vals.max() / vals.min() <= 10
