"""Bootstrap schemes: stationary block indices, semi-parametric response
resampling for tail regressions, and parametric resampling for conditional
extremes fits. Replicate ``r`` always draws from seed ``seed + r``.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from evtkit import kernels
from evtkit.condex import CondExtFit, fit_condext, group_exceedance_probability, simulate_conditional
from evtkit.errors import EvtError, EvtWarning
from evtkit.evgam import GpdFit, fit_nonstationary_gpd
from evtkit.series import Series


def stationary_bootstrap_indices(n: int, block_mean: float, seed=None) -> np.ndarray:
    """Indices of one stationary-bootstrap resample of a length-``n`` series.

    Blocks start at uniform positions, have Geometric(1 / block_mean)
    lengths, and wrap around the end of the series.
    """
    if block_mean < 1:
        raise ValueError("mean block length must be at least 1")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    starts = rng.integers(0, n, size=n)
    return np.asarray(kernels.stationary_indices(int(n), 1.0 / block_mean, u, starts))


@dataclass
class BootstrapResult:
    estimates: np.ndarray  # (n_ok, ...) replicate estimates
    n_boot: int
    n_failed: int
    seed: int
    block_mean: float | None = None

    def interval(self, level: float = 0.95) -> tuple:
        a = (1.0 - level) / 2.0
        lo, hi = np.quantile(self.estimates, [a, 1.0 - a], axis=0)
        return lo, hi

    def to_dict(self) -> dict:
        return {
            "n_boot": self.n_boot,
            "n_failed": self.n_failed,
            "seed": self.seed,
            "block_mean": self.block_mean,
        }


def semiparametric_response_bootstrap(
    fit: GpdFit,
    data,
    target,
    block_mean: float = 50,
    n_boot: int = 200,
    seed: int = 0,
    refit_smoothing: bool = False,
) -> BootstrapResult:
    """Refit on responses regenerated through the fitted conditional model.

    Responses are mapped to uniforms with the fitted conditional CDF, the
    uniform series is block-resampled, and each resampled value is mapped
    back through the conditional quantile function at the covariates of the
    position it lands on. ``target(refit)`` returns the quantity to
    bootstrap. Smoothing parameters stay at the original fit's values
    unless ``refit_smoothing`` is set.
    """
    series = data if isinstance(data, Series) else Series(data, fit.spec.response)
    series, _ = series.complete_cases(fit.spec.columns)
    frame = series.frame
    u = np.clip(fit.cdf(series.y, frame, warn=False), 1e-12, 1.0 - 1e-12)
    spec = fit.spec if refit_smoothing else dataclasses.replace(fit.spec, smoothing=tuple(fit.smoothing))

    estimates, failed = [], 0
    for r in range(n_boot):
        idx = stationary_bootstrap_indices(len(frame), block_mean, seed + r)
        y_b = fit.quantile(u[idx], frame, warn=False)
        try:
            refit = fit_nonstationary_gpd(spec, series.with_response(y_b))
            estimates.append(np.asarray(target(refit), dtype=float))
        except EvtError:
            failed += 1
    if failed:
        warnings.warn(f"{failed} of {n_boot} bootstrap refits failed and were dropped", EvtWarning, stacklevel=2)
    return BootstrapResult(np.array(estimates), n_boot, failed, seed, block_mean)


def parametric_bootstrap_condex(
    fit: CondExtFit, levels, n_boot: int = 100, seed: int = 0, n_sim: int = 10**5
) -> BootstrapResult:
    """Resimulate the exceedance set from ``fit``, refit, and recompute the group probability."""
    estimates, failed = [], 0
    for r in range(n_boot):
        rng = np.random.default_rng(seed + r)
        sims = simulate_conditional(fit, fit.n_exceed, fit.u_value, rng)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EvtWarning)
                refit = fit_condext(sims, fit.index, fit.u_level, u_value=fit.u_value)
            estimates.append(group_exceedance_probability(refit, levels, n_sim, seed + r))
        except EvtError:
            failed += 1
    if failed:
        warnings.warn(f"{failed} of {n_boot} bootstrap refits failed and were dropped", EvtWarning, stacklevel=2)
    return BootstrapResult(np.array(estimates), n_boot, failed, seed)
