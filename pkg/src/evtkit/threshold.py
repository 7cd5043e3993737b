"""Threshold choice by expected quantile discrepancy, and loss-augmented refits."""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from evtkit import gpd
from evtkit.errors import DomainError, EvtWarning, MinimumSampleError, PreconditionError
from evtkit.evgam import GpdFit, GpdSpec, excess_design, fit_nonstationary_gpd, penalized_objective
from evtkit.scoring import _loss
from evtkit.series import Series


@dataclass
class EqdResult:
    candidates: list[float]
    discrepancy: list[float]  # NaN for skipped candidates
    n_boot: int
    chosen: float
    seed: int
    fits: dict = dataclasses.field(default_factory=dict, repr=False)

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "candidate": self.candidates,
                "discrepancy": self.discrepancy,
                "chosen": [c == self.chosen for c in self.candidates],
            }
        )

    def to_dict(self) -> dict:
        return {
            "n_boot": self.n_boot,
            "seed": self.seed,
            "chosen": self.chosen,
            "table": [
                {"candidate": c, "discrepancy": None if np.isnan(d) else d, "chosen": c == self.chosen}
                for c, d in zip(self.candidates, self.discrepancy)
            ],
        }


def expected_discrepancy(values, n_boot: int, rng: np.random.Generator, m: int = 500) -> float:
    """Bootstrap mean of the mean absolute gap between sample and Exp(1) quantiles."""
    values = np.asarray(values, dtype=float)
    p = np.arange(1, m + 1) / (m + 1.0)
    theo = -np.log1p(-p)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    sample_q = np.quantile(values[idx], p, axis=1)  # (m, n_boot)
    return float(np.mean(np.abs(sample_q - theo[:, None])))


def eqd_select(data, spec: GpdSpec, candidates, n_boot: int = 100, m: int = 500, seed: int = 0) -> EqdResult:
    """Pick the threshold quantile level with the smallest expected discrepancy.

    For each candidate level the tail model is fitted, its excesses are
    mapped to the standard exponential scale, and the discrepancy against
    Exp(1) quantiles on an ``m``-point grid is averaged over ``n_boot``
    resamples. Every candidate uses the same resampling seed.
    """
    candidates = [float(c) for c in candidates]
    if not candidates:
        raise ValueError("need at least one candidate")
    if any(not 0.5 <= c <= 0.99 for c in candidates):
        raise DomainError("candidate levels must lie in [0.5, 0.99]")
    if n_boot < 50:
        raise ValueError("n_boot must be at least 50")
    series = data if isinstance(data, Series) else Series(data, spec.response)

    discrepancy, fits = [], {}
    for c in candidates:
        try:
            fit = fit_nonstationary_gpd(dataclasses.replace(spec, tau=c), series)
        except MinimumSampleError as exc:
            warnings.warn(f"candidate {c} skipped: {exc}", EvtWarning, stacklevel=2)
            discrepancy.append(float("nan"))
            continue
        X, z, _ = excess_design(fit, series.frame)
        e = -np.log(gpd.sf(z, np.exp(X @ fit.beta), fit.xi))
        discrepancy.append(expected_discrepancy(e, n_boot, np.random.default_rng(seed), m))
        fits[c] = fit
    if all(np.isnan(discrepancy)):
        raise MinimumSampleError("every candidate left too few exceedances")
    chosen = candidates[int(np.nanargmin(discrepancy))]
    return EqdResult(candidates, discrepancy, n_boot, chosen, seed, fits)


def loss_augmented_refit(fit: GpdFit, data, weight: float = 1.0) -> GpdFit:
    """Re-estimate scale coefficients and shape under a loss-augmented objective.

    Minimises the penalised negative log-likelihood plus ``weight`` times
    the mean competition loss between the sorted exponential-scale excesses
    and Exp(1) quantiles at ``i / (n_v + 1)``. Nelder-Mead is used because
    the loss is not differentiable. The threshold is held fixed.
    """
    frame = data.frame if isinstance(data, Series) else data
    X, z, _ = excess_design(fit, frame)
    n_v = z.size
    if n_v == 0:
        raise PreconditionError("no threshold exceedances to refit on")
    if weight == 0:
        return fit
    theo = -np.log1p(-np.arange(1, n_v + 1) / (n_v + 1.0))
    fixed = fit.spec.shape_fixed

    def unpack(theta):
        return (theta, fixed) if fixed is not None else (theta[:-1], theta[-1])

    def objective(theta):
        beta, xi = unpack(theta)
        if not -0.999 <= xi <= 2.0:
            return np.inf
        base = penalized_objective(fit, beta, xi, frame)
        if not np.isfinite(base):
            return np.inf
        with np.errstate(divide="ignore"):
            e = np.sort(-np.log(gpd.sf(z, np.exp(X @ beta), xi)))
        return base + weight * float(np.mean(_loss(e, theo)))

    theta0 = fit.beta.copy() if fixed is not None else np.append(fit.beta, fit.xi)
    res = minimize(objective, theta0, method="Nelder-Mead", options={"maxiter": 400 * theta0.size, "xatol": 1e-7, "fatol": 1e-9})
    if not np.isfinite(res.fun) or res.fun > objective(theta0):
        warnings.warn(f"loss-augmented refit failed ({res.message}); keeping the plain fit", EvtWarning, stacklevel=2)
        return fit
    beta, xi = unpack(res.x)
    nll = penalized_objective(dataclasses.replace(fit, smoothing=np.zeros_like(fit.smoothing)), beta, xi, frame)
    meta = dict(fit.meta, loss_augmented={"weight": weight, "objective": float(res.fun)})
    return dataclasses.replace(fit, beta=np.asarray(beta), xi=float(xi), nll=nll, meta=meta)
