"""Conditional multivariate extremes on Laplace margins.

Given that coordinate ``i`` exceeds a high threshold, the other coordinates
follow ``W_j = alpha_j W_i + W_i^beta_j Z_j`` with a residual vector ``Z``
independent of ``W_i``. Parameters are estimated coordinate by coordinate
with a Gaussian working likelihood; simulation resamples whole residual
rows, which keeps their joint dependence.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from evtkit.errors import BoundaryWarning, DomainError, FitError, PreconditionError, SparseDataWarning

log = logging.getLogger(__name__)

ALPHA_BOUNDS = (-1.0, 1.0)
BETA_BOUNDS = (-5.0, 1.0)
_STARTS = ((0.1, 0.1), (0.5, 0.3), (0.9, 0.1), (-0.5, 0.2), (0.0, 0.7))


def laplace_sf(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, 0.5 * np.exp(-np.abs(x)), 1.0 - 0.5 * np.exp(-np.abs(x)))
    return float(out) if out.ndim == 0 else out


def laplace_quantile(p):
    p = np.asarray(p, dtype=float)
    out = np.where(p < 0.5, np.log(2.0 * p), -np.log(2.0 * (1.0 - p)))
    return float(out) if out.ndim == 0 else out


@dataclass
class CondExtFit:
    index: int
    others: tuple
    alpha: np.ndarray
    beta: np.ndarray
    u_level: float
    u_value: float
    residuals: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    sd: np.ndarray = field(repr=False)
    n_obs: int = 0

    @property
    def dim(self) -> int:
        return len(self.others) + 1

    @property
    def n_exceed(self) -> int:
        return self.residuals.shape[0]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "others": list(self.others),
            "alpha": [float(a) for a in self.alpha],
            "beta": [float(b) for b in self.beta],
            "u_level": self.u_level,
            "u_value": self.u_value,
            "n_exceed": self.n_exceed,
        }


def _profile_nll(theta, wi, wj, log_wi):
    a, b = theta
    scale = np.exp(b * log_wi)
    r = (wj - a * wi) / scale
    var = r.var()
    if not var > 0:
        return np.inf
    return float(b * log_wi.sum() + 0.5 * wi.size * (np.log(var) + 1.0))


def _fit_pair(wi, wj):
    # Perfect dependence has zero residual variance, so the likelihood is unbounded.
    if np.allclose(wj, wi, rtol=0, atol=1e-12):
        return 1.0, 0.0
    log_wi = np.log(wi)
    best = None
    for start in _STARTS:
        res = minimize(_profile_nll, start, args=(wi, wj, log_wi), method="L-BFGS-B", bounds=[ALPHA_BOUNDS, BETA_BOUNDS])
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError("conditional extremes fit did not converge")
    return float(best.x[0]), float(best.x[1])


def fit_condext(w, i: int = 0, u_level: float = 0.85, u_value: float | None = None) -> CondExtFit:
    """Fit the conditional model for all coordinates given coordinate ``i``.

    ``w`` holds Laplace-margin rows. The conditioning threshold is the
    empirical ``u_level`` quantile of column ``i`` unless ``u_value`` is
    given directly.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise DomainError("need a 2-d array of Laplace-margin rows")
    d = w.shape[1]
    if not 0 <= i < d:
        raise DomainError(f"conditioning index {i} out of range for {d} columns")
    u = float(np.quantile(w[:, i], u_level)) if u_value is None else float(u_value)
    if u <= 0:
        raise DomainError("conditioning threshold must be positive on the Laplace scale")
    rows = w[w[:, i] > u]
    if rows.shape[0] < 100:
        warnings.warn(f"only {rows.shape[0]} conditioning exceedances", SparseDataWarning, stacklevel=2)
    if rows.shape[0] < 3:
        raise FitError("too few conditioning exceedances")
    others = tuple(j for j in range(d) if j != i)
    wi = rows[:, i]
    alpha, beta = np.zeros(len(others)), np.zeros(len(others))
    for k, j in enumerate(others):
        alpha[k], beta[k] = _fit_pair(wi, rows[:, j])
    on_edge = np.isclose(np.abs(alpha), 1.0, atol=1e-6) & (~np.isclose(beta, 0.0, atol=1e-6))
    on_edge |= np.isclose(beta, BETA_BOUNDS[1], atol=1e-6) | np.isclose(beta, BETA_BOUNDS[0], atol=1e-6)
    if on_edge.any():
        warnings.warn(f"parameters at the box boundary for columns {[others[k] for k in np.flatnonzero(on_edge)]}", BoundaryWarning, stacklevel=2)
    z = (rows[:, others] - alpha * wi[:, None]) / wi[:, None] ** beta
    return CondExtFit(i, others, alpha, beta, u_level, u, z, z.mean(axis=0), z.std(axis=0), w.shape[0])


def simulate_conditional(fit: CondExtFit, n_sim: int, level: float | None = None, rng=None) -> np.ndarray:
    """Draw rows given ``W_i > level`` (default: the fitting threshold).

    Columns come back in the original order.
    """
    level = fit.u_value if level is None else float(level)
    if level < fit.u_value - 1e-12:
        raise DomainError(f"simulation level {level} lies below the fitting threshold {fit.u_value}")
    if fit.n_exceed == 0:
        raise FitError("fit holds no residual rows")
    rng = np.random.default_rng(rng)
    wi = level + rng.exponential(size=n_sim)
    z = fit.residuals[rng.integers(0, fit.n_exceed, size=n_sim)]
    out = np.empty((n_sim, fit.dim))
    out[:, fit.index] = wi
    out[:, list(fit.others)] = fit.alpha * wi[:, None] + wi[:, None] ** fit.beta * z
    return out


def group_exceedance_probability(fit: CondExtFit, levels, n_sim: int = 10**6, seed: int = 0, batch: int = 10**6) -> float:
    """``Pr(W_j > s_j for all j)`` for a group, by conditional simulation."""
    levels = np.asarray(levels, dtype=float)
    if levels.size != fit.dim:
        raise DomainError(f"need {fit.dim} levels, got {levels.size}")
    s_i = levels[fit.index]
    if s_i < fit.u_value:
        raise PreconditionError(f"level {s_i:.4g} at conditioning site {fit.index} lies below its threshold {fit.u_value:.4g}")
    p_cond = laplace_sf(s_i)
    if fit.dim == 1:
        return float(p_cond)
    rng = np.random.default_rng(seed)
    others = list(fit.others)
    hits, done = 0, 0
    while done < n_sim:
        m = min(batch, n_sim - done)
        sims = simulate_conditional(fit, m, s_i, rng)
        hits += int(np.all(sims[:, others] > levels[others], axis=1).sum())
        done += m
    return float(p_cond * hits / n_sim)


def single_site_fit(w, u_level: float = 0.85) -> CondExtFit:
    w = np.asarray(w, dtype=float).reshape(-1, 1)
    u = float(np.quantile(w[:, 0], u_level))
    return CondExtFit(0, (), np.zeros(0), np.zeros(0), u_level, u, np.zeros((int((w > u).sum()), 0)), np.zeros(0), np.zeros(0), w.shape[0])


def factorized_probability(groups) -> float:
    """Product of per-group probabilities (groups treated as independent)."""
    groups = [float(p) for p in groups]
    if not groups:
        raise ValueError("need at least one group probability")
    for k, p in enumerate(groups):
        log.info("group %d factor %.6e", k + 1, p)
    return float(np.prod(groups))


def challenge_levels(days_per_year: int = 300, days_per_month: int = 25) -> tuple[float, float]:
    """Laplace levels exceeded on average once a year and once a month."""
    return -np.log(2.0 / days_per_year), -np.log(2.0 / days_per_month)


def condition_sweep(w, levels, quantiles=(0.7, 0.75, 0.8, 0.85, 0.9, 0.95), i: int = 0, n_sim: int = 10**6, seed: int = 0) -> dict:
    """Group probability for each conditioning quantile."""
    return {q: group_exceedance_probability(fit_condext(w, i, q), levels, n_sim, seed) for q in quantiles}
