"""Stationary generalised Pareto distribution: functions and maximum likelihood."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from evtkit.errors import DegenerateDataError, DomainError, MinimumSampleError

XI_ZERO = 1e-8


@dataclass(frozen=True)
class GpdParams:
    scale: float
    shape: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"GPD scale must be positive, got {self.scale}")

    @property
    def upper_endpoint(self) -> float:
        return -self.scale / self.shape if self.shape < 0 else np.inf


def sf(y, scale, shape):
    """Vectorised GPD survival for array-valued ``scale``; no input checks."""
    y = np.asarray(y, dtype=float)
    z = y / scale
    if abs(shape) < XI_ZERO:
        return np.exp(-z)
    w = 1.0 + shape * z
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(-np.log1p(shape * z) / shape)
    return np.where(w > 0, out, 0.0)


def ppf(p, scale, shape):
    """Vectorised GPD quantile of the excess distribution; no input checks."""
    p = np.asarray(p, dtype=float)
    if abs(shape) < XI_ZERO:
        return -scale * np.log1p(-p)
    return scale * np.expm1(-shape * np.log1p(-p)) / shape


def gpd_survival(y, params: GpdParams):
    """Pr(excess > y) = (1 + xi y / sigma)_+^(-1/xi), exp(-y/sigma) near xi = 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("GPD excesses must be non-negative")
    out = sf(y, params.scale, params.shape)
    return float(out) if out.ndim == 0 else out


def gpd_cdf(y, params: GpdParams):
    return 1.0 - gpd_survival(y, params)


def gpd_quantile(p, params: GpdParams):
    """Inverse of the excess CDF, ``p`` in ``[0, 1)``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p >= 1)):
        raise DomainError("GPD quantile needs p in [0, 1)")
    out = ppf(p, params.scale, params.shape)
    return float(out) if out.ndim == 0 else out


def gpd_logpdf(y, params: GpdParams):
    y = np.asarray(y, dtype=float)
    sigma, xi = params.scale, params.shape
    if abs(xi) < XI_ZERO:
        return -np.log(sigma) - y / sigma
    w = 1.0 + xi * y / sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.log(sigma) - (1.0 + 1.0 / xi) * np.log1p(xi * y / sigma)
    return np.where((w > 0) & (y >= 0), out, -np.inf)


def gpd_loglik(excesses, params: GpdParams) -> float:
    return float(np.sum(gpd_logpdf(excesses, params)))


def gpd_rvs(size, params: GpdParams, rng: np.random.Generator):
    return ppf(rng.random(size), params.scale, params.shape)


def pwm_estimate(excesses) -> GpdParams:
    """Probability-weighted-moment estimate (Hosking & Wallis plotting positions)."""
    x = np.sort(np.asarray(excesses, dtype=float))
    n = x.size
    a0 = x.mean()
    p = (np.arange(1, n + 1) - 0.35) / n
    a1 = np.mean((1.0 - p) * x)
    denom = a0 - 2.0 * a1
    if denom <= 0:
        return GpdParams(max(a0, 1e-12), 0.0)
    scale = 2.0 * a0 * a1 / denom
    shape = 2.0 - a0 / denom
    return GpdParams(max(scale, 1e-12), shape)


@dataclass(frozen=True)
class GpdMle:
    """Maximum-likelihood fit of a stationary GPD to threshold excesses."""

    params: GpdParams
    loglik: float
    se: tuple[float, float]
    cov: np.ndarray
    n: int
    n_iter: int


def gpd_fit_mle(excesses, min_excesses: int = 10, shape_fixed: float | None = None) -> GpdMle:
    """Fit a GPD by maximum likelihood on ``(log sigma, xi)``.

    The optimiser is a damped Newton method with analytic derivatives,
    started from the probability-weighted-moment estimate. The shape is
    confined to ``(-1, 2]``. ``se`` holds standard errors of ``(sigma, xi)``
    from the inverse observed information (delta method for sigma).
    """
    from evtkit._newton import fit_penalized_gpd

    y = np.asarray(excesses, dtype=float).ravel()
    if y.size < min_excesses:
        raise MinimumSampleError(f"need at least {min_excesses} excesses, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise DomainError("excesses must be finite")
    if np.any(y < 0):
        raise DomainError("excesses must be non-negative")
    if np.ptp(y) == 0:
        raise DegenerateDataError("all excesses are equal; GPD parameters are not identifiable")

    start = pwm_estimate(y)
    X = np.ones((y.size, 1))
    S = np.zeros((1, 1))
    res = fit_penalized_gpd(X, y, S, [np.log(start.scale)], start.shape, xi_fixed=shape_fixed)
    sigma = float(np.exp(res.beta[0]))
    try:
        cov_eta = np.linalg.inv(res.info)
    except np.linalg.LinAlgError:
        cov_eta = np.full(res.info.shape, np.nan)
    # Jacobian from (log sigma, xi) to (sigma, xi).
    J = np.diag([sigma, 1.0][: cov_eta.shape[0]])
    cov = J @ cov_eta @ J.T
    se_sigma = float(np.sqrt(cov[0, 0]))
    se_xi = float(np.sqrt(cov[1, 1])) if cov.shape[0] > 1 else 0.0
    return GpdMle(
        params=GpdParams(sigma, float(res.xi)),
        loglik=-float(res.nll),
        se=(se_sigma, se_xi),
        cov=cov,
        n=y.size,
        n_iter=res.n_iter,
    )


def gpd_crps(y, scale, shape):
    """Closed-form CRPS of a GPD(scale, shape) forecast for excess ``y``.

    Valid for ``shape < 1``; ``scale`` and ``y`` may be arrays.
    """
    if shape >= 1:
        raise DomainError("GPD CRPS is infinite for shape >= 1")
    y = np.asarray(y, dtype=float)
    scale = np.asarray(scale, dtype=float)
    pos = np.maximum(y, 0.0)
    surv = sf(pos, scale, shape)
    one = 1.0 - shape
    out = y - scale / one + 2.0 * surv * (scale + shape * pos) / one - scale / (one * (2.0 - shape))
    # Below zero the forecast puts no mass: CRPS grows linearly.
    out = np.where(y < 0, -y + scale / one - scale / (one * (2.0 - shape)), out)
    return float(out) if out.ndim == 0 else out
