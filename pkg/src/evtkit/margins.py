"""Probability integral transforms between standard marginal scales.

Supported scales are ``uniform``, ``exponential``, ``gumbel`` and
``laplace``. Every transform routes through the uniform scale, with uniform
values clamped to ``[CLAMP, 1 - CLAMP]`` before an inverse CDF is applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import rankdata

from evtkit.errors import DomainError
from evtkit.gpd import GpdParams, gpd_survival

CLAMP = 1e-12


class MarginScale(str, Enum):
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    GUMBEL = "gumbel"
    LAPLACE = "laplace"


def _to_uniform(x: np.ndarray, scale: MarginScale) -> np.ndarray:
    # Upper-tail forms keep precision for large values on the heavy side.
    if scale is MarginScale.UNIFORM:
        if np.any((x <= 0) | (x >= 1)):
            raise DomainError("uniform values must lie strictly inside (0, 1)")
        return x
    if scale is MarginScale.EXPONENTIAL:
        if np.any(x < 0):
            raise DomainError("exponential values must be non-negative")
        return -np.expm1(-x)
    if scale is MarginScale.GUMBEL:
        return np.exp(-np.exp(-x))
    if scale is MarginScale.LAPLACE:
        return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(x, 0.0)))
    raise DomainError(f"unknown margin scale {scale!r}")


def _survival(x: np.ndarray, scale: MarginScale) -> np.ndarray:
    """1 - F(x) computed without cancellation in the upper tail."""
    if scale is MarginScale.UNIFORM:
        return 1.0 - x
    if scale is MarginScale.EXPONENTIAL:
        return np.exp(-x)
    if scale is MarginScale.GUMBEL:
        return -np.expm1(-np.exp(-x))
    if scale is MarginScale.LAPLACE:
        return np.where(x < 0, 1.0 - 0.5 * np.exp(np.minimum(x, 0.0)), 0.5 * np.exp(-np.maximum(x, 0.0)))
    raise DomainError(f"unknown margin scale {scale!r}")


def _from_uniform(u: np.ndarray, surv: np.ndarray, scale: MarginScale) -> np.ndarray:
    u = np.clip(u, CLAMP, 1.0 - CLAMP)
    surv = np.clip(surv, CLAMP, 1.0 - CLAMP)
    if scale is MarginScale.UNIFORM:
        return u
    if scale is MarginScale.EXPONENTIAL:
        return np.where(u < 0.5, -np.log1p(-u), -np.log(surv))
    if scale is MarginScale.GUMBEL:
        return np.where(u < 0.5, -np.log(-np.log(u)), -np.log(-np.log1p(-surv)))
    if scale is MarginScale.LAPLACE:
        return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * surv))
    raise DomainError(f"unknown margin scale {scale!r}")


def transform(value, source, target):
    """Map ``value`` from the ``source`` margin to the ``target`` margin.

    Computes ``F_target^{-1}(F_source(value))``. Works elementwise on arrays
    and returns a float for scalar input.

    Examples
    --------
    >>> round(transform(7.0, "gumbel", "exponential"), 4)
    7.0005
    >>> transform(0.5, "uniform", "laplace")
    0.0
    """
    source = MarginScale(source)
    target = MarginScale(target)
    x = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("transform requires finite input")
    u = _to_uniform(x, source)
    surv = _survival(x, source)
    out = _from_uniform(u, surv, target)
    return float(out) if out.ndim == 0 else out


def empirical_cdf(sample, x):
    """Rank-based CDF estimate with the ``rank / (n + 1)`` convention.

    Ties (between ``x`` and sample points) count with average rank, so a
    value equal to a sample point gets that point's mid-rank.
    """
    sample = np.asarray(sample, dtype=float).ravel()
    if sample.size == 0:
        raise ValueError("empirical_cdf needs a non-empty sample")
    x = np.asarray(x, dtype=float)
    srt = np.sort(sample)
    below = np.searchsorted(srt, x, side="left")
    at_or_below = np.searchsorted(srt, x, side="right")
    ties = at_or_below - below
    rank = below + np.where(ties > 0, (ties + 1) / 2.0, 0.0)
    out = rank / (sample.size + 1.0)
    return float(out) if out.ndim == 0 else out


def to_uniform_ranks(data) -> np.ndarray:
    """Columnwise rank transform to ``(0, 1)`` with average ranks for ties."""
    data = np.asarray(data, dtype=float)
    ranks = rankdata(data, axis=0, method="average")
    return ranks / (data.shape[0] + 1.0)


@dataclass(frozen=True)
class SemiParametricCdf:
    """Empirical CDF below ``threshold`` glued to a GPD tail above it.

    The tail fraction is the empirical exceedance fraction of the threshold,
    so the CDF is continuous at the junction.
    """

    sample: np.ndarray
    threshold: float
    tail: GpdParams
    tail_fraction: float

    def __post_init__(self):
        if not 0.0 < self.tail_fraction < 1.0:
            raise DomainError("tail fraction must lie in (0, 1)")
        object.__setattr__(self, "sample", np.sort(np.asarray(self.sample, dtype=float)))

    @classmethod
    def fit(cls, sample, threshold: float, min_excesses: int = 10) -> "SemiParametricCdf":
        from evtkit.gpd import gpd_fit_mle

        sample = np.asarray(sample, dtype=float)
        exc = sample[sample > threshold] - threshold
        res = gpd_fit_mle(exc, min_excesses=min_excesses)
        return cls(sample, float(threshold), res.params, exc.size / sample.size)

    def __call__(self, x):
        return semiparametric_cdf(self, x)


def semiparametric_cdf(cdf: SemiParametricCdf, x):
    """Evaluate a :class:`SemiParametricCdf`.

    Below the threshold the empirical CDF (``i / (n + 1)``) is rescaled so
    that it reaches ``1 - tail_fraction`` at the threshold; above, the value
    is ``1 - tail_fraction * S_gpd(x - threshold)``.
    """
    x = np.asarray(x, dtype=float)
    body_mass = 1.0 - cdf.tail_fraction
    body = cdf.sample[cdf.sample <= cdf.threshold]
    if body.size:
        # rank/(m+1) would stop short of body_mass at the threshold, so use rank/m.
        below = np.searchsorted(body, np.minimum(x, cdf.threshold), side="right") / body.size
    else:
        below = np.zeros_like(x)
    lower = body_mass * below
    excess = np.maximum(x - cdf.threshold, 0.0)
    upper = 1.0 - cdf.tail_fraction * gpd_survival(excess, cdf.tail)
    out = np.where(x <= cdf.threshold, lower, upper)
    return float(out) if out.ndim == 0 else out
