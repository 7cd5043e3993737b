"""Marginal tail of the response by averaging the conditional model over covariates."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from evtkit import gpd
from evtkit.errors import DomainError, NumericError
from evtkit.evgam import GpdFit
from evtkit.series import Series

# Daily exceedance probability of a once-in-200-years event on a 300-day calendar.
CHALLENGE_EXCEEDANCE = 1.0 / (300 * 200)


class MarginalTail:
    """Covariate-averaged tail CDF ``(1/n) sum_t F(y | x_t)`` above all thresholds.

    Threshold, rate and scale are evaluated once for the ``n`` retained
    covariate rows, so repeated CDF evaluations are cheap.
    """

    def __init__(self, fit: GpdFit, data):
        series = data if isinstance(data, Series) else Series(data, fit.spec.response)
        cols = [c for c in fit.spec.columns if c != fit.spec.response]
        series, self.drop_fraction = series.complete_cases(cols)
        frame = series.frame
        self.v = fit.threshold_at(frame)
        self.lam = fit.rate_at(frame)
        self.sigma = fit.scale_at(frame)
        self.xi = fit.xi
        self.n = len(frame)

    @property
    def floor(self) -> float:
        return float(self.v.max())

    def cdf(self, y: float) -> float:
        if y < self.floor:
            raise DomainError(
                f"y={y:.6g} lies below the threshold for some covariate rows (max {self.floor:.6g}); "
                "the covariate average is only defined in the tail"
            )
        return float(1.0 - np.mean(self.lam * gpd.sf(y - self.v, self.sigma, self.xi)))

    def quantile(self, p: float, rtol: float = 1e-10) -> float:
        if not 0.0 < p < 1.0:
            raise DomainError("p must lie in (0, 1)")
        lo = self.floor
        if self.cdf(lo) > p:
            raise DomainError(f"p={p} is below the tail region (F at the top threshold is {self.cdf(lo):.6g})")
        hi = lo + 1.0
        for _ in range(200):
            if self.cdf(hi) >= p:
                break
            hi = lo + 2.0 * (hi - lo)
        else:
            raise NumericError(f"could not bracket the {p}-quantile; last bracket [{lo:.6g}, {hi:.6g}]")
        return float(brentq(lambda q: self.cdf(q) - p, lo, hi, xtol=1e-12, rtol=rtol, maxiter=500))


def marginal_cdf(fit: GpdFit, data, y: float) -> float:
    """Marginal ``Pr(Y <= y)`` as the average conditional CDF over covariate rows."""
    return MarginalTail(fit, data).cdf(y)


def marginal_quantile(fit: GpdFit, data, p: float) -> float:
    """Root of ``marginal_cdf(q) = p`` in the tail region."""
    return MarginalTail(fit, data).quantile(p)
