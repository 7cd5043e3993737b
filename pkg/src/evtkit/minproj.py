"""Joint tail probabilities through a covariate-dependent min-projection model.

For exponential-margin rows ``Z`` and a simplex direction ``w`` the
min-projection ``T = min_i Z_i / w_i`` turns the joint survivor event
``{Z_i > r w_i for all i}`` into ``{T > r}``. Its tail above a
quantile-regression threshold is modelled as a GPD whose scale varies with
covariates; probabilities follow by averaging over the observed covariate
rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from evtkit import gpd
from evtkit.errors import DomainError, PreconditionError
from evtkit.evgam import GpdFit, GpdSpec, exponential_qq, fit_nonstationary_gpd
from evtkit.margins import transform
from evtkit.series import Series

TAU_GRID = tuple(np.round(np.arange(0.80, 0.995, 0.01), 2))
GUMBEL_MEDIAN = -np.log(np.log(2.0))


@dataclass(frozen=True)
class SimplexRay:
    weights: tuple
    levels: tuple
    radius: float
    targets: tuple = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise DomainError("ray weights must lie on the simplex")

    @classmethod
    def from_levels(cls, levels, targets=()) -> "SimplexRay":
        levels = np.asarray(levels, dtype=float)
        r = float(levels.sum())
        return cls(tuple(levels / r), tuple(float(x) for x in levels), r, tuple(targets))

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "levels": list(self.levels), "radius": self.radius, "targets": list(self.targets)}


@dataclass
class JointProbEstimate:
    """A joint exceedance probability with its method, interval and settings."""

    probability: float
    method: str
    ci: tuple | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "probability": self.probability,
            "method": self.method,
            "ci": None if self.ci is None else list(self.ci),
            "config": self.config,
        }


def min_projection(z, weights) -> np.ndarray:
    """``min_i z_i / w_i`` over coordinates with positive weight."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    w = np.asarray(weights, dtype=float)
    if z.shape[1] != w.size:
        raise DomainError(f"rows have {z.shape[1]} coordinates but the ray has {w.size}")
    if not np.all(np.isfinite(z)):
        raise DomainError("min-projection needs finite input")
    keep = w > 0
    return np.min(z[:, keep] / w[keep], axis=1)


def negate_third_margin(z3):
    """``-log(1 - exp(-z))``: maps an exponential variable to one whose
    exceedances correspond to small values of the original.
    """
    z3 = np.asarray(z3, dtype=float)
    if np.any(z3 <= 0):
        raise DomainError("negation needs strictly positive exponential values")
    # Pick the branch that avoids taking the log of a number near 1.
    with np.errstate(over="ignore"):
        out = np.where(z3 > np.log(2.0), -np.log1p(-np.exp(-z3)), -np.log(-np.expm1(-z3)))
    return float(out) if out.ndim == 0 else out


def build_challenge_rays(y: float = 6.0, v: float = 7.0, m: float = GUMBEL_MEDIAN) -> tuple[SimplexRay, SimplexRay]:
    """Rays for ``{Y_i > y for all i}`` and ``{Y_1 > v, Y_2 > v, Y_3 < m}``.

    Inputs are on the Gumbel scale. The third coordinate of the second
    event is negated so both events become joint exceedances.
    """
    ey = transform(y, "gumbel", "exponential")
    ray1 = SimplexRay.from_levels([ey, ey, ey], targets=(y, y, y))
    ev = transform(v, "gumbel", "exponential")
    em = negate_third_margin(transform(m, "gumbel", "exponential"))
    ray2 = SimplexRay.from_levels([ev, ev, em], targets=(v, v, m))
    return ray1, ray2


def negated_rows(z, negate=(2,)) -> np.ndarray:
    z = np.array(z, dtype=float, copy=True)
    for j in negate:
        z[:, j] = negate_third_margin(z[:, j])
    return z


@dataclass
class MinProjFit:
    ray: SimplexRay
    tau: float
    fit: GpdFit
    frame: pd.DataFrame = field(repr=False)

    @property
    def shape(self) -> float:
        return self.fit.xi

    @property
    def shape_ci(self) -> tuple[float, float]:
        se = float(np.sqrt(self.fit.cov[-1, -1])) if self.fit.spec.shape_fixed is None else 0.0
        return (self.fit.xi - 1.96 * se, self.fit.xi + 1.96 * se)

    def exceedance_fraction(self) -> float:
        t = self.frame["t"].to_numpy()
        return float(np.mean(t > self.fit.threshold_at(self.frame, warn=False)))


def fit_minproj(
    z,
    covariates: pd.DataFrame | None,
    ray,
    tau: float,
    threshold: str = "threshold ~ 1 + ind(season==1) + crs(atmosphere, B=10)",
    scale: str = "scale ~ 1 + crs(atmosphere, B=10)",
    shape_fixed: float | None = None,
    smoothing=None,
    min_exceedances: int = 50,
) -> MinProjFit:
    """Two-stage fit: quantile-regression threshold for ``T``, then a GPD GAM."""
    if not 0.0 < tau < 1.0:
        raise DomainError("tau must lie in (0, 1)")
    if not isinstance(ray, SimplexRay):
        w = np.asarray(ray, dtype=float)
        ray = SimplexRay(tuple(w), tuple(w), 1.0)
    t = min_projection(z, ray.weights)
    frame = pd.DataFrame({"t": t}) if covariates is None else covariates.reset_index(drop=True).assign(t=t)
    spec = GpdSpec(
        scale=scale,
        threshold=threshold,
        tau=tau,
        rate_by=None,
        response="t",
        shape_fixed=shape_fixed,
        smoothing=smoothing,
        min_exceedances=min_exceedances,
    )
    fit = fit_nonstationary_gpd(spec, Series(frame, "t"))
    return MinProjFit(ray, tau, fit, frame)


def minproj_qq(mp: MinProjFit, n_boot: int = 200, seed: int = 0, level: float = 0.95) -> pd.DataFrame:
    """Exponential QQ table of the transformed exceedances with a tolerance band.

    The band holds pointwise ``level`` intervals of sorted Exp(1) samples of
    the same size.
    """
    frame = mp.frame
    y = frame["t"].to_numpy()
    v = mp.fit.threshold_at(frame, warn=False)
    keep = y > v
    sub = frame.loc[keep]
    e = -np.log(gpd.sf(y[keep] - v[keep], mp.fit.scale_at(sub, warn=False), mp.fit.xi))
    table = exponential_qq(e)
    rng = np.random.default_rng(seed)
    sims = np.sort(rng.exponential(size=(n_boot, e.size)), axis=1)
    a = (1.0 - level) / 2.0
    table["lower"] = np.quantile(sims, a, axis=0)
    table["upper"] = np.quantile(sims, 1.0 - a, axis=0)
    return table


def qq_deviation(table: pd.DataFrame) -> float:
    return float(np.mean(np.abs(table["empirical"] - table["theoretical"])))


def joint_survivor_probability(mp: MinProjFit, radius: float | None = None, covariates: pd.DataFrame | None = None) -> float:
    """``(1 - tau) / n * sum_t S_gpd(r - v(x_t); sigma(x_t), xi)``.

    Averages over the training covariate rows unless ``covariates`` is
    given. Every threshold must lie below the radius.
    """
    r = mp.ray.radius if radius is None else float(radius)
    frame = mp.frame if covariates is None else covariates.reset_index(drop=True)
    v = mp.fit.threshold_at(frame, warn=False)
    bad = np.flatnonzero(v >= r)
    if bad.size:
        shown = ", ".join(str(int(t)) for t in bad[:10])
        raise PreconditionError(f"radius {r:.6g} does not exceed the threshold at {bad.size} row(s): {shown}")
    sigma = mp.fit.scale_at(frame, warn=False)
    return float((1.0 - mp.tau) * np.mean(gpd.sf(r - v, sigma, mp.fit.xi)))


def tau_sweep(z, covariates, ray, taus=TAU_GRID, **kwargs) -> tuple[pd.DataFrame, float]:
    """Fit over a grid of threshold levels; pick the best QQ agreement.

    Returns a table (tau, deviation, shape, probability) and the chosen tau,
    the one with the smallest mean absolute QQ deviation.
    """
    rows = []
    for tau in taus:
        try:
            mp = fit_minproj(z, covariates, ray, tau, **kwargs)
        except Exception as exc:  # noqa: BLE001 - any failed level is just skipped
            warnings.warn(f"tau={tau} skipped: {exc}", stacklevel=2)
            continue
        dev = qq_deviation(minproj_qq(mp, n_boot=1))
        try:
            p = joint_survivor_probability(mp)
        except PreconditionError:
            p = float("nan")
        rows.append({"tau": float(tau), "deviation": dev, "shape": mp.shape, "probability": p})
    table = pd.DataFrame(rows)
    if table.empty:
        raise DomainError("no threshold level could be fitted")
    return table, float(table.loc[table.deviation.idxmin(), "tau"])
