"""Synthetic data with known truth for every estimator in the package.

Each generator is deterministic given its seed and returns a truth record
alongside the data.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import ndtr

from evtkit import gpd
from evtkit.condex import laplace_quantile
from evtkit.reference import groups_zero_based
from evtkit.series import Series, add_calendar


def _from_dict(cls, config):
    if config is None:
        return cls()
    if isinstance(config, cls):
        return config
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(config) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**config)


# ---------------------------------------------------------------------------
# Univariate


@dataclass
class UnivariateConfig:
    """Response with an empirical-looking body and an exact GPD tail.

    Above the per-season threshold ``thresholds[s]`` (reached with
    probability ``rates[s]``) excesses are GPD with
    ``log sigma = scale_intercept + scale_season * 1(season == 1)
    + scale_amplitude * sin(2 pi x) + scale_wind * wind`` and shape ``xi``.
    Below it ``y = v * Beta(body_a, body_b)``; with ``body_b <= 1`` the body
    density stays positive up to ``v``, so the threshold is identifiable.
    """

    n: int = 21000
    days_per_year: int = 300
    days_per_month: int = 25
    thresholds: dict = field(default_factory=lambda: {1: 20.0, 2: 30.0})
    rates: dict = field(default_factory=lambda: {1: 0.1, 2: 0.1})
    scale_intercept: float = 1.0
    scale_season: float = 0.0
    scale_amplitude: float = 0.0
    scale_wind: float = 0.0
    xi: float = 0.05
    wind_phi: float = 0.9
    body_a: float = 4.0
    body_b: float = 1.0
    missing: float = 0.0

    def __post_init__(self):
        self.thresholds = {int(k): float(v) for k, v in self.thresholds.items()}
        self.rates = {int(k): float(v) for k, v in self.rates.items()}


def true_log_scale(cfg: UnivariateConfig, frame: pd.DataFrame) -> np.ndarray:
    return (
        cfg.scale_intercept
        + cfg.scale_season * (frame["season"].to_numpy() == 1)
        + cfg.scale_amplitude * np.sin(2 * np.pi * frame["x"].to_numpy(dtype=float))
        + cfg.scale_wind * frame["wind"].to_numpy(dtype=float)
    )


def true_conditional_quantile(cfg: UnivariateConfig, frame: pd.DataFrame, p: float) -> np.ndarray:
    """Exact conditional ``p``-quantile in the tail (``p >= 1 - rate``)."""
    season = frame["season"].to_numpy()
    v = np.array([cfg.thresholds[int(s)] for s in season])
    lam = np.array([cfg.rates[int(s)] for s in season])
    sigma = np.exp(true_log_scale(cfg, frame))
    return v + gpd.ppf(1.0 - (1.0 - p) / lam, sigma, cfg.xi)


def gen_univariate(config=None, seed: int = 0) -> Series:
    cfg = _from_dict(UnivariateConfig, config)
    rng = np.random.default_rng(seed)
    n = cfg.n
    frame = add_calendar(pd.DataFrame(index=np.arange(n)), cfg.days_per_year, cfg.days_per_month)
    x = rng.random(n)
    eps = rng.standard_normal(n)
    wind = np.empty(n)
    wind[0] = eps[0]
    scale = np.sqrt(1.0 - cfg.wind_phi**2)
    for t in range(1, n):
        wind[t] = cfg.wind_phi * wind[t - 1] + scale * eps[t]
    frame["x"] = x
    frame["wind"] = wind
    season = frame["season"].to_numpy()
    v = np.array([cfg.thresholds[int(s)] for s in season])
    lam = np.array([cfg.rates[int(s)] for s in season])
    sigma = np.exp(true_log_scale(cfg, frame))
    tail = rng.random(n) < lam
    excess = gpd.ppf(rng.random(n), sigma, cfg.xi)
    body = v * rng.beta(cfg.body_a, cfg.body_b, n)
    frame["y"] = np.where(tail, v + excess, body)
    if cfg.missing > 0:
        for col in ("x", "wind"):
            frame.loc[rng.random(n) < cfg.missing, col] = np.nan
    truth = dataclasses.asdict(cfg)
    truth["kind"] = "univariate"
    return Series(frame, "y", {"truth": truth, "seed": seed})


# ---------------------------------------------------------------------------
# Trivariate


@dataclass
class TrivariateConfig:
    copula: str = "gaussian"  # gaussian | logistic | independent | comonotone
    rho: float = 0.5
    rho_slope: float = 0.0  # gaussian: rho_t = rho + rho_slope * atmosphere_t, clipped
    theta: float = 0.5  # logistic dependence (1 = independence)
    n: int = 21000
    days_per_year: int = 300
    days_per_month: int = 25


def _positive_stable(alpha, size, rng):
    # Chambers-Mallows-Stuck draw with Laplace transform exp(-s^alpha).
    u = rng.uniform(0.0, np.pi, size)
    w = rng.exponential(size=size)
    return (np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)) * (np.sin((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)


def trivariate_truth(cfg: TrivariateConfig) -> dict:
    third = 1.0 / 3.0
    if cfg.copula == "independent":
        return {"chi": 0.0, "eta": 0.5, "lambda_center": 1.0}
    if cfg.copula == "comonotone":
        return {"chi": 1.0, "eta": 1.0, "lambda_center": third}
    if cfg.copula == "logistic":
        return {"chi": 2.0 - 2.0**cfg.theta, "eta": 1.0, "lambda_center": third}
    # Equicorrelated Gaussian: 1' R^-1 1 = 3 / (1 + 2 rho) for the triple.
    return {"chi": 0.0, "eta": (1.0 + cfg.rho) / 2.0, "lambda_center": 1.0 / (1.0 + 2.0 * cfg.rho)}


def gen_trivariate(config=None, seed: int = 0) -> tuple[np.ndarray, pd.DataFrame, dict]:
    """Exponential-margin rows plus season/month/atmosphere covariates.

    Seasons are the two halves of each year; atmosphere is constant within
    each month. Returns ``(z, covariates, truth)``.
    """
    cfg = _from_dict(TrivariateConfig, config)
    rng = np.random.default_rng(seed)
    n = cfg.n
    cov = add_calendar(pd.DataFrame(index=np.arange(n)), cfg.days_per_year, cfg.days_per_month)
    month_id = (np.arange(n) // cfg.days_per_month)
    levels = rng.standard_normal(month_id.max() + 1)
    cov["atmosphere"] = levels[month_id]

    if cfg.copula == "independent":
        z = rng.exponential(size=(n, 3))
    elif cfg.copula == "comonotone":
        z = np.repeat(rng.exponential(size=(n, 1)), 3, axis=1)
    elif cfg.copula == "logistic":
        s = _positive_stable(cfg.theta, n, rng)
        e = rng.exponential(size=(n, 3))
        # U = exp(-(E/S)^theta) is uniform; Z = -log(1 - U).
        log_u = -((e / s[:, None]) ** cfg.theta)
        z = -np.log(-np.expm1(log_u))
    elif cfg.copula == "gaussian":
        rho = np.clip(cfg.rho + cfg.rho_slope * cov["atmosphere"].to_numpy(), 0.0, 0.95)[:, None]
        common = rng.standard_normal((n, 1))
        g = np.sqrt(rho) * common + np.sqrt(1.0 - rho) * rng.standard_normal((n, 3))
        z = -np.log(ndtr(-g))
    else:
        raise ValueError(f"unknown copula {cfg.copula!r}")
    truth = dict(dataclasses.asdict(cfg), **trivariate_truth(cfg), kind="trivariate", seed=seed)
    return z, cov, truth


# ---------------------------------------------------------------------------
# Grouped 50-dimensional data


@dataclass
class GroupedConfig:
    """Independent groups; within a group either an equicorrelated Gaussian
    copula (``mode="gaussian"``) or a planted conditional-extremes structure
    (``mode="ht"``, driven by the group's first variable)."""

    groups: list | None = None  # 0-based index lists; default is the 5-group fixture
    mode: str = "gaussian"
    rho: float = 0.7
    alpha: float = 0.5
    beta: float = 0.2
    residual_mean: float = 0.0
    residual_sd: float = 0.5
    n: int = 10000


def _ht_block(d, n, cfg, rng):
    w = laplace_quantile(rng.random((n, d)))
    w1 = w[:, 0]
    pos = w1 > 0
    z = rng.normal(cfg.residual_mean, cfg.residual_sd, size=(int(pos.sum()), d - 1))
    w[pos, 1:] = cfg.alpha * w1[pos, None] + w1[pos, None] ** cfg.beta * z
    return w


def gen_grouped50(config=None, seed: int = 0) -> tuple[np.ndarray, dict]:
    """Laplace-margin rows (Gaussian mode) with a planted group partition."""
    cfg = _from_dict(GroupedConfig, config)
    groups = [list(g) for g in (cfg.groups if cfg.groups is not None else groups_zero_based())]
    d = max(max(g) for g in groups) + 1
    rng = np.random.default_rng(seed)
    w = np.empty((cfg.n, d))
    for g in groups:
        if cfg.mode == "gaussian":
            common = rng.standard_normal((cfg.n, 1))
            x = np.sqrt(cfg.rho) * common + np.sqrt(1.0 - cfg.rho) * rng.standard_normal((cfg.n, len(g)))
            u = ndtr(x)
            w[:, g] = np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * ndtr(-x)))
        elif cfg.mode == "ht":
            w[:, g] = _ht_block(len(g), cfg.n, cfg, rng)
        else:
            raise ValueError(f"unknown mode {cfg.mode!r}")
    truth = dict(dataclasses.asdict(cfg), groups=groups, kind="grouped", seed=seed)
    if cfg.mode == "gaussian":
        truth.update(alpha=cfg.rho**2, beta=0.5)
    return w, truth


def gen_ht_pair(n: int = 10**5, alpha: float = 0.5, beta: float = 0.2, d: int = 2, seed: int = 0, **kw) -> np.ndarray:
    """A single group with a planted conditional-extremes structure."""
    cfg = GroupedConfig(groups=[list(range(d))], mode="ht", alpha=alpha, beta=beta, n=n, **kw)
    return gen_grouped50(cfg, seed)[0]
