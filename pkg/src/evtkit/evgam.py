"""Covariate-dependent GPD tail regression and quantile-regression thresholds.

A fit has four pieces: a threshold ``v(x)`` (log link, fitted by quantile
regression), an exceedance rate ``lambda(x)`` constant within strata, a scale
``sigma(x)`` (log link, penalised cubic regression splines) and a constant
shape ``xi``. Above the threshold the conditional CDF is
``1 - lambda(x) * S_gpd(y - v(x); sigma(x), xi)``; below it an empirical body
of ``y / v(x)`` ratios per stratum is rescaled to ``1 - lambda(x)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from evtkit import gpd
from evtkit._newton import fit_penalized_gpd
from evtkit.errors import DomainError, FitError, MinimumSampleError, SparseDataWarning
from evtkit.formula import Design, Formula, Indicator, Intercept
from evtkit.series import Series

DEFAULT_GRID = tuple(10.0 ** np.linspace(-4, 2, 7))


def _frame(data) -> pd.DataFrame:
    return data.frame if isinstance(data, Series) else data


def _as_formula(f, param) -> Formula:
    if isinstance(f, Formula):
        return f
    if f is None:
        return Formula(param)
    text = f if "~" in f else f"{param} ~ {f}"
    return Formula.parse(text)


# ---------------------------------------------------------------------------
# Threshold


@dataclass
class QuantileThreshold:
    """``v(x) = exp(X(x) @ coef)``, a fitted conditional ``tau``-quantile."""

    formula: Formula
    tau: float
    design: Design
    coef: np.ndarray

    def __call__(self, data, warn: bool = True) -> np.ndarray:
        return np.exp(self.design.matrix(_frame(data), warn=warn) @ self.coef)

    def scaled(self, factor: float) -> "QuantileThreshold":
        """The same threshold multiplied by ``factor`` (intercept shift)."""
        coef = self.coef.copy()
        coef[0] += np.log(factor)
        return QuantileThreshold(self.formula, self.tau, self.design, coef)


def _saturated_cells(X: np.ndarray):
    cells, inverse = np.unique(X, axis=0, return_inverse=True)
    if np.linalg.matrix_rank(cells) == X.shape[1] == cells.shape[0]:
        return cells, inverse.ravel()
    return None


def fit_threshold_quantile(formula, data, tau: float, response: str | None = None) -> QuantileThreshold:
    """Linear quantile regression of ``log y`` on the formula's basis.

    Minimises the pinball loss at level ``tau``; by equivariance of
    quantiles under monotone maps, ``exp`` of the fit estimates the
    ``tau``-quantile of ``y``. Designs made only of indicators with a
    saturated cell structure are solved exactly by per-cell empirical
    quantiles; anything else goes to a linear program.
    """
    if not 0.0 < tau < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {tau}")
    formula = _as_formula(formula, "threshold")
    frame = _frame(data)
    response = response or (data.response if isinstance(data, Series) else "y")
    y = frame[response].to_numpy(dtype=float)
    if np.any(~np.isfinite(y)):
        raise DomainError("threshold fit needs complete responses; apply case deletion first")
    if np.any(y <= 0):
        raise DomainError("log-link threshold needs strictly positive responses")
    design = Design(formula, frame, identifiable=True)
    X = design.training.X
    z = np.log(y)

    simple = all(isinstance(t, (Intercept, Indicator)) for t in formula.terms)
    cells = _saturated_cells(X) if simple else None
    if cells is not None:
        rows, inverse = cells
        target = np.array([np.quantile(z[inverse == c], tau, method="inverted_cdf") for c in range(rows.shape[0])])
        # The quantile is an observed value; lift it a hair so rounding in
        # exp(log y) never turns that observation into a zero-size excess.
        target = target + 1e-12
        coef = np.linalg.solve(rows, target)
        return QuantileThreshold(formula, tau, design, coef)

    # Dual of the pinball-loss LP: n box-constrained variables, p equalities.
    # The primal coefficients are the equality multipliers.
    res = linprog(-z, A_eq=X.T, b_eq=(1.0 - tau) * X.sum(axis=0), bounds=(0.0, 1.0), method="highs")
    if res.status != 0:
        raise FitError(f"quantile regression failed: {res.message}")
    return QuantileThreshold(formula, tau, design, -np.asarray(res.eqlin.marginals))


# ---------------------------------------------------------------------------
# GPD regression


@dataclass
class GpdSpec:
    """Everything needed to fit a non-stationary GPD model.

    ``threshold`` is a formula (fitted at ``tau``) unless a fitted
    :class:`QuantileThreshold` is passed to :func:`fit_nonstationary_gpd`.
    ``rate_by`` names the column defining rate strata (``None`` for one
    stratum). ``smoothing`` fixes the per-spline penalties; otherwise they
    are chosen by blocked ``cv_folds``-fold CV on CRPS over
    ``smoothing_grid``.
    """

    scale: Formula | str = "scale ~ 1"
    threshold: Formula | str = "threshold ~ 1 + ind(season==1)"
    tau: float = 0.9
    rate_by: str | None = "season"
    response: str = "y"
    shape_fixed: float | None = None
    smoothing: tuple | None = None
    smoothing_grid: tuple = DEFAULT_GRID
    cv_folds: int = 5
    min_exceedances: int = 50

    def __post_init__(self):
        self.scale = _as_formula(self.scale, "scale")
        self.threshold = _as_formula(self.threshold, "threshold")

    @property
    def columns(self) -> list[str]:
        cols = [self.response, *self.scale.variables, *self.threshold.variables]
        if self.rate_by:
            cols.append(self.rate_by)
        return list(dict.fromkeys(cols))

    def to_dict(self) -> dict:
        return {
            "scale": str(self.scale),
            "threshold": str(self.threshold),
            "tau": self.tau,
            "rate_by": self.rate_by,
            "response": self.response,
            "shape_fixed": self.shape_fixed,
            "smoothing": None if self.smoothing is None else list(self.smoothing),
            "smoothing_grid": list(self.smoothing_grid),
            "cv_folds": self.cv_folds,
            "min_exceedances": self.min_exceedances,
        }


@dataclass
class GpdFit:
    spec: GpdSpec
    threshold: QuantileThreshold
    design: Design
    beta: np.ndarray
    xi: float
    smoothing: np.ndarray
    nll: float
    edf: float
    cov: np.ndarray
    n: int
    n_v: int
    rates: dict
    overall_rate: float
    body: dict
    drop_fraction: float = 0.0
    cv_score: float | None = None
    meta: dict = field(default_factory=dict)

    # -- parameter functions -------------------------------------------------

    @property
    def loglik(self) -> float:
        return -self.nll

    @property
    def aic(self) -> float:
        return 2.0 * self.nll + 2.0 * self.edf

    @property
    def bic(self) -> float:
        return 2.0 * self.nll + np.log(self.n_v) * self.edf

    def threshold_at(self, data, warn: bool = True) -> np.ndarray:
        return self.threshold(data, warn=warn)

    def scale_at(self, data, warn: bool = True) -> np.ndarray:
        return np.exp(self.design.matrix(_frame(data), warn=warn) @ self.beta)

    def _strata(self, data) -> np.ndarray:
        frame = _frame(data)
        if self.spec.rate_by is None:
            return np.zeros(len(frame))
        return frame[self.spec.rate_by].to_numpy(dtype=float)

    def rate_at(self, data) -> np.ndarray:
        strata = self._strata(data)
        out = np.full(strata.size, self.overall_rate)
        for s in np.unique(strata):
            out[strata == s] = self.rates.get(float(s), self.overall_rate)
        return out

    def _body_for(self, s):
        body = self.body.get(float(s))
        return body if body is not None and body.size else self.body["__all__"]

    # -- distribution --------------------------------------------------------

    def cdf(self, y, data, warn: bool = True) -> np.ndarray:
        """Conditional CDF at ``y[t]`` given covariate row ``t`` of ``data``."""
        y = np.broadcast_to(np.asarray(y, dtype=float), (len(_frame(data)),))
        v = self.threshold_at(data, warn)
        lam = self.rate_at(data)
        sigma = self.scale_at(data, warn)
        tail = 1.0 - lam * gpd.sf(np.maximum(y - v, 0.0), sigma, self.xi)
        out = tail.copy()
        below = y < v
        if below.any():
            strata = self._strata(data)
            for s in np.unique(strata[below]):
                rows = below & (strata == s)
                ratios = self._body_for(s)
                frac = np.searchsorted(ratios, y[rows] / v[rows], side="right") / ratios.size
                out[rows] = (1.0 - lam[rows]) * frac
        return out

    def quantile(self, p, data, warn: bool = True) -> np.ndarray:
        """Conditional ``p``-quantile for every covariate row of ``data``."""
        n = len(_frame(data))
        p = np.broadcast_to(np.asarray(p, dtype=float), (n,))
        if np.any((p < 0) | (p >= 1)):
            raise DomainError("quantile level must lie in [0, 1)")
        v = self.threshold_at(data, warn)
        lam = self.rate_at(data)
        sigma = self.scale_at(data, warn)
        out = np.empty(n)
        tail = p >= 1.0 - lam
        with np.errstate(divide="ignore", invalid="ignore"):
            q_exc = gpd.ppf(np.where(tail, 1.0 - (1.0 - p) / lam, 0.0), sigma, self.xi)
        out[tail] = v[tail] + q_exc[tail]
        strata = self._strata(data)
        for s in np.unique(strata[~tail]):
            rows = ~tail & (strata == s)
            ratios = self._body_for(s)
            # Inverse of the step CDF: smallest ratio whose CDF reaches the level.
            k = np.ceil(p[rows] / (1.0 - lam[rows]) * ratios.size).astype(int) - 1
            out[rows] = v[rows] * ratios[np.clip(k, 0, ratios.size - 1)]
        return out

    def exponential_scale(self, y, data, warn: bool = True) -> np.ndarray:
        """``-log S_gpd(y - v(x); sigma(x), xi)`` for responses at or above ``v(x)``."""
        y = np.asarray(y, dtype=float)
        v = self.threshold_at(data, warn)
        if np.any(y < v):
            raise DomainError("exponential-scale transform needs y >= v(x)")
        sigma = self.scale_at(data, warn)
        with np.errstate(divide="ignore"):
            return -np.log(gpd.sf(y - v, sigma, self.xi))

    def summary(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "xi": float(self.xi),
            "xi_se": float(np.sqrt(self.cov[-1, -1])) if self.spec.shape_fixed is None else 0.0,
            "smoothing": [float(s) for s in self.smoothing],
            "loglik": float(self.loglik),
            "edf": float(self.edf),
            "aic": float(self.aic),
            "bic": float(self.bic),
            "n": self.n,
            "n_v": self.n_v,
            "rates": {str(k): float(v) for k, v in self.rates.items()},
            "drop_fraction": float(self.drop_fraction),
            "body": "empirical per-stratum ratio y/v(x), rescaled to 1 - rate",
        }


def _blocked_folds(n: int, k: int) -> list[np.ndarray]:
    edges = np.linspace(0, n, k + 1).round().astype(int)
    return [np.arange(edges[i], edges[i + 1]) for i in range(k)]


def _start(y, p):
    init = gpd.pwm_estimate(y)
    beta0 = np.zeros(p)
    beta0[0] = np.log(init.scale)
    return beta0, float(np.clip(init.shape, -0.5, 0.5))


def _cv_score(X, y, Ss, lam, folds, xi_fixed, beta0, xi0) -> float:
    S = sum((l * Sj for l, Sj in zip(lam, Ss)), np.zeros((X.shape[1], X.shape[1])))
    scores = []
    for test in folds:
        train = np.setdiff1d(np.arange(y.size), test)
        try:
            res = fit_penalized_gpd(X[train], y[train], S, beta0, xi0, xi_fixed=xi_fixed)
        except FitError:
            return np.inf
        if res.xi >= 1:
            return np.inf
        sigma = np.exp(X[test] @ res.beta)
        scores.append(gpd.gpd_crps(y[test], sigma, res.xi))
    return float(np.mean(np.concatenate(scores)))


def choose_smoothing(X, y, Ss, grid=DEFAULT_GRID, k=5, xi_fixed=None, sweeps=2):
    """Coordinate-wise search of per-block smoothing parameters by blocked CV.

    Returns ``(smoothing, best_score)``.
    """
    grid = np.asarray(grid, dtype=float)
    folds = _blocked_folds(y.size, k)
    beta0, xi0 = _start(y, X.shape[1])
    lam = np.full(len(Ss), grid[len(grid) // 2])
    cache = {}

    def score(vals):
        key = tuple(vals)
        if key not in cache:
            cache[key] = _cv_score(X, y, Ss, vals, folds, xi_fixed, beta0, xi0)
        return cache[key]

    best = score(lam)
    for _ in range(sweeps):
        changed = False
        for j in range(len(Ss)):
            for g in grid:
                trial = lam.copy()
                trial[j] = g
                s = score(trial)
                if s < best - 1e-12:
                    best, lam, changed = s, trial, True
        if not changed:
            break
    return lam, best


def fit_nonstationary_gpd(spec: GpdSpec, data, threshold: QuantileThreshold | None = None) -> GpdFit:
    """Penalised maximum-likelihood fit of the tail regression model.

    Rows missing the response or any referenced covariate are dropped first
    (the fraction is recorded in ``drop_fraction``).
    """
    series = data if isinstance(data, Series) else Series(data, spec.response)
    series, dropped = series.complete_cases(spec.columns)
    frame = series.frame
    y_all = frame[spec.response].to_numpy(dtype=float)

    if threshold is None:
        threshold = fit_threshold_quantile(spec.threshold, frame, spec.tau, spec.response)
    v_all = threshold(frame, warn=False)
    exceed = y_all > v_all
    n_v = int(exceed.sum())
    if n_v < spec.min_exceedances:
        raise MinimumSampleError(f"only {n_v} threshold exceedances; need {spec.min_exceedances}")

    exc_frame = frame.loc[exceed].reset_index(drop=True)
    y = (y_all - v_all)[exceed]
    design = Design(spec.scale, exc_frame, identifiable=True)
    X = design.training.X
    Ss = design.training.penalties()

    cv_score = None
    if not Ss:
        smoothing = np.zeros(0)
    elif spec.smoothing is not None:
        smoothing = np.broadcast_to(np.asarray(spec.smoothing, dtype=float), (len(Ss),)).copy()
    else:
        smoothing, cv_score = choose_smoothing(X, y, Ss, spec.smoothing_grid, spec.cv_folds, spec.shape_fixed)
    S = design.penalty(smoothing) if Ss else np.zeros((X.shape[1], X.shape[1]))

    beta0, xi0 = _start(y, X.shape[1])
    res = fit_penalized_gpd(X, y, S, beta0, xi0, xi_fixed=spec.shape_fixed)
    try:
        cov = np.linalg.inv(res.hessian)
        edf = float(np.trace(cov @ res.info))
    except np.linalg.LinAlgError as exc:
        raise FitError("penalised Hessian is singular at the optimum") from exc

    rates, body = {}, {}
    ratios_all = y_all / v_all
    if spec.rate_by is None:
        strata = np.zeros(len(frame))
    else:
        strata = frame[spec.rate_by].to_numpy(dtype=float)
    for s in np.unique(strata):
        mask = strata == s
        rates[float(s)] = float(exceed[mask].mean())
        body[float(s)] = np.sort(ratios_all[mask & ~exceed])
        if not exceed[mask].any() or exceed[mask].all():
            warnings.warn(f"stratum {s:g} has {'no' if not exceed[mask].any() else 'only'} exceedances", SparseDataWarning, stacklevel=2)
    body["__all__"] = np.sort(ratios_all[~exceed])

    return GpdFit(
        spec=spec,
        threshold=threshold,
        design=design,
        beta=np.asarray(res.beta),
        xi=float(res.xi),
        smoothing=np.asarray(smoothing),
        nll=float(res.nll),
        edf=edf,
        cov=cov,
        n=len(frame),
        n_v=n_v,
        rates=rates,
        overall_rate=float(exceed.mean()),
        body=body,
        drop_fraction=dropped,
        cv_score=cv_score,
    )


def conditional_cdf(fit: GpdFit, y, x) -> float | np.ndarray:
    """``F(y | x)`` for one covariate row (dict or one-row frame) or a frame of rows."""
    frame = pd.DataFrame([x]) if isinstance(x, dict) else _frame(x)
    out = fit.cdf(y, frame)
    return float(out[0]) if len(out) == 1 else out


def transform_excesses_to_exponential(fit: GpdFit, data) -> np.ndarray:
    """Standard-exponential values of the threshold excesses, in time order."""
    series = data if isinstance(data, Series) else Series(data, fit.spec.response)
    series, _ = series.complete_cases(fit.spec.columns)
    frame = series.frame
    y = frame[fit.spec.response].to_numpy(dtype=float)
    v = fit.threshold_at(frame)
    keep = y > v
    return fit.exponential_scale(y[keep], frame.loc[keep])


def exponential_qq(values) -> pd.DataFrame:
    """Sorted values against Exp(1) quantiles at ``i / (n + 1)``."""
    values = np.sort(np.asarray(values, dtype=float))
    n = values.size
    theo = -np.log1p(-np.arange(1, n + 1) / (n + 1.0))
    return pd.DataFrame({"empirical": values, "theoretical": theo})


def excess_design(fit: GpdFit, data) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale design rows, excesses and the row mask for exceedances in ``data``."""
    frame = _frame(data)
    y = frame[fit.spec.response].to_numpy(dtype=float)
    v = fit.threshold_at(frame, warn=False)
    keep = y > v
    X = fit.design.matrix(frame.loc[keep], warn=False)
    return X, (y - v)[keep], keep


def penalized_objective(fit: GpdFit, beta, xi, data) -> float:
    """Penalised negative log-likelihood of ``(beta, xi)`` on the excesses in ``data``."""
    from evtkit._newton import evaluate

    X, z, _ = excess_design(fit, data)
    S = fit.design.penalty(fit.smoothing)
    return float(evaluate(X, z, S, np.asarray(beta, dtype=float), float(xi), want_hessian=False)[0])
