"""Scores for comparing tail models and a forward-selection driver."""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import quad

from evtkit import gpd
from evtkit.errors import DomainError, FitError, NumericError, SparseDataWarning
from evtkit.evgam import GpdFit, GpdSpec, excess_design, fit_nonstationary_gpd
from evtkit.formula import Formula, Term
from evtkit.series import Series


def _loss(q, q_hat):
    q = np.asarray(q, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    under = 0.9 * np.maximum(0.99 * q - q_hat, 0.0)
    over = 0.1 * np.maximum(q_hat - 1.01 * q, 0.0)
    return under + over


def competition_loss(q, q_hat):
    """Asymmetric loss for estimating a quantile ``q`` by ``q_hat``.

    Zero within 1% of ``q``; beyond that, under-estimation costs 0.9 per
    unit and over-estimation 0.1 per unit.

    >>> float(competition_loss(100.0, 95.0))
    3.6
    """
    if np.any(np.asarray(q) <= 0):
        raise DomainError("competition loss needs a positive true quantile")
    out = _loss(q, q_hat)
    return float(out) if out.ndim == 0 else out


def crps(cdf, y: float, lower: float, upper: float, tol: float = 1e-9) -> float:
    """CRPS of a predictive CDF for observation ``y`` by adaptive quadrature.

    Integrates ``(F(x) - 1{x >= y})^2`` over ``[lower, upper]``, splitting at
    ``y``. The bounds should cover the forecast's support.
    """
    if not lower < upper:
        raise DomainError("crps needs lower < upper")
    total, err = 0.0, 0.0
    if lower < y:
        val, e = quad(lambda x: cdf(x) ** 2, lower, min(y, upper), limit=200, epsabs=tol)
        total, err = total + val, err + e
    if y < upper:
        val, e = quad(lambda x: (1.0 - cdf(x)) ** 2, max(y, lower), upper, limit=200, epsabs=tol)
        total, err = total + val, err + e
    if err > max(1e-6, 1e-6 * abs(total)):
        raise NumericError(f"CRPS quadrature error estimate {err:.3g} exceeds tolerance")
    return float(max(total, 0.0))


def aic(fit: GpdFit) -> float:
    return fit.aic


def bic(fit: GpdFit) -> float:
    return fit.bic


def _strata_folds(frame: pd.DataFrame, k: int, by: str | None) -> list[np.ndarray]:
    # Contiguous time blocks, cut separately within each stratum.
    groups = [np.arange(len(frame))] if by is None else [np.flatnonzero(frame[by].to_numpy() == s) for s in np.unique(frame[by])]
    folds = [[] for _ in range(k)]
    for idx in groups:
        for j, chunk in enumerate(np.array_split(idx, k)):
            folds[j].append(chunk)
    return [np.sort(np.concatenate(f)) for f in folds]


def _oof_score(fit: GpdFit, test: pd.DataFrame, metric: str) -> np.ndarray:
    X, z, _ = excess_design(fit, test)
    if z.size == 0:
        return z
    if metric == "crps":
        return gpd.gpd_crps(z, np.exp(X @ fit.beta), fit.xi)
    e = np.sort(-np.log(gpd.sf(z, np.exp(X @ fit.beta), fit.xi)))
    theo = -np.log1p(-np.arange(1, e.size + 1) / (e.size + 1.0))
    return _loss(theo, e)


def k_fold_cv(data, spec: GpdSpec, k: int = 5, metric: str = "crps") -> float:
    """Mean out-of-fold score of ``spec`` over ``k`` blocked folds.

    Each fold refits threshold and tail model on the other folds. With
    ``metric="crps"`` the score is the closed-form GPD CRPS of each held-out
    excess; with ``metric="loss"`` it is the competition loss between Exp(1)
    quantiles and the sorted exponential-scale held-out excesses. Unless
    ``spec.smoothing`` is fixed, smoothing is chosen once on all the data
    and then held fixed across folds.
    """
    if metric not in ("crps", "loss"):
        raise ValueError(f"unknown metric {metric!r}")
    series = data if isinstance(data, Series) else Series(data, spec.response)
    series, _ = series.complete_cases(spec.columns)
    frame = series.frame
    if not 2 <= k <= len(frame):
        raise ValueError(f"k must lie in [2, {len(frame)}], got {k}")
    if spec.smoothing is None:
        full = fit_nonstationary_gpd(spec, series)
        spec = dataclasses.replace(spec, smoothing=tuple(full.smoothing))

    scores = []
    skipped = 0
    for test_idx in _strata_folds(frame, k, spec.rate_by):
        train = frame.drop(index=test_idx).reset_index(drop=True)
        test = frame.iloc[test_idx].reset_index(drop=True)
        try:
            fit = fit_nonstationary_gpd(spec, Series(train, spec.response))
        except FitError:
            skipped += 1
            continue
        s = _oof_score(fit, test, metric)
        if s.size == 0:
            skipped += 1
            continue
        scores.append(s)
    if skipped:
        warnings.warn(f"{skipped} of {k} folds skipped (no held-out excesses or failed fit)", SparseDataWarning, stacklevel=2)
    if not scores:
        raise FitError("no fold produced a score")
    return float(np.mean(np.concatenate(scores)))


@dataclass
class SelectionReport:
    """Every model visited by forward selection, with deltas to the baseline."""

    table: pd.DataFrame
    chosen: int

    @property
    def chosen_formula(self) -> str:
        return str(self.table.loc[self.table.model == self.chosen, "formula"].iloc[0])

    def to_csv(self, path=None) -> str:
        cols = ["model", "formula", "delta_crps", "delta_aic", "delta_bic"]
        text = self.table[cols].to_csv(index=False, float_format="%.6g")
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _as_term(term) -> Term:
    if isinstance(term, str):
        return Formula.parse(f"scale ~ 1 + {term}").terms[1]
    return term


def forward_select(data, pool, baseline: GpdSpec, k: int = 5) -> SelectionReport:
    """Greedy forward selection of scale terms by ``k``-fold CV CRPS.

    At each step every remaining term in ``pool`` is tried; the one with the
    lowest CV score is kept if it beats the current model.
    """
    pool = [_as_term(t) for t in pool]
    rows = []

    def visit(spec, step):
        cv = k_fold_cv(data, spec, k)
        fit = fit_nonstationary_gpd(spec, data)
        rows.append({"model": len(rows) + 1, "step": step, "formula": str(spec.scale), "crps": cv, "aic": fit.aic, "bic": fit.bic})
        return cv

    current = baseline
    best = visit(current, 0)
    chosen = 1
    remaining = list(pool)
    step = 0
    while remaining:
        step += 1
        trials = []
        for term in remaining:
            spec = dataclasses.replace(current, scale=current.scale.plus(term), smoothing=None)
            trials.append((visit(spec, step), len(rows), term, spec))
        score, model_id, term, spec = min(trials, key=lambda t: t[0])
        if score >= best:
            break
        best, chosen, current = score, model_id, spec
        remaining.remove(term)

    table = pd.DataFrame(rows)
    base = table.iloc[0]
    for col in ("crps", "aic", "bic"):
        table[f"delta_{col}"] = table[col] - base[col]
    return SelectionReport(table, chosen)
