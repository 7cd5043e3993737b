"""Empirical extremal dependence: chi, eta, Hill-type lambda, slicing and clustering.

All measures are computed from within-sample ranks, so they do not depend
on the marginal scale of the input.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.sparse.csgraph import connected_components
from scipy.stats import kendalltau

from evtkit.errors import DomainError, SparseDataWarning
from evtkit.margins import to_uniform_ranks

MIN_JOINT = 20


@dataclass
class DepSummary:
    measure: str  # chi | eta | lambda
    index: tuple
    level: float
    estimate: float
    replicates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    slice: str = "all"
    weights: tuple | None = None
    below_bound: bool = False

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "index": list(self.index),
            "level": self.level,
            "estimate": self.estimate,
            "replicates": [float(r) for r in self.replicates],
            "slice": self.slice,
            "weights": None if self.weights is None else list(self.weights),
            "below_bound": self.below_bound,
        }


def _columns(data, index):
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise DomainError("dependence measures need a 2-d array (rows x variables)")
    index = tuple(range(data.shape[1])) if index is None else tuple(index)
    if len(index) < 2:
        raise DomainError("need at least two variables")
    return data[:, index], index


def _exceedance_fractions(data, index, u):
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie in (0, 1)")
    x, _ = _columns(data, index)
    exceed = to_uniform_ranks(x) > u
    joint = exceed.all(axis=1)
    n_joint = int(joint.sum())
    if n_joint < MIN_JOINT:
        warnings.warn(f"only {n_joint} joint exceedances at u={u}", SparseDataWarning, stacklevel=3)
    # Ratios of integer counts keep comonotone data at exactly 1.
    n = x.shape[0]
    return exceed.sum(axis=0).mean() / n, n_joint / n


def chi_u(data, index=None, u: float = 0.95) -> float:
    """Empirical ``chi(u)``: joint exceedance fraction over marginal exceedance fraction.

    The denominator is the realised marginal fraction above ``u`` (equal to
    ``1 - u`` up to rank discreteness), which makes comonotone data give
    exactly 1.
    """
    marginal, joint = _exceedance_fractions(data, index, u)
    return float(joint / marginal) if joint > 0 else 0.0


def eta_u(data, index=None, u: float = 0.95) -> float:
    """Empirical coefficient of tail dependence, ``log p_marg / log p_joint``."""
    marginal, joint = _exceedance_fractions(data, index, u)
    return float(np.log(marginal) / np.log(joint)) if joint > 0 else 0.0


def hill_lambda(z, weights, level: float = 0.95) -> DepSummary:
    """Exponential decay rate of the min-projection tail, ``1 / mean excess``.

    ``z`` holds exponential-margin rows. Estimates below ``max(weights)``
    (the theoretical lower bound) are flagged with ``below_bound``.
    """
    from evtkit.minproj import min_projection

    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
        raise DomainError("weights must be a point on the simplex")
    t = min_projection(z, w)
    cut = np.quantile(t, level)
    exc = t[t > cut] - cut
    if exc.size < MIN_JOINT:
        warnings.warn(f"only {exc.size} exceedances for the Hill estimate", SparseDataWarning, stacklevel=2)
    if exc.size == 0:
        raise DomainError("no exceedances above the Hill threshold")
    lam = float(1.0 / exc.mean())
    return DepSummary(
        "lambda",
        tuple(int(i) for i in np.flatnonzero(w > 0)),
        level,
        lam,
        weights=tuple(float(x) for x in w),
        below_bound=lam < w.max(),
    )


def chi_matrix(data, u: float = 0.95) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    exceed = to_uniform_ranks(data) > u
    ex = exceed.astype(float)
    joint = ex.T @ ex / data.shape[0]
    marg = ex.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        chi = joint / ((marg[:, None] + marg[None, :]) / 2.0)
    np.fill_diagonal(chi, 1.0)
    return np.nan_to_num(chi)


def heatmap_table(data, u: float = 0.95) -> pd.DataFrame:
    """Pairwise ``chi`` and ``eta`` for every ``i < j`` (1-based indices)."""
    data = np.asarray(data, dtype=float)
    exceed = to_uniform_ranks(data) > u
    ex = exceed.astype(float)
    joint = ex.T @ ex / data.shape[0]
    marg = ex.mean(axis=0)
    rows = []
    d = data.shape[1]
    for i in range(d):
        for j in range(i + 1, d):
            m = (marg[i] + marg[j]) / 2.0
            pj = joint[i, j]
            rows.append(
                {
                    "i": i + 1,
                    "j": j + 1,
                    "chi": pj / m if pj > 0 else 0.0,
                    "eta": np.log(m) / np.log(pj) if pj > 0 else 0.0,
                }
            )
    return pd.DataFrame(rows)


def _slices(covariates: pd.DataFrame, slicing: str, column: str | None) -> list[tuple[str, np.ndarray]]:
    if slicing == "season":
        col = column or "season"
        values = covariates[col].to_numpy()
        return [(f"season {s:g}", values == s) for s in np.unique(values)]
    if slicing == "atmosphere":
        col = column or "atmosphere"
        values = covariates[col].to_numpy(dtype=float)
        # Equal-count deciles by rank, robust to ties in step-like covariates.
        order = np.argsort(values, kind="stable")
        labels = np.empty(values.size, dtype=int)
        labels[order] = np.arange(values.size) * 10 // values.size
        return [(f"decile {k + 1}", labels == k) for k in range(10)]
    raise ValueError(f"unknown slicing {slicing!r}")


def sliced_summaries(
    data,
    covariates: pd.DataFrame,
    index_sets,
    slicing: str = "season",
    column: str | None = None,
    u: float = 0.9,
    n_boot: int = 200,
    seed: int = 0,
    rays=(),
    hill_level: float = 0.9,
) -> list[DepSummary]:
    """Per-slice ``chi(u)`` (and ``lambda`` at ``rays``) with IID bootstrap replicates.

    ``data`` is on exponential margins when ``rays`` is non-empty; ``chi`` is
    rank-based and scale-free either way. Replicate ``r`` uses seed
    ``seed + r``.
    """
    data = np.asarray(data, dtype=float)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SparseDataWarning)
        for label, mask in _slices(covariates, slicing, column):
            block = data[mask]
            n = block.shape[0]
            draws = [np.random.default_rng(seed + r).integers(0, n, n) for r in range(n_boot)]
            for index in index_sets:
                index = tuple(index)
                est = chi_u(block, index, u)
                reps = np.array([chi_u(block[idx], index, u) for idx in draws])
                out.append(DepSummary("chi", index, u, est, reps, label))
            for w in rays:
                est = hill_lambda(block, w, hill_level)
                reps = np.array([hill_lambda(block[idx], w, hill_level).estimate for idx in draws])
                est.replicates, est.slice = reps, label
                out.append(est)
    return out


def trend_test(summaries: list[DepSummary]) -> tuple[float, float]:
    """Kendall's tau between slice order and slice medians, with its p-value."""
    medians = [np.median(s.replicates) if s.replicates.size else s.estimate for s in summaries]
    res = kendalltau(np.arange(len(medians)), medians)
    return float(res.statistic), float(res.pvalue)


def summaries_table(summaries: list[DepSummary]) -> pd.DataFrame:
    """Long table (slice, measure, index, replicate, value) for box plots."""
    rows = []
    for s in summaries:
        tag = "-".join(str(i + 1) for i in s.index)
        for r, val in enumerate(s.replicates):
            rows.append({"slice": s.slice, "measure": s.measure, "index": tag, "replicate": r, "value": float(val)})
    return pd.DataFrame(rows)


@dataclass
class ClusterResult:
    groups: list[list[int]]  # 0-based variable indices
    threshold: float
    chi: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "groups": [[i + 1 for i in g] for g in self.groups]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, payload: dict) -> "ClusterResult":
        return cls([[int(i) - 1 for i in g] for g in payload["groups"]], float(payload["threshold"]))

    @classmethod
    def from_json(cls, text: str) -> "ClusterResult":
        return cls.from_dict(json.loads(text))


def cluster_by_chi(chi, c: float = 0.1) -> ClusterResult:
    """Connected components of the graph with an edge wherever ``chi_ij >= c``."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"linking threshold must lie in [0, 1], got {c}")
    chi = np.asarray(chi, dtype=float)
    if chi.ndim != 2 or chi.shape[0] != chi.shape[1]:
        raise DomainError("chi matrix must be square")
    if not np.allclose(chi, chi.T, atol=1e-12):
        raise DomainError("chi matrix must be symmetric")
    adj = chi >= c
    _, labels = connected_components(adj, directed=False)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    ordered = sorted(groups.values(), key=lambda g: g[0])
    return ClusterResult(ordered, c, chi)
