"""Published reference values kept as fixtures.

These come from an analysis of data that are not distributed, so they are
recorded for comparison only and never used as test targets on synthetic
data.
"""

from __future__ import annotations

# Five extremal-dependence subgroups of the 50-variable data set (1-based).
GROUPS = (
    (4, 14, 19, 28, 30, 38, 43, 44),
    (3, 10, 15, 18, 22, 29, 45, 47),
    (8, 21, 25, 26, 32, 33, 34, 40, 41, 42, 48, 49, 50),
    (1, 2, 5, 7, 9, 17, 20, 31, 46),
    (6, 11, 12, 13, 16, 23, 24, 27, 35, 36, 37, 39),
)

# Forward-selection deltas relative to the intercept-only scale model.
SELECTION_TABLE = (
    {"model": 1, "scale": "b0", "delta_crps": 0.0, "delta_aic": 0.0, "delta_bic": 0.0},
    {"model": 2, "scale": "b0 + b1 1(season=1)", "delta_crps": -0.5, "delta_aic": -33.4, "delta_bic": -26.1},
    {"model": 3, "scale": "b0 + s1(V3)", "delta_crps": -0.9, "delta_aic": -408.5, "delta_bic": -379.2},
    {"model": 4, "scale": "b0 + s2(V6)", "delta_crps": -0.5, "delta_aic": -284.3, "delta_bic": -276.8},
    {"model": 5, "scale": "b0 + b1 1(season=1) + s1(V3)", "delta_crps": -0.9, "delta_aic": -425.8, "delta_bic": -388.1},
    {"model": 6, "scale": "b0 + s1(V3) + s2(V6)", "delta_crps": -1.0, "delta_aic": -752.7, "delta_bic": -717.2},
    {"model": 7, "scale": "b0 + b1 1(season=1) + s1(V3) + s2(V6)", "delta_crps": -1.1, "delta_aic": -780.0, "delta_bic": -735.3},
)
SELECTED_SCALE = "scale ~ 1 + ind(season==1) + crs(V3, B=4) + crs(V6, B=3)"

# Marginal once-in-200-years quantile: estimate, 95% interval, truth.
MARGINAL_QUANTILE = {"estimate": 213.1, "ci95": (209.3, 242.1), "truth": 196.6}

# Min-projection shape estimates with 95% intervals, and probabilities.
MINPROJ_SHAPE = {"p1": (0.042, (0.01, 0.075)), "p2": (0.094, (0.059, 0.128))}
MINPROJ_TAU = {"p1": 0.83, "p2": 0.85}
MINPROJ_PROBABILITY = {"p1": 1.480449e-5, "p2": 2.460666e-5}

# Factorised conditional-extremes probabilities with 95% bootstrap intervals.
CONDEX_PROBABILITY = {
    "p1": (1.093634e-26, (2.149591e-36, 1.359469e-24)),
    "p2": (1.075787e-31, (1.596381e-46, 1.850425e-29)),
}
CONDEX_QUANTILE = 0.85


def groups_zero_based() -> list[list[int]]:
    return [[i - 1 for i in g] for g in GROUPS]
