"""End-to-end estimation workflows producing deterministic JSON-ready results.

Each ``run_*`` takes a config dict (merged over defaults, and the resolved
config is echoed in the output) and returns a payload with the tool
version, seeds, captured warnings and the result.
"""

from __future__ import annotations

import copy
import json
import warnings

import numpy as np

from evtkit import __version__
from evtkit.condex import challenge_levels, factorized_probability, fit_condext, group_exceedance_probability
from evtkit.dependence import chi_matrix, cluster_by_chi
from evtkit.errors import SchemaError
from evtkit.evgam import GpdSpec, fit_nonstationary_gpd
from evtkit.margins import transform
from evtkit.marginal import MarginalTail
from evtkit.minproj import build_challenge_rays, fit_minproj, joint_survivor_probability, negated_rows, tau_sweep
from evtkit.resampling import parametric_bootstrap_condex, semiparametric_response_bootstrap
from evtkit.series import Series, ingest_csv
from evtkit.synth import UnivariateConfig, gen_grouped50, gen_trivariate, gen_univariate, true_conditional_quantile
from evtkit.threshold import loss_augmented_refit

UNIVARIATE_SYNTH = {"scale_season": 0.3, "scale_amplitude": 0.3, "scale_wind": 0.2, "n": 21000}

DEFAULTS = {
    "c1": {
        "data": {"path": None, "synth": UNIVARIATE_SYNTH},
        "predict": {"path": None, "n": 100},
        "scale": "scale ~ 1 + ind(season==1) + crs(x, B=5) + crs(wind, B=4)",
        "threshold": "threshold ~ 1 + ind(season==1)",
        "tau": 0.9,
        "rate_by": "season",
        "p": 0.9999,
        "boot": 50,
        "block_mean": 50,
        "seed": 0,
    },
    "c2": {
        "data": {"path": None, "synth": UNIVARIATE_SYNTH},
        "scale": "scale ~ 1 + ind(season==1) + crs(x, B=5) + crs(wind, B=4)",
        "threshold": "threshold ~ 1 + ind(season==1)",
        "tau": 0.9,
        "rate_by": "season",
        "return_period_years": 200,
        "days_per_year": 300,
        "loss_weight": 1.0,
        "boot": 50,
        "block_mean": 50,
        "seed": 0,
    },
    "c3": {
        "data": {"path": None, "margin": "gumbel", "synth": {"copula": "independent", "n": 21000}},
        "targets": {"y": 6.0, "v": 7.0, "m": float(-np.log(np.log(2.0)))},
        "tau": [0.83, 0.85],
        "select_tau": False,
        "threshold": "threshold ~ 1 + ind(season==1) + crs(atmosphere, B=10)",
        "scale": "scale ~ 1 + crs(atmosphere, B=10)",
        "boot": 0,
        "seed": 0,
    },
    "c4": {
        "data": {"path": None, "margin": "gumbel", "synth": {"mode": "gaussian", "rho": 0.7, "n": 10000}},
        "chi_u": 0.95,
        "link": 0.1,
        "groups": None,
        "cond_quantile": 0.85,
        "n_sim": 10**6,
        "boot": 20,
        "boot_sim": 10**5,
        "days_per_year": 300,
        "days_per_month": 25,
        "seed": 0,
    },
}


def _merge(base: dict, override: dict | None) -> dict:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def resolve_config(name: str, config: dict | None = None) -> dict:
    if name not in DEFAULTS:
        raise ValueError(f"unknown workflow {name!r}; choose from {sorted(DEFAULTS)}")
    return _merge(DEFAULTS[name], config)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# data loading


def _univariate_data(cfg: dict) -> tuple[Series, UnivariateConfig | None]:
    data = cfg["data"]
    if data.get("path"):
        return ingest_csv(data["path"]), None
    ucfg = UnivariateConfig(**data["synth"])
    return gen_univariate(ucfg, cfg["seed"]), ucfg


def _gpd_spec(cfg: dict) -> GpdSpec:
    return GpdSpec(scale=cfg["scale"], threshold=cfg["threshold"], tau=cfg["tau"], rate_by=cfg["rate_by"])


# ---------------------------------------------------------------------------
# workflows


def run_c1(cfg: dict) -> dict:
    """Conditional extreme quantiles with 50% bootstrap intervals."""
    series, truth_cfg = _univariate_data(cfg)
    spec = _gpd_spec(cfg)
    fit = fit_nonstationary_gpd(spec, series)
    if cfg["predict"].get("path"):
        rows = ingest_csv(cfg["predict"]["path"], calendar=False).frame
    elif truth_cfg is not None:
        rows = gen_univariate(truth_cfg, cfg["seed"] + 1).frame.iloc[: cfg["predict"]["n"]].reset_index(drop=True)
    else:
        rows = series.frame.iloc[: cfg["predict"]["n"]].reset_index(drop=True)
    p = cfg["p"]
    point = fit.quantile(p, rows)
    entries = [{"point": float(q)} for q in point]
    boot_info = None
    if cfg["boot"] > 0:
        boot = semiparametric_response_bootstrap(
            fit, series, lambda f: f.quantile(p, rows, warn=False), cfg["block_mean"], cfg["boot"], cfg["seed"]
        )
        lo, hi = boot.interval(0.5)
        for e, a, b in zip(entries, lo, hi):
            e.update(lo50=float(a), hi50=float(b))
        boot_info = boot.to_dict()
    if truth_cfg is not None:
        truth = true_conditional_quantile(truth_cfg, rows, p)
        for e, t in zip(entries, truth):
            e["truth"] = float(t)
    return {"quantiles": entries, "fit": fit.summary(), "bootstrap": boot_info}


def run_c2(cfg: dict) -> dict:
    """Marginal return level with a loss-augmented refit and a 95% interval."""
    series, truth_cfg = _univariate_data(cfg)
    spec = _gpd_spec(cfg)
    p = 1.0 - 1.0 / (cfg["days_per_year"] * cfg["return_period_years"])
    fit = fit_nonstationary_gpd(spec, series)
    adjusted = loss_augmented_refit(fit, series, cfg["loss_weight"])
    q_plain = MarginalTail(fit, series).quantile(p)
    q = MarginalTail(adjusted, series).quantile(p)
    result = {"p": p, "quantile": q, "unadjusted_quantile": q_plain, "fit": adjusted.summary()}
    if cfg["boot"] > 0:
        def target(f):
            return MarginalTail(loss_augmented_refit(f, series, cfg["loss_weight"]), series).quantile(p)

        boot = semiparametric_response_bootstrap(fit, series, target, cfg["block_mean"], cfg["boot"], cfg["seed"])
        lo, hi = boot.interval(0.95)
        result.update(ci95=[float(lo), float(hi)], bootstrap=boot.to_dict())
    if truth_cfg is not None:
        result["truth_note"] = "marginal truth available by simulation from the generating model"
    return result


def _c3_data(cfg):
    data = cfg["data"]
    if data.get("path"):
        frame = ingest_csv(data["path"], calendar=False).frame
        # Z columns are already exponential (as written by ``synth``), Y columns Gumbel.
        for cols, margin in ((["Z1", "Z2", "Z3"], "exponential"), (["Y1", "Y2", "Y3"], "gumbel")):
            if set(cols) <= set(frame.columns):
                break
        else:
            raise SchemaError("trivariate input needs columns Z1..Z3 or Y1..Y3")
        z = transform(frame[cols].to_numpy(dtype=float), data.get("margin", margin), "exponential")
        return z, frame.drop(columns=cols), None
    z, cov, truth = gen_trivariate(data["synth"], cfg["seed"])
    return z, cov, truth


def run_c3(cfg: dict) -> dict:
    """Two joint tail probabilities of a trivariate series by min-projection."""
    z, cov, truth = _c3_data(cfg)
    t = cfg["targets"]
    ray1, ray2 = build_challenge_rays(t["y"], t["v"], t["m"])
    parts = {}
    for name, ray, zz, tau in (("p1", ray1, z, cfg["tau"][0]), ("p2", ray2, negated_rows(z), cfg["tau"][1])):
        sweep = None
        if cfg["select_tau"]:
            table, tau = tau_sweep(zz, cov, ray, threshold=cfg["threshold"], scale=cfg["scale"])
            sweep = table.to_dict(orient="records")
        mp = fit_minproj(zz, cov, ray, tau, threshold=cfg["threshold"], scale=cfg["scale"])
        prob = joint_survivor_probability(mp)
        entry = {"probability": prob, "tau": tau, "shape": mp.shape, "shape_ci95": list(mp.shape_ci), "ray": ray.to_dict(), "tau_sweep": sweep}
        if cfg["boot"] > 0:
            reps = []
            for r in range(cfg["boot"]):
                idx = np.random.default_rng(cfg["seed"] + r).integers(0, len(zz), len(zz))
                try:
                    b = fit_minproj(zz[idx], cov.iloc[idx].reset_index(drop=True), ray, tau, threshold=cfg["threshold"], scale=cfg["scale"], smoothing=tuple(mp.fit.smoothing))
                    reps.append(joint_survivor_probability(b))
                except Exception as exc:  # noqa: BLE001 - failed replicates are counted
                    warnings.warn(f"bootstrap replicate {r} dropped: {exc}")
            entry["ci95"] = [float(np.quantile(reps, 0.025)), float(np.quantile(reps, 0.975))] if reps else None
            entry["n_boot_ok"] = len(reps)
        parts[name] = entry
    if truth is not None and truth.get("copula") == "independent":
        parts["p1"]["truth"] = float(np.exp(-ray1.radius))
        parts["p2"]["truth"] = float(np.exp(-ray2.radius))
    return {"parts": parts, "assumption": "slowly varying factor treated as constant above the threshold"}


def _c4_data(cfg):
    data = cfg["data"]
    if data.get("path"):
        frame = ingest_csv(data["path"], calendar=False).frame
        # W columns are already Laplace (as written by ``synth``), Y columns Gumbel.
        for prefix, margin in (("W", "laplace"), ("Y", "gumbel")):
            cols = [c for c in frame.columns if c[:1] == prefix and c[1:].isdigit()]
            if cols:
                break
        else:
            raise SchemaError("grouped input needs columns W1..Wd or Y1..Yd")
        return transform(frame[cols].to_numpy(dtype=float), data.get("margin", margin), "laplace"), None
    w, truth = gen_grouped50(data["synth"], cfg["seed"])
    return w, truth


def run_c4(cfg: dict) -> dict:
    """Joint exceedance probabilities of 50 sites via clustering and conditional extremes."""
    w, truth = _c4_data(cfg)
    d = w.shape[1]
    if cfg["groups"]:
        groups = [[i - 1 for i in g] for g in cfg["groups"]]
    else:
        groups = cluster_by_chi(chi_matrix(w, cfg["chi_u"]), cfg["link"]).groups
    s1, s2 = challenge_levels(cfg["days_per_year"], cfg["days_per_month"])
    half = d // 2
    site_levels = {
        "p1": np.where(np.arange(d) < half, s1, s2),
        "p2": np.full(d, s1),
    }
    per_group = {k: [] for k in site_levels}
    boots = {k: [] for k in site_levels}
    for gi, g in enumerate(groups):
        if len(g) == 1:
            for k, lv in site_levels.items():
                p = float(np.exp(-lv[g[0]]) / 2.0)
                per_group[k].append(p)
                boots[k].append(np.full(cfg["boot"], p))
            continue
        fit = fit_condext(w[:, g], 0, cfg["cond_quantile"])
        for k, lv in site_levels.items():
            per_group[k].append(group_exceedance_probability(fit, lv[g], cfg["n_sim"], cfg["seed"] + gi))
            if cfg["boot"] > 0:
                b = parametric_bootstrap_condex(fit, lv[g], cfg["boot"], cfg["seed"] + 1000 * gi, cfg["boot_sim"])
                boots[k].append(b.estimates)
    result = {"groups": [[i + 1 for i in g] for g in groups], "levels": {"s1": s1, "s2": s2}}
    for k in site_levels:
        entry = {"group_probabilities": per_group[k], "probability": factorized_probability(per_group[k])}
        if cfg["boot"] > 0 and all(len(b) for b in boots[k]):
            m = min(len(b) for b in boots[k])
            prod = np.prod(np.vstack([b[:m] for b in boots[k]]), axis=0)
            entry["ci95"] = [float(np.quantile(prod, 0.025)), float(np.quantile(prod, 0.975))]
        result[k] = entry
    if truth is not None:
        result["planted_groups"] = [[i + 1 for i in g] for g in truth["groups"]]
    return result


RUNNERS = {"c1": run_c1, "c2": run_c2, "c3": run_c3, "c4": run_c4}


def run_workflow(name: str, config: dict | None = None) -> dict:
    """Run a workflow and wrap its result with version, config, seeds and warnings."""
    cfg = resolve_config(name, config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = RUNNERS[name](cfg)
    messages = list(dict.fromkeys(f"{w.category.__name__}: {w.message}" for w in caught))
    return {
        "tool": "evtkit",
        "version": __version__,
        "workflow": name,
        "config": cfg,
        "seeds": {"base": cfg["seed"], "replicates": "seed + r"},
        "warnings": messages,
        "result": result,
    }
