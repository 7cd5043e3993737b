"""Command-line interface.

Estimates are written as JSON (sorted keys, embedded version and config),
plot-ready tables as CSV. Output goes to ``-o`` or standard output.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np
import pandas as pd

from evtkit import __version__
from evtkit.errors import EvtError, IngestError, SchemaError
from evtkit.workflows import dumps, resolve_config, run_workflow


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"cannot read JSON from {path}: {exc}") from None


def _load_config(path) -> dict:
    if not path:
        return {}
    return _read_json(path)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _envelope(command: str, config: dict, result, seed=None, caught=()) -> str:
    return dumps(
        {
            "tool": "evtkit",
            "version": __version__,
            "command": command,
            "config": config,
            "seeds": {"base": seed},
            "warnings": list(dict.fromkeys(f"{w.category.__name__}: {w.message}" for w in caught)),
            "result": result,
        }
    )


def _series(args):
    from evtkit.series import ingest_csv

    return ingest_csv(args.input, response=args.response)


def _spec(args, cfg: dict):
    from evtkit.evgam import GpdSpec

    keys = ("scale", "threshold", "tau", "rate_by", "shape_fixed", "cv_folds", "min_exceedances")
    kwargs = {k: cfg[k] for k in keys if k in cfg}
    if getattr(args, "tau", None) is not None:
        kwargs["tau"] = args.tau
    kwargs["response"] = args.response
    return GpdSpec(**kwargs)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> None:
    from evtkit import synth
    from evtkit.series import Series

    cfg = _load_config(args.config)
    if args.kind == "univariate":
        series = synth.gen_univariate(cfg, args.seed)
    elif args.kind == "trivariate":
        z, cov, truth = synth.gen_trivariate(cfg, args.seed)
        frame = cov.assign(**{f"Z{i + 1}": z[:, i] for i in range(z.shape[1])})
        series = Series(frame, "Z1", {"truth": truth, "seed": args.seed, "margin": "exponential"})
    else:
        w, truth = synth.gen_grouped50(cfg, args.seed)
        frame = pd.DataFrame(w, columns=[f"W{i + 1}" for i in range(w.shape[1])])
        series = Series(frame, "W1", {"truth": truth, "seed": args.seed, "margin": "laplace"})
    if not args.output:
        raise SystemExit("synth needs -o <csv>")
    series.to_csv(args.output)


def cmd_transform(args) -> None:
    from evtkit.margins import transform

    frame = pd.read_csv(args.input, comment="#", na_values=["NA", ""])
    cols = args.columns or list(frame.columns)
    _check_columns(frame, cols)
    for c in cols:
        frame[c] = transform(frame[c].to_numpy(dtype=float), args.source, args.target)
    _emit(frame.to_csv(index=False, float_format="%.17g"), args.output)


def cmd_select_threshold(args) -> None:
    from evtkit.threshold import eqd_select

    cfg = _load_config(args.config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = eqd_select(_series(args), _spec(args, cfg), args.candidates, n_boot=args.boot, seed=args.seed)
    _emit(_envelope("select-threshold", cfg, res.to_dict(), args.seed, caught), args.output)


def cmd_fit_gpd(args) -> None:
    from evtkit.evgam import fit_nonstationary_gpd

    cfg = _load_config(args.config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fit_nonstationary_gpd(_spec(args, cfg), _series(args))
    result = fit.summary()
    result["coefficients"] = dict(zip(fit.design.training.names, fit.beta.tolist()))
    _emit(_envelope("fit-gpd", cfg, result, None, caught), args.output)


def cmd_forward_select(args) -> None:
    from evtkit.scoring import forward_select

    cfg = _load_config(args.config)
    report = forward_select(_series(args), args.pool, _spec(args, cfg), k=args.folds)
    _emit(report.to_csv(), args.output)


def cmd_quantile(args) -> None:
    from evtkit.evgam import fit_nonstationary_gpd
    from evtkit.marginal import MarginalTail
    from evtkit.resampling import semiparametric_response_bootstrap

    cfg = _load_config(args.config)
    series = _series(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fit_nonstationary_gpd(_spec(args, cfg), series)
        if args.marginal:
            q = MarginalTail(fit, series).quantile(args.p)
            result = {"p": args.p, "quantile": q}

            def target(f):
                return MarginalTail(f, series).quantile(args.p)
        else:
            rows = pd.read_csv(args.rows, comment="#") if args.rows else series.frame
            q = fit.quantile(args.p, rows)
            result = {"p": args.p, "quantile": q.tolist()}

            def target(f):
                return f.quantile(args.p, rows, warn=False)
        if args.boot:
            boot = semiparametric_response_bootstrap(fit, series, target, args.block_mean, args.boot, args.seed)
            lo, hi = boot.interval(args.level)
            result.update(ci=[np.asarray(lo).tolist(), np.asarray(hi).tolist()], level=args.level, bootstrap=boot.to_dict())
    _emit(_envelope("quantile", cfg, result, args.seed, caught), args.output)


def _check_columns(frame: pd.DataFrame, cols) -> None:
    unknown = [c for c in cols if c not in frame.columns]
    if unknown:
        raise SchemaError(f"unknown columns {unknown}; have {list(frame.columns)}")


def _matrix(args) -> np.ndarray:
    frame = pd.read_csv(args.input, comment="#", na_values=["NA", ""])
    cols = args.columns or [c for c in frame.columns if c[:1] in "YZW" and c[1:].isdigit()]
    _check_columns(frame, cols)
    return frame[cols].dropna().to_numpy(dtype=float)


def cmd_dep_measures(args) -> None:
    from evtkit.dependence import heatmap_table

    _emit(heatmap_table(_matrix(args), args.u).to_csv(index=False, float_format="%.10g"), args.output)


def cmd_cluster(args) -> None:
    from evtkit.dependence import chi_matrix, cluster_by_chi

    res = cluster_by_chi(chi_matrix(_matrix(args), args.u), args.c)
    _emit(_envelope("cluster", {"u": args.u, "c": args.c}, res.to_dict()), args.output)


def cmd_joint_prob(args) -> None:
    overrides = _load_config(args.config)
    if args.input:
        overrides.setdefault("data", {})["path"] = args.input
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.boot is not None:
        overrides["boot"] = args.boot
    if args.method == "minproj":
        targets = dict(t.split("=") for t in (args.targets or []))
        if targets:
            overrides["targets"] = {k: float(v) for k, v in targets.items()}
        if args.tau:
            overrides["tau"] = [args.tau, args.tau]
        payload = run_workflow("c3", overrides)
    else:
        if args.groups:
            groups = _read_json(args.groups)
            if not isinstance(groups, dict) or "groups" not in groups:
                raise SchemaError(f"{args.groups} has no 'groups' list")
            overrides["groups"] = groups["groups"]
        payload = run_workflow("c4", overrides)
        if args.levels:
            key = "p2" if args.levels == "year" else "p1"
            payload["result"] = {k: v for k, v in payload["result"].items() if k not in ("p1", "p2")} | {"selected": payload["result"][key]}
    _emit(dumps(payload), args.output)


def cmd_run(args) -> None:
    overrides = _load_config(args.config)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.boot is not None:
        overrides["boot"] = args.boot
    if args.block_mean is not None and args.workflow in ("c1", "c2"):
        overrides["block_mean"] = args.block_mean
    if args.tau is not None:
        overrides["tau"] = [args.tau, args.tau] if args.workflow == "c3" else args.tau
    if args.input:
        overrides.setdefault("data", {})["path"] = args.input
    resolve_config(args.workflow, overrides)
    _emit(dumps(run_workflow(args.workflow, overrides)), args.output)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evtkit", description="Extreme-value estimation toolkit")
    p.add_argument("--version", action="version", version=f"evtkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True, seed=True):
        if data:
            sp.add_argument("-i", "--input", required=True, help="input CSV")
            sp.add_argument("--response", default="y")
        sp.add_argument("--config", help="JSON config file")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-o", "--output", help="output file (default: stdout)")

    sp = sub.add_parser("synth", help="generate synthetic data with a truth record")
    sp.add_argument("kind", choices=["univariate", "trivariate", "grouped50"])
    common(sp, data=False)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("transform", help="change marginal scale of columns")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--from", dest="source", required=True)
    sp.add_argument("--to", dest="target", required=True)
    sp.add_argument("--columns", nargs="*")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("select-threshold", help="threshold level by expected quantile discrepancy")
    common(sp)
    sp.add_argument("--candidates", type=float, nargs="+", default=[0.7, 0.75, 0.8, 0.85, 0.9, 0.95])
    sp.add_argument("--boot", type=int, default=100)
    sp.set_defaults(func=cmd_select_threshold, tau=None)

    sp = sub.add_parser("fit-gpd", help="fit the non-stationary tail model")
    common(sp, seed=False)
    sp.add_argument("--tau", type=float)
    sp.set_defaults(func=cmd_fit_gpd)

    sp = sub.add_parser("forward-select", help="forward selection of scale terms (CSV)")
    common(sp, seed=False)
    sp.add_argument("--pool", nargs="+", required=True, help='terms such as "ind(season==1)" "crs(V3, B=4)"')
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--tau", type=float)
    sp.set_defaults(func=cmd_forward_select)

    sp = sub.add_parser("quantile", help="conditional or marginal quantiles")
    common(sp)
    sp.add_argument("-p", type=float, required=True)
    sp.add_argument("--marginal", action="store_true")
    sp.add_argument("--rows", help="CSV of covariate rows for conditional quantiles")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--boot", type=int, default=0)
    sp.add_argument("--block-mean", type=float, default=50)
    sp.add_argument("--level", type=float, default=0.95)
    sp.set_defaults(func=cmd_quantile)

    sp = sub.add_parser("dep-measures", help="pairwise chi/eta heat-map table (CSV)")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--columns", nargs="*")
    sp.add_argument("--u", type=float, default=0.95)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_dep_measures)

    sp = sub.add_parser("cluster", help="group variables by chi connectivity")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--columns", nargs="*")
    sp.add_argument("--u", type=float, default=0.95)
    sp.add_argument("--c", type=float, default=0.1)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("joint-prob", help="joint tail probabilities")
    sp.add_argument("method", choices=["minproj", "condex"])
    sp.add_argument("-i", "--input")
    sp.add_argument("--targets", nargs="*", help="minproj targets, e.g. y=6 v=7")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--groups", help="JSON file with a 'groups' list (1-based)")
    sp.add_argument("--levels", choices=["year", "month"])
    sp.add_argument("--boot", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--config")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_joint_prob)

    sp = sub.add_parser("run", help="run a full workflow (c1-c4)")
    sp.add_argument("workflow", choices=["c1", "c2", "c3", "c4"])
    sp.add_argument("-i", "--input")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--boot", type=int)
    sp.add_argument("--block-mean", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except EvtError as exc:
        print(f"evtkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
