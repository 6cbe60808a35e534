"""Command-line interface reproducing each stage of the experiment protocol.

Subcommands compose: ``synth`` writes a ground-truth dataset, ``binarize``
thresholds it into logical labels, ``split`` cuts train/val/test files,
``fit``/``recover`` train on logical labels, ``predict`` applies a saved
model, ``eval`` compares two distribution files, ``grid`` searches
hyper-parameters, and ``experiment`` runs the whole protocol in one go.
Every run accepts ``--seed`` and repeats it in its output; model and
report files are JSON, datasets are the csv-ld / csv-logical formats
documented in :mod:`labeldist.datasets`.
"""

import argparse
import csv
import json
import sys
from dataclasses import asdict

import numpy as np

from .core import HyperParams
from .datasets import (
    LdlDataset,
    SplitSpec,
    binarize,
    load_dataset,
    save_dataset,
    split,
    synth_dataset,
    with_logical_labels,
)
from .experiment import (
    GridSpec,
    grid_search,
    run_experiment,
    write_report,
)
from .metrics import evaluate
from .solver import fit, predict_unseen

VARIANT_FLAG = {"mismatch": "mismatch", "irrelevant": "irrelevant"}


def _sigma(text):
    if text == "auto":
        return "auto"
    return float(text)


def _grid_values(text):
    return tuple(float(v) for v in text.split(","))


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0,
                        help="random seed, echoed in every output")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with HyperParams field values")
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--beta", type=float, default=None)
    parser.add_argument("--gamma", type=float, default=None)
    parser.add_argument("--k", type=int, default=None,
                        help="number of nearest neighbors")
    parser.add_argument("--sigma", type=_sigma, default=None,
                        help="RBF bandwidth, a number or 'auto'")
    parser.add_argument("--outer-iters", type=int, default=None)


def _params_from(args):
    fields = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            fields.update(json.load(fh))
    for flag, name in (("alpha", "alpha"), ("beta", "beta"),
                       ("gamma", "gamma"), ("k", "k_neighbors"),
                       ("sigma", "sigma"), ("outer_iters", "outer_iters")):
        value = getattr(args, flag)
        if value is not None:
            fields[name] = value
    fields["seed"] = args.seed
    return HyperParams(**fields)


def _load_auto(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
    fmt = "csv-ld" if ",d0" in header or header.startswith("d0") else "csv-logical"
    return load_dataset(path, fmt)


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _grid_spec(args):
    kwargs = {}
    if args.alpha_grid is not None:
        kwargs["alpha_grid"] = args.alpha_grid
    if args.beta_grid is not None:
        kwargs["beta_grid"] = args.beta_grid
    if args.gamma_grid is not None:
        kwargs["gamma_grid"] = args.gamma_grid
    if args.selection_metric is not None:
        kwargs["selection_metric"] = args.selection_metric
    return GridSpec(**kwargs)


def _add_grid_flags(parser):
    parser.add_argument("--alpha-grid", type=_grid_values, default=None,
                        help="comma-separated values")
    parser.add_argument("--beta-grid", type=_grid_values, default=None)
    parser.add_argument("--gamma-grid", type=_grid_values, default=None)
    parser.add_argument("--selection-metric", default=None,
                        choices=["chebyshev", "clark", "one_error",
                                 "intersection"])


def cmd_synth(args):
    ds = synth_dataset(args.n, args.m, args.c, n_clusters=args.clusters,
                       temperature=args.temperature,
                       sparsify_delta=args.sparsify_delta, seed=args.seed)
    save_dataset(ds, args.out, "csv-ld")
    _emit({"command": "synth", "seed": args.seed, "out": args.out,
           "n": args.n, "m": args.m, "c": args.c})


def cmd_binarize(args):
    ds = load_dataset(args.data, "csv-ld")
    Y = binarize(ds.D_true, args.delta)
    out_ds = LdlDataset(name=ds.name, X=ds.X, Y=Y)
    save_dataset(out_ds, args.out, "csv-logical")
    _emit({"command": "binarize", "seed": args.seed, "delta": args.delta,
           "out": args.out, "positives": int(Y.sum())})


def cmd_split(args):
    ds = _load_auto(args.data)
    fmt = "csv-ld" if ds.D_true is not None else "csv-logical"
    spec = SplitSpec(seed=args.seed)
    parts = split(ds, spec)
    outs = {}
    for part, tag in zip(parts, ("train", "val", "test")):
        path = f"{args.out_prefix}.{tag}.csv"
        save_dataset(part, path, fmt)
        outs[tag] = path
    _emit({"command": "split", "seed": args.seed, "sizes":
           {tag: parts[i].n for i, tag in enumerate(("train", "val", "test"))},
           "files": outs})


def _fit_from_args(args, params):
    ds = _load_auto(args.data)
    if ds.Y is None:
        ds = with_logical_labels(ds, args.delta)
    result = fit(ds.X, ds.Y, params)
    return ds, result


def _model_payload(result, params, seed):
    return {
        "seed": seed,
        "hyperparams": asdict(params),
        "W": result.W.tolist(),
        "converged": result.converged,
        "outer_iterations": len(result.inner_diagnostics),
        "final_objective": result.objective_trace[-1].total,
        "admm_residual_inf": (result.inner_diagnostics[-1].admm_residual_inf
                              if result.inner_diagnostics else None),
    }


def cmd_fit(args):
    params = _params_from(args)
    ds, result = _fit_from_args(args, params)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(_model_payload(result, params, args.seed), fh, indent=2)
        fh.write("\n")
    if args.recovered_out:
        rec = LdlDataset(name=ds.name, X=ds.X, D_true=result.D)
        save_dataset(rec, args.recovered_out, "csv-ld")
    _emit({"command": "fit", "seed": args.seed, "out": args.out,
           "converged": result.converged,
           "final_objective": result.objective_trace[-1].total})


def cmd_recover(args):
    params = _params_from(args)
    ds, result = _fit_from_args(args, params)
    rec = LdlDataset(name=ds.name, X=ds.X, D_true=result.D)
    save_dataset(rec, args.out, "csv-ld")
    _emit({"command": "recover", "seed": args.seed, "out": args.out,
           "converged": result.converged})


def cmd_predict(args):
    with open(args.model, encoding="utf-8") as fh:
        model = json.load(fh)
    W = np.asarray(model["W"], dtype=np.float64)
    ds = _load_auto(args.data)
    P = predict_unseen(W, ds.X)
    out_ds = LdlDataset(name=ds.name, X=ds.X, D_true=P)
    save_dataset(out_ds, args.out, "csv-ld")
    _emit({"command": "predict", "seed": args.seed, "out": args.out,
           "n": ds.n})


def cmd_eval(args):
    truth = load_dataset(args.true, "csv-ld")
    pred = load_dataset(args.pred, "csv-ld")
    report = evaluate(truth.D_true, pred.D_true,
                      VARIANT_FLAG[args.one_error_variant])
    payload = {"command": "eval", "seed": args.seed, **asdict(report)}
    if args.format == "csv":
        rows = [["metric", "value"]] + [[k, repr(v)]
                                        for k, v in asdict(report).items()]
        if args.out:
            with open(args.out, "w", newline="", encoding="utf-8") as fh:
                csv.writer(fh).writerows(rows)
        else:
            csv.writer(sys.stdout).writerows(rows)
        return
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    _emit(payload)


def cmd_grid(args):
    params = _params_from(args)
    train = _load_auto(args.train)
    if train.Y is None:
        train = with_logical_labels(train, args.delta)
    val = _load_auto(args.val)
    grid = _grid_spec(args)
    best, records = grid_search(train, val, grid, params,
                                one_error_variant=VARIANT_FLAG[args.one_error_variant])
    payload = {
        "command": "grid",
        "seed": args.seed,
        "best": {"alpha": best.alpha, "beta": best.beta, "gamma": best.gamma},
        "selection_metric": grid.selection_metric,
        "cells": [asdict(r) for r in records],
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    _emit({k: payload[k] for k in ("command", "seed", "best")})


def cmd_experiment(args):
    params = _params_from(args)
    ds = load_dataset(args.data, "csv-ld")
    report = run_experiment(
        ds,
        spec=SplitSpec(seed=args.seed),
        grid=_grid_spec(args),
        params=params,
        delta=args.delta,
        one_error_variant=VARIANT_FLAG[args.one_error_variant],
        timing=args.timing,
    )
    fmt = "structured-text" if args.format == "text" else "csv-tables"
    written = write_report(report, args.out, fmt)
    _emit({"command": "experiment", "seed": args.seed, "files": written,
           "chosen": {k: report.hyperparams[k]
                      for k in ("alpha", "beta", "gamma")},
           "recovery_chebyshev": report.recovery.chebyshev,
           "baseline_chebyshev": report.baseline_recovery.chebyshev})


def build_parser():
    parser = argparse.ArgumentParser(
        prog="labeldist",
        description="Label-distribution learning directly from binary labels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic csv-ld dataset")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--clusters", type=int, default=5)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--sparsify-delta", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("binarize", help="threshold csv-ld into csv-logical")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("split", help="shuffle and cut 60/20/20")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("fit", help="train on logical labels, save the model")
    _add_common(p)
    p.add_argument("--data", required=True,
                   help="csv-logical file, or csv-ld binarized at --delta")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--recovered-out", default=None,
                   help="optional csv-ld path for the recovered distributions")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("recover", help="recover training label distributions")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--out", required=True, help="csv-ld path")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("predict", help="predict distributions for new samples")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="compare two csv-ld files")
    _add_common(p)
    p.add_argument("--true", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--one-error-variant", choices=list(VARIANT_FLAG),
                   default="irrelevant")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="hyper-parameter search on train/val files")
    _add_common(p)
    _add_grid_flags(p)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--one-error-variant", choices=list(VARIANT_FLAG),
                   default="irrelevant")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("experiment", help="full protocol on a csv-ld dataset")
    _add_common(p)
    _add_grid_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--one-error-variant", choices=list(VARIANT_FLAG),
                   default="irrelevant")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("--out", required=True)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock times (makes reports nondeterministic)")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
