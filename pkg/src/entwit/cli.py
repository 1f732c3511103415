"""Command-line driver: ``entwit <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ann import TrainingHyper, init_model, predict, train
from .collective import SUPPORTED_N, batch_features, default_catalog, load_catalog
from .errors import EntwitError, SchemaError
from .evaluation import (bin_errors_by_min_eig, confusion, select_epsilon, table1_compare,
                         threshold_sweep)
from .io import (build_features, load_dataset, load_model, save_dataset, save_model, write_csv,
                 write_json)
from .sampling import parse_mix, sample_dataset, worker_count
from .werner import model_catalog, onset, scan_rows, werner_scan
from .witnesses import COLLECTIBILITY_CATALOG, WITNESSES, evaluate_all

log = logging.getLogger("entwit")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, step = (float(t) for t in text.split(":"))
        except ValueError:
            raise EntwitError(f"bad grid {text!r}; use start:stop:step") from None
        if step <= 0 or stop < start:
            raise EntwitError(f"bad grid {text!r}")
        n = int(round((stop - start) / step)) + 1
        return np.round(start + step * np.arange(n), 10)
    try:
        return np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError:
        raise EntwitError(f"bad grid {text!r}") from None


def _catalog_from_args(args):
    if args.catalog_file:
        return load_catalog(args.catalog_file)
    return default_catalog(args.catalog)


def cmd_gen_dataset(args) -> int:
    mix = parse_mix(args.mix)
    catalog = _catalog_from_args(args)
    states = sample_dataset(mix, args.count, args.seed, workers=worker_count())
    ds = build_features(states, catalog, keep_states=args.with_states)
    header = save_dataset(ds, args.out)
    c = header["counts"]
    print(f"wrote {header['count']} records (N={catalog.n}) to {args.out}: "
          f"entangled {c['entangled']} ({c['entangled'] / header['count']:.4f}), "
          f"separable {c['separable']} ({c['separable'] / header['count']:.4f})")
    return EXIT_OK


def _load_hyper(path, overrides):
    d = {}
    if path:
        with open(path) as fh:
            d = json.load(fh)
    d.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return TrainingHyper.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise EntwitError(str(exc)) from None


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    hyper = _load_hyper(args.hyper, {"seed": args.seed, "epochs": args.epochs})
    model = init_model(ds.n, hyper.seed)
    model, report = train(model, ds.probs, ds.entangled, hyper)
    model.train_meta["catalog"] = ds.catalog.to_json()
    save_model(model, args.out)
    report_path = args.report or str(Path(args.out).with_suffix("")) + ".training.csv"
    rows = [{"epoch": i, "loss": report.loss[i], "val_loss": report.val_loss[i],
             "val_accuracy": report.val_accuracy[i]} for i in range(report.epochs_run)]
    write_csv(report_path, "entwit-training", ["epoch", "loss", "val_loss", "val_accuracy"], rows)
    print(f"trained N={ds.n} model for {report.epochs_run} epochs "
          f"(best epoch {report.best_epoch}); wrote {args.out} and {report_path}")
    return EXIT_OK


def _check_model_matches(model, ds):
    if model.n_in != ds.n:
        raise SchemaError(f"model expects N={model.n_in} but the dataset has N={ds.n}")
    if not model_catalog(model).same_as(ds.catalog):
        raise SchemaError("model and dataset were built from different projection settings")


REPORT_COLS = ["epsilon", "te", "fe", "ts", "fs", "type1_rate", "type2_rate", "success_rate"]


def cmd_eval(args) -> int:
    ds = load_dataset(args.data)
    model = load_model(args.model)
    _check_model_matches(model, ds)
    eps = parse_grid(args.epsilons)
    w = predict(model, ds.probs)
    reports = threshold_sweep(w, ds.entangled, eps)
    chosen = select_epsilon(reports, args.max_type1)
    pred = w < chosen.epsilon
    curve = bin_errors_by_min_eig(ds.min_pt_eig, pred != ds.entangled, args.n_bins)
    prefix = args.out
    write_csv(f"{prefix}_sweep.csv", "entwit-sweep", REPORT_COLS, [r.as_dict() for r in reports])
    bin_rows = [{"bin_lo": curve.bin_edges[i], "bin_hi": curve.bin_edges[i + 1],
                 "count": curve.counts[i], "errors": curve.errors[i],
                 "error_prob": curve.error_prob[i]} for i in range(len(curve.counts))]
    write_csv(f"{prefix}_bins.csv", "entwit-bins",
              ["bin_lo", "bin_hi", "count", "errors", "error_prob"], bin_rows)
    fixed = {f"{e:g}": confusion(w < e, ds.entangled, e).as_dict() for e in (0.5, 0.9)}
    summary = {"schema": "entwit-eval", "version": 1, "n_settings": ds.n, "count": len(ds),
               "class_counts": ds.class_counts(), "max_type1": args.max_type1,
               "selected": chosen.as_dict(), "fixed_epsilons": fixed}
    write_json(f"{prefix}_summary.json", summary)
    print(f"N={ds.n}: epsilon={chosen.epsilon:g} success={chosen.success_rate:.4f} "
          f"type1={chosen.type1_rate:.4f} type2={chosen.type2_rate:.4f}")
    return EXIT_OK


def _require_states(ds):
    if ds.rho is None:
        raise SchemaError("dataset has no embedded states; regenerate it with --with-states")


def cmd_witness_bench(args) -> int:
    ds = load_dataset(args.data)
    _require_states(ds)
    results = evaluate_all(ds.rho, WITNESSES)
    rows = []
    for name in WITNESSES:
        rep = confusion(results[name][1], ds.entangled)
        row = {"witness": name}
        row.update(rep.as_dict())
        rows.append(row)
        print(f"{name:15s} success={rep.success_rate:.4f} type1={rep.type1_rate:.4f} "
              f"type2={rep.type2_rate:.4f}")
    write_csv(args.out, "entwit-witness", ["witness"] + REPORT_COLS, rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    ds = load_dataset(args.data)
    _require_states(ds)
    confidences = {}
    for path in args.models:
        model = load_model(path)
        probs, _ = batch_features(ds.rho, model_catalog(model))
        confidences[model.n_in] = predict(model, probs)
    detections = {name: det for name, (_, det) in evaluate_all(ds.rho, WITNESSES).items()}
    rows = table1_compare(ds.entangled, confidences, detections, args.max_type1,
                          parse_grid(args.epsilons))
    write_csv(args.out, "entwit-compare", ["method", "n_settings"] + REPORT_COLS,
              [r.as_dict() for r in rows])
    for r in rows:
        rep = r.report
        print(f"{r.method:15s} N={r.n_settings:2d} type1={100 * rep.type1_rate:6.2f}% "
              f"type2={100 * rep.type2_rate:6.2f}% success={100 * rep.success_rate:6.2f}%")
    return EXIT_OK


def cmd_werner_scan(args) -> int:
    model = load_model(args.model)
    eps = [0.5, 0.9] + ([args.epsilon] if args.epsilon is not None else [])
    grid = parse_grid(args.p_grid)
    records = werner_scan(model, grid, args.shots, args.seed, epsilons=sorted(set(eps)))
    names = [s.name for s in COLLECTIBILITY_CATALOG.settings]
    model_names = model_catalog(model).names
    names = list(dict.fromkeys(model_names + names))
    cols, rows = scan_rows(records, names, model_names)
    write_csv(args.out, "entwit-werner", cols, rows)
    ps = [r.p for r in records]
    summary = {"schema": "entwit-werner-summary", "version": 1, "shots": args.shots,
               "seed": args.seed,
               "collectibility_onset": onset(ps, [r.collectibility_detected for r in records]),
               "ann_onset": {f"{e:g}": onset(ps, [r.ann_entangled[e] for r in records])
                             for e in sorted(set(eps))}}
    write_json(str(Path(args.out).with_suffix("")) + ".summary.json", summary)
    print(f"collectibility onset p={summary['collectibility_onset']}; "
          + ", ".join(f"ANN(eps={k}) onset p={v}" for k, v in summary["ann_onset"].items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entwit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-dataset", help="sample labeled states and their collective probabilities")
    g.add_argument("--mix", default="default",
                   help="'default' or e.g. 'ginibre_rank_k(1):1,werner(0.5):2,product:1'")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--catalog", type=int, default=5, choices=SUPPORTED_N)
    g.add_argument("--catalog-file", help="JSON catalog override")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--with-states", action="store_true", help="embed the 16 complex entries of rho")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_dataset)

    t = sub.add_parser("train", help="train the classifier on a dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--hyper", help="JSON hyperparameter file")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--out", required=True)
    t.add_argument("--report", help="training report CSV (default: <out>.training.csv)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="threshold sweep, selected epsilon and error bins")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--epsilons", default="0.01:0.99:0.01")
    e.add_argument("--max-type1", type=float, default=0.01)
    e.add_argument("--n-bins", type=int, default=20)
    e.add_argument("--out", required=True, help="output prefix")
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("witness-bench", help="confusion reports of the analytical witnesses")
    w.add_argument("--data", required=True)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_witness_bench)

    c = sub.add_parser("compare", help="ANN models against the analytical witnesses on one test set")
    c.add_argument("--data", required=True)
    c.add_argument("--models", nargs="+", required=True)
    c.add_argument("--epsilons", default="0.01:0.99:0.01")
    c.add_argument("--max-type1", type=float, default=0.01)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("werner-scan", help="synthetic Werner-state experiment")
    s.add_argument("--model", required=True)
    s.add_argument("--p-grid", default="0:1:0.02")
    s.add_argument("--shots", type=int, default=10000, help="trials per setting; 0 = noiseless")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--epsilon", type=float, help="extra operating threshold column")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_werner_scan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"entwit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EntwitError, ValueError) as exc:
        print(f"entwit: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
