"""Command-line entry point: ``jsrt fit|predict|bench|shrinkage|ablate``.

Exit status: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from . import fit as fit_model
from .bench import (
    DEFAULT_GRID,
    DatasetRef,
    RunSpec,
    ablation,
    parse_lambda_grid,
    run_cv,
    shrinkage_analysis,
)
from .config import ALL_METHODS, CART, P_JSRT, TREE_METHODS, InductionConfig, JsConfig
from .data import load_csv, mse
from .errors import ConfigError, DimensionMismatch, JsrtDataError
from .persist import load_model, save_model
from .report import (
    ablation_table,
    delimited,
    mse_table,
    render_ablation,
    render_bench,
    render_shrinkage,
    shrinkage_table,
)
from .synthetic import SUITE

log = logging.getLogger("jsrt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _target(text):
    return int(text) if text.lstrip("-").isdigit() else text


def _add_spec_flags(p, default_min_leaf=5, methods=(CART, P_JSRT)):
    p.add_argument("--spec", help="run spec JSON file (overrides the dataset/protocol flags)")
    p.add_argument("--data", action="append", default=[], metavar="CSV", help="dataset file, repeatable")
    p.add_argument("--target", type=_target, default=-1, help="target column name or index (default: last)")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--synthetic", action="append", default=[], metavar="NAME",
                   help=f"bundled dataset, repeatable; 'all' for the suite ({', '.join(s.name for s in SUITE)})")
    p.add_argument("--methods", default=",".join(methods), help=f"comma list from {','.join(ALL_METHODS)}")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-split", type=int, default=20)
    p.add_argument("--min-leaf", type=int, default=default_min_leaf)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="lambda for C-JSRT/CP-JSRT")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--csv", help="write the summary table as CSV here")


def _spec_from_args(args) -> RunSpec:
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise JsrtDataError(f"cannot read run spec: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise JsrtDataError(f"run spec is not valid JSON: {exc.msg}") from exc
        return RunSpec.from_dict(doc)
    refs = [DatasetRef(path=p, target=args.target, header=not args.no_header) for p in args.data]
    for name in args.synthetic:
        names = [s.name for s in SUITE] if name == "all" else [name]
        refs += [DatasetRef(synthetic=n) for n in names]
    return RunSpec(
        datasets=tuple(refs),
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        k=args.folds,
        repeats=args.repeats,
        seed=args.seed,
        min_split=args.min_split,
        min_leaf=args.min_leaf,
        lam=args.lam,
        knn_k=args.knn_k,
    )


def _write_outputs(args, doc, headers, rows):
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(_json_safe(doc), fh, indent=1, allow_nan=False)
            fh.write("\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(delimited(headers, rows))


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def cmd_fit(args):
    ds = load_csv(args.data, args.target, not args.no_header)
    js = None if args.method == CART else JsConfig(lam=args.lam)
    config = InductionConfig(args.min_split, args.min_leaf, args.method, js)
    model = fit_model(ds.features, ds.targets, config)
    model.metadata["feature_names"] = list(ds.feature_names)
    model.metadata["seed"] = args.seed
    save_model(model, args.out)
    train = mse(model.predict(ds.features), ds.targets)
    print(f"{args.method}: {model.n_leaves} leaves, n={ds.n}, training MSE {train:.6g} -> {args.out}")


def _read_matrix(path, header):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise JsrtDataError(f"cannot read {path}: {exc}") from exc
    names = [c.strip() for c in rows.pop(0)] if header and rows else None
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise JsrtDataError(f"{path}: non-numeric cell ({exc})") from exc
    if data.size and not np.isfinite(data).all():
        raise JsrtDataError(f"{path}: non-finite values")
    return names, data.reshape(len(rows), -1)


def cmd_predict(args):
    model = load_model(args.model)
    names, data = _read_matrix(args.data, not args.no_header)
    target = None
    cols = list(range(data.shape[1]))
    if args.target is not None:
        t = names.index(args.target) if names and args.target in names else int(args.target)
        t %= data.shape[1]
        target = data[:, t]
        cols.remove(t)
    wanted = model.metadata.get("feature_names")
    if names and wanted and all(w in names for w in wanted):
        cols = [names.index(w) for w in wanted]
    X = data[:, cols]
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, file has {X.shape[1]}")
    pred = model.predict(X)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        out.write("prediction\n")
        out.writelines(f"{v!r}\n" for v in pred.tolist())
    finally:
        if args.out:
            out.close()
    if target is not None:
        print(f"MSE {mse(pred, target):.6g} over {len(pred)} rows", file=sys.stderr)


def cmd_bench(args):
    spec = _spec_from_args(args)
    report = run_cv(spec)
    print(render_bench(report))
    _write_outputs(args, report.to_dict(), *mse_table(report))


def cmd_shrinkage(args):
    spec = _spec_from_args(args)
    analysis = shrinkage_analysis(spec)
    print(render_shrinkage(analysis))
    _write_outputs(args, analysis.to_dict(), *shrinkage_table(analysis))


def cmd_ablate(args):
    spec = _spec_from_args(args)
    grid = parse_lambda_grid(args.lambda_grid) if args.lambda_grid else (spec.lambdas or DEFAULT_GRID)
    if not grid:
        raise ConfigError("empty lambda grid")
    spec = RunSpec(**{**{f: getattr(spec, f) for f in spec.__dataclass_fields__}, "lambdas": tuple(grid)})
    report = ablation(spec, include_control=not args.no_control)
    print(render_ablation(report))
    _write_outputs(args, report.to_dict(), *ablation_table(report))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jsrt", description="Regression trees with James-Stein leaf estimation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit one tree and save it as JSON")
    f.add_argument("--data", required=True)
    f.add_argument("--target", type=_target, default=-1)
    f.add_argument("--no-header", action="store_true")
    f.add_argument("--method", choices=TREE_METHODS, default=CART)
    f.add_argument("--min-split", type=int, default=20)
    f.add_argument("--min-leaf", type=int, default=5)
    f.add_argument("--lambda", dest="lam", type=float, default=1.0)
    f.add_argument("--seed", type=int, default=0, help="recorded in the model; fitting is deterministic")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="predict a CSV of feature rows with a saved model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--target", type=_target, default=None, help="column to drop (and score against)")
    pr.add_argument("--no-header", action="store_true")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_predict)

    b = sub.add_parser("bench", help="repeated k-fold MSE and timing comparison")
    _add_spec_flags(b)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("shrinkage", help="shrink weight vs MSE reduction across datasets")
    _add_spec_flags(s)
    s.set_defaults(func=cmd_shrinkage)

    a = sub.add_parser("ablate", help="lambda sweep for C-JSRT / CP-JSRT")
    _add_spec_flags(a, default_min_leaf=10, methods=("C-JSRT", "CP-JSRT"))
    a.add_argument("--lambda-grid", help='"start:stop:step" or comma list (default 1:50:5)')
    a.add_argument("--no-control", action="store_true", help="skip the lambda=0 control run")
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"jsrt: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"jsrt: error: {exc}", file=sys.stderr)
        return 1
    except (JsrtDataError, FileNotFoundError) as exc:
        print(f"jsrt: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
