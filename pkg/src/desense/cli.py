"""``desense`` command line.

Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments, rdca
from .errors import DataError, DesenseError

log = logging.getLogger("desense")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_common(p):
    p.add_argument("--data-dir", help=f"dataset root (default: ${experiments.DATA_ENV})")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=experiments.FORMATS, default="json")
    p.add_argument("--folds", type=int)
    p.add_argument("--split", choices=("published", "stratified"),
                   help="published keeps the HAR train/test files as shipped")
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--c-grid", type=_floats, help="comma-separated SVM C values")
    p.add_argument("--ridge-factors", type=_floats,
                   help="comma-separated ridge multipliers of trace(S_T)/M")


def build_parser():
    parser = argparse.ArgumentParser(prog="desense", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", required=True)
    run.add_argument("--out", required=True, help="report path")
    _add_common(run)

    suite = sub.add_parser("suite", help="run several experiments")
    suite.add_argument("names", nargs="*")
    suite.add_argument("--all", action="store_true")
    suite.add_argument("--out", required=True, help="output directory")
    _add_common(suite)

    fit = sub.add_parser("fit", help="fit an RDCA desensitizer on a delimited feature file")
    fit.add_argument("--features", required=True)
    fit.add_argument("--labels", required=True, help="one class name per line")
    fit.add_argument("--label-name", default="privacy")
    fit.add_argument("--ridge", type=float,
                     help="absolute ridge (default: trace(S_T)/M)")
    fit.add_argument("--delimiter", default=None, help="default: any whitespace")
    fit.add_argument("--out", required=True, help="model path")

    tr = sub.add_parser("transform", help="project a feature file with a fitted model")
    tr.add_argument("--model", required=True)
    tr.add_argument("--features", required=True)
    tr.add_argument("--subspace", choices=(rdca.NOISE, rdca.SIGNAL, rdca.FULL),
                    default=rdca.NOISE)
    tr.add_argument("--delimiter", default=None)
    tr.add_argument("--out", required=True)
    return parser


def _overrides(args):
    return {
        "seed": args.seed,
        "folds": args.folds,
        "split": args.split,
        "test_fraction": args.test_fraction,
        "c_grid": args.c_grid,
        "ridge_factors": args.ridge_factors,
        "format": args.format,
    }


def _read_features(path, delimiter):
    try:
        x = np.loadtxt(path, delimiter=delimiter, ndmin=2)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return x


def _write_features(path, z, delimiter):
    np.savetxt(path, z, fmt="%.17g", delimiter=delimiter or " ")


def cmd_run(args):
    cfg = experiments.get_config(args.experiment, **_overrides(args))
    report = experiments.run_experiment(cfg, args.data_dir, args.threads)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(experiments.emit_table(report, args.format))
    out.with_name(out.name + ".timing.json").write_text(json.dumps(report.timing, indent=2))
    log.info("wrote %s", out)


def cmd_suite(args):
    names = list(experiments.EXPERIMENTS) if args.all else args.names
    experiments.run_suite(names, args.data_dir, args.out, args.format, args.threads,
                          **_overrides(args))
    log.info("wrote %d report(s) to %s", len(names), args.out)


def _class_sort_key(name):
    # integers in numeric order first, then everything else alphabetically
    if name.lstrip("-").isdigit():
        return (0, int(name), "")
    return (1, 0, name)


def cmd_fit(args):
    x = _read_features(args.features, args.delimiter)
    try:
        raw = [ln.strip() for ln in Path(args.labels).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise DataError(str(exc)) from exc
    if len(raw) != x.shape[0]:
        raise DataError(f"{len(raw)} labels for {x.shape[0]} feature rows")
    names = sorted(set(raw), key=_class_sort_key)
    index = {n: i for i, n in enumerate(names)}
    y = np.array([index[v] for v in raw])
    ridge = args.ridge
    if ridge is None:
        centered = x - x.mean(axis=0)
        ridge = float(np.sum(centered * centered)) / x.shape[1] or 1.0
    model = rdca.fit_rdca(x, y, ridge, len(names), args.label_name, names)
    model.save(args.out)
    log.info("fitted %d components (L=%d, ridge=%g) -> %s", x.shape[1], len(names), ridge,
             args.out)


def cmd_transform(args):
    model = rdca.RdcaModel.load(args.model)
    x = _read_features(args.features, args.delimiter)
    z = rdca.project(x, rdca.subspace(model, args.subspace))
    _write_features(args.out, z, args.delimiter)


COMMANDS = {"run": cmd_run, "suite": cmd_suite, "fit": cmd_fit, "transform": cmd_transform}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except DesenseError as exc:
        print(f"desense: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
