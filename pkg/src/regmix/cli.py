"""Command line entry point: ``regmix generate | fit | bench``.

Exit codes: 0 success, 2 parse/config error, 3 every run failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datagen import DatasetSpec, generate
from .errors import InvalidParameter, ParseError, RegmixError
from .gmm import FitConfig
from .harness import (
    METHODS,
    ExperimentConfig,
    MethodSpec,
    emit_report,
    load_dataset,
    run_experiment,
    run_one,
    save_dataset,
    standardize,
)
from .search import SearchConfig

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="regmix", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic labelled dataset as CSV")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--c", type=float, required=True, help="target minimum separation index")
    g.add_argument("--n", type=int, default=None, help="sample count (default 100*k)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="fit one method on a CSV dataset")
    f.add_argument("--data", required=True)
    f.add_argument("--method", default="gmm_hg", choices=METHODS)
    f.add_argument("--regularizer", default="shrunk")
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--seed", type=int, default=1)
    f.add_argument("--no-labels", action="store_true", help="last column is a feature, not a label")
    f.add_argument("--standardize", action="store_true", help="z-score features first")
    f.add_argument("--n-it", type=int, default=100)
    f.add_argument("--tolerance", type=float, default=0.1)
    f.add_argument("--max-iterations", type=int, default=100)

    b = sub.add_parser("bench", help="run a JSON experiment config")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.add_argument("--standardize", action="store_true", help="z-score features first")
    return p


def _generate(args):
    spec = DatasetSpec(k=args.k, d=args.d, c=args.c, n=args.n, seed=args.seed)
    data, truth = generate(spec)
    save_dataset(args.out, data, truth.labels)
    print(json.dumps({"out": args.out, "n": len(data), "d": spec.d, "k": spec.k}))
    return EXIT_OK


def _fit(args):
    data, labels = load_dataset(args.data, has_labels=not args.no_labels)
    if args.standardize:
        data = standardize(data)
    spec = MethodSpec.parse({"method": args.method, "regularizer": args.regularizer})
    record = run_one(
        data, labels, args.k, spec, args.seed,
        FitConfig(args.tolerance, args.max_iterations), SearchConfig(n_it=args.n_it),
    )
    print(json.dumps(record.__dict__, default=str))
    return EXIT_FAILED if record.failed else EXIT_OK


def _bench(args):
    config = ExperimentConfig.from_json(args.config)
    if args.standardize:
        config.standardize = True
    records = run_experiment(config)
    if all(r.failed for r in records):
        logging.error("every run failed")
        return EXIT_FAILED
    emit_report(records, args.out, args.format, config.reference)
    print(f"wrote {len(records)} runs to {Path(args.out)}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    handler = {"generate": _generate, "fit": _fit, "bench": _bench}[args.command]
    try:
        return handler(args)
    except (ParseError, InvalidParameter) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
