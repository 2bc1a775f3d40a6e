"""Method x regularizer grid on a labelled CSV dataset (Iris by default).

    python scripts/run_uci.py --data fixtures/iris.csv --k 3 --runs 10 --out results/iris.csv
"""

import argparse
import logging
from pathlib import Path

from regmix.harness import ExperimentConfig, emit_report, run_experiment
from regmix.search import SearchConfig

ROOT = Path(__file__).resolve().parent.parent
REGULARIZERS = ("empirical", "shrunk", "lw", "oas")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", default=str(ROOT / "fixtures" / "iris.csv"))
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--n-it", type=int, default=100)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", default="uci_report.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO)

    methods = ["kmeans", "kmeans_hg"]
    methods += [f"{m}:{r}" for m in ("gmm", "gmm_ms", "gmm_rs", "gmm_hg") for r in REGULARIZERS]
    cfg = ExperimentConfig(
        args.data, methods, k=args.k, runs=args.runs, standardize=args.standardize,
        search=SearchConfig(n_it=args.n_it), reference="gmm_empirical",
    )
    rows = emit_report(run_experiment(cfg), args.out, "csv", cfg.reference)
    for row in rows:
        print(f"{row['method']:<24} ari={row['ari_mean']:.3f} +/- {row['ari_std']:.3f}  p={row['wilcoxon_p']}")


if __name__ == "__main__":
    main()
