"""Replicate the simulation tables: every (n, d) cell at p = 8000.

    python3 scripts/run_tables.py --case noiseless --seed 0
    python3 scripts/run_tables.py --case equal-variance --seed 0 --out table2.csv

One summary row per cell is printed and optionally written as CSV.
"""
import argparse
import csv
import os
import sys
import time

from saberrex.montecarlo import ExperimentConfig, FactorModelParams, run_experiment

FIELDS = ["n", "d", "mse", "coverage", "mean_upper", "median_upper",
          "unsolved_ci_count", "unsolved_est_count", "seconds"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", choices=("noiseless", "equal-variance"), default="noiseless")
    ap.add_argument("--p", type=int, default=8000)
    ap.add_argument("--ns", type=int, nargs="+", default=[10, 20, 30])
    ap.add_argument("--ds", type=int, nargs="+", default=[11, 16, 21])
    ap.add_argument("--replicates", "-N", type=int, default=1000)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", help="CSV file for the summary rows")
    args = ap.parse_args(argv)

    noiseless = args.case == "noiseless"
    rows = []
    print(" ".join(f"{f:>12}" for f in FIELDS))
    for d in args.ds:
        for n in args.ns:
            if noiseless:
                params = FactorModelParams.noiseless(n, args.p, d, seed=args.seed)
            else:
                params = FactorModelParams.equal_variance(n, args.p, d, seed=args.seed)
            cfg = ExperimentConfig(params, replicates=args.replicates, alpha=args.alpha, noiseless=noiseless)
            t0 = time.perf_counter()
            rep = run_experiment(cfg, threads=args.threads)
            row = {**{k: getattr(rep, k) for k in FIELDS[:-1]}, "seconds": time.perf_counter() - t0}
            rows.append(row)
            print(" ".join(f"{v:>12.4f}" if isinstance(v, float) else f"{v!s:>12}" for v in row.values()),
                  flush=True)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
