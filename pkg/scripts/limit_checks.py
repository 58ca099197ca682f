"""Distributional checks of the maximal inner product against its exact and limit laws.

Prints KS distances for: the exact finite-p law, the finite-n limit F_n and
the Gumbel double limit, plus the chi-square diagnostic in the dense regime.
Optionally writes the empirical and reference CDFs on a grid for plotting.

    python3 scripts/limit_checks.py --seed 0 --draws 10000 --plot-csv cdfs.csv
"""
import argparse
import csv
import sys

import numpy as np

from saberrex.montecarlo import ks_distance, prop1_diagnostic, replicate_rng, sample_msq
from saberrex.packing import ProblemDims, msq_exact_cdf, msq_limit_cdf, std_constants
from saberrex.specfun import gumbel_cdf


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--draws", type=int, default=10_000)
    ap.add_argument("--dims", type=int, nargs="+", default=[5, 20, 200])
    ap.add_argument("--p", type=int, default=10**5)
    ap.add_argument("--method", choices=("vectors", "stream", "inverse"), default="inverse")
    ap.add_argument("--plot-csv", help="write n, x, empirical, F_n, Gumbel on a grid")
    args = ap.parse_args(argv)

    grid = np.linspace(-4, 6, 201)
    plot_rows = []
    print(f"{'n':>6} {'KS exact':>10} {'KS F_n':>10} {'KS Gumbel':>10}")
    for i, n in enumerate(args.dims):
        dims = ProblemDims(n, p=args.p)
        msq = sample_msq(args.p, n, replicate_rng(args.seed, i), size=args.draws, method=args.method)
        x = std_constants(dims).standardize(msq)
        ks_exact = ks_distance(msq, lambda w: msq_exact_cdf(w, dims))
        ks_fn = ks_distance(x, lambda t: msq_limit_cdf(t, n))
        ks_gum = ks_distance(x, gumbel_cdf)
        print(f"{n:>6} {ks_exact:>10.4f} {ks_fn:>10.4f} {ks_gum:>10.4f}")
        xs = np.sort(x)
        emp = np.searchsorted(xs, grid, side="right") / len(xs)
        plot_rows += [(n, g, e, f, h) for g, e, f, h in zip(grid, emp, msq_limit_cdf(grid, n), gumbel_cdf(grid))]

    print("\nchi-square diagnostic (max_j X_j^2 vs chi2_d)")
    for d, p in [(1, 100), (4, 10**6), (10, 10**6), (30, 100)]:
        ks = prop1_diagnostic(p, d, 2000, replicate_rng(args.seed, 100 + d), method="inverse")
        print(f"  d={d:<3} p={p:<8} KS={ks:.4f}")

    if args.plot_csv:
        with open(args.plot_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "x", "empirical", "limit_fn", "gumbel"])
            w.writerows(plot_rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
