"""Command-line interface: bounds, quantiles, rank detection on CSV, simulations.

Exit codes: 0 success, 1 I/O failure, 2 argument error, 3 malformed input
file, 4 degenerate data.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .detect import D_CAP, DegenerateDataError, detect
from .montecarlo import ExperimentConfig, FactorModelParams, simulate, summarize
from .packing import ProblemDims, msq_exact_quantile, msq_limit_quantile, saber, saber_tail_bound, sabre, std_constants
from .rex import rex_bound
from .specfun import DomainError

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_FORMAT, EXIT_DEGENERATE = 0, 1, 2, 3, 4

# beyond this the exact finite-p law is not worth evaluating (p ~ 1e300)
_EXACT_LOG_P_MAX = 690.0

RECORD_HEADER = ("replicate", "d_hat_real", "d_hat", "ci_upper", "est_solved", "ci_solved")


class InputFormatError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fail(code: int, message: str) -> int:
    print(f"saberrex: {message}", file=sys.stderr)
    return code


def _emit(record: dict, fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "json":
        stream.write(json.dumps(record, indent=2) + "\n")
    elif fmt == "csv":
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(record.keys())
        w.writerow(["" if v is None else v for v in record.values()])
    else:
        width = max(len(k) for k in record)
        for k, v in record.items():
            if isinstance(v, float):
                v = f"{v:.10g}"
            stream.write(f"{k:<{width}}  {'-' if v is None else v}\n")


def _dims(args, n) -> ProblemDims:
    return ProblemDims.of(n, p=args.p, log_p=args.log_p)


# ---------------------------------------------------------------------------
# subcommands


def cmd_bound(args) -> dict:
    kind = args.kind
    if kind == "rex":
        if args.d is None:
            raise DomainError("--d is required for --kind rex")
        n = args.d
        value = rex_bound(args.d, p=args.p, log_p=args.log_p)
    else:
        if args.n is None:
            raise DomainError(f"--n is required for --kind {kind}")
        n = args.n - 1 if kind == "sabre" else args.n
        value = saber(_dims(args, n)) if kind == "saber" else sabre(args.n, p=args.p, log_p=args.log_p)
    dims = _dims(args, n)
    tail = None
    if args.delta is not None:
        if kind == "rex":
            raise DomainError("--delta applies to saber/sabre only")
        tail = saber_tail_bound(dims, args.delta)
    return {
        "kind": kind,
        "n": args.n,
        "d": args.d,
        "p": args.p,
        "log_p": dims.log_p,
        "value": value,
        "delta": args.delta,
        "tail_bound": tail,
    }


def cmd_quantile(args) -> dict:
    if not 0.0 < args.q < 1.0:
        raise DomainError(f"--q must lie in (0, 1), got {args.q}")
    dims = _dims(args, args.n)
    const = std_constants(dims)
    msq = msq_limit_quantile(args.q, dims)
    exact = msq_exact_quantile(args.q, dims) if dims.log_p <= _EXACT_LOG_P_MAX else None
    return {
        "n": args.n,
        "p": args.p,
        "log_p": dims.log_p,
        "q": args.q,
        "a": const.a,
        "b": const.b,
        "c": const.c,
        "msq_quantile": msq,
        "m_quantile": math.sqrt(max(msq, 0.0)),
        "msq_quantile_exact": exact,
        "m_quantile_exact": None if exact is None else math.sqrt(exact),
    }


def read_matrix(path: str) -> np.ndarray:
    """Comma-separated numbers, one observation per row, optional header row."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except UnicodeDecodeError as exc:
        raise InputFormatError(f"{path}: not UTF-8 text ({exc.reason})") from None
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]  # header
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    width = len(rows[0])
    values = []
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InputFormatError(f"{path}: data row {i} has {len(row)} fields, expected {width}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise InputFormatError(f"{path}: data row {i}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise InputFormatError(f"{path}: data row {i} has a non-finite value")
        values.append(vals)
    if width < 2:
        raise InputFormatError(f"{path}: need at least two columns")
    return np.array(values, dtype=float)


def cmd_detect(args) -> dict:
    W = read_matrix(args.csv)
    res = detect(W, pre_standardized=args.pre_standardized, alpha=args.alpha, d_cap=args.d_cap)
    return {
        "n": W.shape[0],
        "p": W.shape[1],
        "alpha": res.alpha,
        "k_bar": res.k_bar,
        "scale": res.scale,
        "d_hat_real": res.d_hat_real,
        "d_hat": res.d_hat,
        "estimate_solved": res.estimate_solved,
        "ci_upper": res.ci_upper,
        "ci_upper_real": res.ci_upper_real,
        "ci_solved": res.ci_solved,
    }


def _write_records(path: str, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in records:
            w.writerow([
                r.replicate,
                repr(r.d_hat_real),
                r.d_hat,
                "" if r.ci_upper is None else r.ci_upper,
                int(r.est_solved),
                int(r.ci_solved),
            ])


def cmd_simulate(args) -> dict:
    if args.replicates < 1:
        raise DomainError("--replicates must be >= 1")
    if args.equal_variance:
        params = FactorModelParams.equal_variance(args.n, args.p, args.d, seed=args.seed, tau=args.tau)
    else:
        params = FactorModelParams.noiseless(args.n, args.p, args.d, seed=args.seed)
    cfg = ExperimentConfig(params, replicates=args.replicates, alpha=args.alpha,
                           noiseless=not args.equal_variance, d_cap=args.d_cap)
    threads = args.threads or os.cpu_count() or 1
    records = simulate(cfg, threads=threads)
    report = summarize(cfg, records)
    out = {
        "case": "equal_variance" if args.equal_variance else "noiseless",
        "n": report.n,
        "p": report.p,
        "d": report.d,
        "replicates": report.replicates,
        "alpha": report.alpha,
        "seed": report.seed,
        "tau": params.tau,
        "sigma": params.sigma,
        "mse": report.mse,
        "coverage": report.coverage,
        "mean_upper": report.mean_upper,
        "median_upper": report.median_upper,
        "unsolved_ci_count": report.unsolved_ci_count,
        "unsolved_est_count": report.unsolved_est_count,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(out, indent=2) + "\n")
        records_path = args.records or os.path.splitext(args.out)[0] + "_replicates.csv"
        _write_records(records_path, records)
    elif args.records:
        _write_records(args.records, records)
    return out


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="saberrex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_p(sp, required=True):
        g = sp.add_mutually_exclusive_group(required=required)
        g.add_argument("--p", type=int, help="number of vectors / variables")
        g.add_argument("--log-p", type=float, dest="log_p", help="natural log of p, for huge p")

    def add_format(sp, default="table"):
        sp.add_argument("--format", choices=("json", "csv", "table"), default=default)

    b = sub.add_parser("bound", help="SABER / SABRE / ReX bound")
    b.add_argument("--kind", choices=("saber", "sabre", "rex"), default="saber")
    b.add_argument("--n", type=int, help="sphere dimension (saber) or sample size (sabre)")
    b.add_argument("--d", type=int, help="rank (rex)")
    add_p(b)
    b.add_argument("--delta", type=float, help="also report the finite-sample tail bound")
    add_format(b)
    b.set_defaults(func=cmd_bound)

    q = sub.add_parser("quantile", help="limit-law quantile of the squared maximal inner product")
    q.add_argument("--n", type=int, required=True)
    add_p(q)
    q.add_argument("--q", type=float, required=True)
    add_format(q)
    q.set_defaults(func=cmd_quantile)

    d = sub.add_parser("detect", help="estimate the factor rank of a CSV data matrix")
    d.add_argument("csv")
    d.add_argument("--pre-standardized", action="store_true",
                   help="skip centering/scaling (data already mean 0, variance 1)")
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--d-cap", type=int, default=D_CAP, dest="d_cap")
    add_format(d, default="json")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("simulate", help="run the factor-model simulation protocol")
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--p", type=int, default=8000)
    s.add_argument("--d", type=int, default=11)
    s.add_argument("--replicates", "-N", type=int, default=1000)
    s.add_argument("--seed", type=int, required=True)
    case = s.add_mutually_exclusive_group()
    case.add_argument("--noiseless", action="store_true", default=True)
    case.add_argument("--equal-variance", action="store_true", dest="equal_variance")
    s.add_argument("--tau", type=float, default=2.0, help="signal scale in the equal-variance case")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--d-cap", type=int, default=D_CAP, dest="d_cap")
    s.add_argument("--threads", type=int, default=0, help="worker threads (0: all cores)")
    s.add_argument("--out", help="JSON report path (per-replicate CSV written alongside)")
    s.add_argument("--records", help="per-replicate CSV path")
    add_format(s)
    s.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        record = args.func(args)
    except InputFormatError as exc:
        return _fail(EXIT_FORMAT, str(exc))
    except DegenerateDataError as exc:
        return _fail(EXIT_DEGENERATE, str(exc))
    except (DomainError, ValueError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    _emit(record, args.format)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
