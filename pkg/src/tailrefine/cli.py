"""Command line front end.

Exit status: 0 on success, 2 for domain/range/parse errors, 3 for I/O errors.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import approximations as approx
from .distributions import parse_model
from .errors import TailError
from .harness import canonical_method, emit_csv, fmt, reproduce_table1, run_convergence
from .oracles import exact_tail, mc_tail
from .tilting import solve_tilt

EXIT_DOMAIN = 2
EXIT_IO = 3


def _cmd_tilt(args, out):
    s = solve_tilt(parse_model(args.model), args.mu)
    out.write(f"beta_hat={fmt(s.beta_hat)}\n")
    out.write(f"divergence={fmt(s.divergence)}\n")
    out.write(f"variance={fmt(s.variance)}\n")
    out.write(f"log_partition_at_tilt={fmt(s.log_partition_at_tilt)}\n")
    return 0


def _cmd_tail(args, out):
    model = parse_model(args.model)
    methods = approx.METHODS if args.method == "all" else (canonical_method(args.method),)
    status = 0
    for method in methods:
        try:
            res = approx.estimate(model, args.mu, args.n, method)
        except TailError as exc:
            if len(methods) == 1:
                raise
            print(f"error: {method}: {exc}", file=sys.stderr)
            status = EXIT_DOMAIN
            continue
        c = "" if res.c_mu is None else fmt(res.c_mu)
        out.write(f"{method},{fmt(res.log_prob)},{fmt(res.prob)},{c}\n")
    return status


def _cmd_oracle(args, out):
    model = parse_model(args.model)
    if args.mc_samples is None:
        log_prob = exact_tail(model, args.n, args.mu)
        prob = 0.0 if log_prob < approx.UNDERFLOW_LOG else math.exp(log_prob)
        out.write(f"{fmt(log_prob)},{fmt(prob)}\n")
        return 0
    est = mc_tail(model, args.n, args.mu, args.mc_samples, args.seed)
    out.write(f"{fmt(est.log_prob)},{fmt(est.point)},{fmt(est.ci_low)},{fmt(est.ci_high)}\n")
    return 0


def _cmd_table1(args, out):
    report = reproduce_table1()
    emit_csv(report, args.csv if args.csv else out)
    print(f"max_abs_dev_from_reference={fmt(report.max_abs_dev_from_reference)}", file=sys.stderr)
    print(f"bound_holds={str(report.bound_holds).lower()}", file=sys.stderr)
    print(f"linear_rule_max_dev={fmt(report.linear_rule_max_dev)}", file=sys.stderr)
    return 0


def _cmd_convergence(args, out):
    if args.n_step < 1:
        raise ValueError("--n-step must be positive")
    grid = range(args.n_start, args.n_stop + 1, args.n_step)
    report = run_convergence(args.model, args.mu, args.method, grid, seed=args.seed)
    emit_csv(report, args.csv if args.csv else out)
    print(f"fitted_slope={fmt(report.fitted_slope)}", file=sys.stderr)
    print(f"fitted_intercept={fmt(report.fitted_intercept)}", file=sys.stderr)
    if report.filtered_n:
        print(f"filtered_n={len(report.filtered_n)} (not lattice aligned)", file=sys.stderr)
    if report.failed_n:
        print(f"failed_n={','.join(map(str, report.failed_n))}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailrefine", description="Refined large-deviation tail probabilities."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tilt", help="solve the tilt at a target mean")
    p.add_argument("--model", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.set_defaults(func=_cmd_tilt)

    p = sub.add_parser("tail", help="tail estimates for the sample mean")
    p.add_argument("--model", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument(
        "--method",
        default="all",
        choices=["sanov", "br", "refined", "bahadur_rao", "refined_gaussian", "all"],
    )
    p.set_defaults(func=_cmd_tail)

    p = sub.add_parser("oracle", help="exact or Monte Carlo tail probability")
    p.add_argument("--model", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mc-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("table1", help="c_mu for Bernoulli(1/2) on the Table 1 grid")
    p.add_argument("--csv", default=None, metavar="PATH")
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("convergence", help="error of an estimator against the exact tail")
    p.add_argument("--model", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--n-start", type=int, required=True)
    p.add_argument("--n-stop", type=int, required=True)
    p.add_argument("--n-step", type=int, default=1)
    p.add_argument("--csv", default=None, metavar="PATH")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_convergence)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TailError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
