"""Command-line front end.

Subcommands::

    bathequil scan CONFIG [--out DIR] [--jobs N]
    bathequil point QUANTITY --theta T --d D --gamma G [--c C] [--oracle-n N]
    bathequil oracle-check --theta T --d D --gamma G [--c C] [--n N]
    bathequil bound --theta T [T ...] --d D --gamma G [--coupling q2] [--levels L]

Exit status: 0 success, 1 accuracy failure, 2 usage or configuration error,
3 input/output error.
"""

import argparse
import json
import math
import sys

from .bath import SpectralDensity, ThermalPoint
from .bound import harmonic_system, markovian_limit_scan
from .errors import AccuracyError, BathEquilError
from .scan import (
    QUANTITIES,
    ConfigError,
    evaluate,
    load_config,
    oracle_gaps,
    oracle_value,
    run_scan,
    write_outputs,
)

EXIT_OK, EXIT_ACCURACY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _positive(text):
    value = float(text)
    if not (value > 0.0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _nonneg(text):
    value = float(text)
    if not value >= 0.0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _add_point_args(p):
    p.add_argument("--theta", type=_positive, required=True, help="temperature kT/hbar w0")
    p.add_argument("--d", type=_positive, required=True, help="cutoff ratio wD/w0")
    p.add_argument("--gamma", type=_nonneg, required=True, help="damping gamma/w0")
    p.add_argument("--c", type=_nonneg, default=0.0, help="pair coupling c0/m0 w0^2")


def build_parser():
    parser = argparse.ArgumentParser(prog="bathequil", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="run a grid scan from a config file or manifest")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")

    p = sub.add_parser("point", help="evaluate one quantity at one point")
    p.add_argument("quantity", choices=[q for q in QUANTITIES if q != "oracle-check"])
    _add_point_args(p)
    p.add_argument("--oracle-n", type=int, default=None, help="also run the finite-bath oracle")
    p.add_argument("--coupling", default="q2", choices=["q", "q2", "q2+q"])
    p.add_argument("--levels", type=int, default=40)

    p = sub.add_parser("oracle-check", help="compare analytic results with the finite-bath oracle")
    _add_point_args(p)
    p.add_argument("--n", type=int, default=4000, help="bath modes per bath")
    p.add_argument("--tol", type=float, default=1e-3, help="relative tolerance")

    p = sub.add_parser("bound", help="commutator functional along a temperature list")
    p.add_argument("--theta", type=_positive, nargs="+", required=True)
    p.add_argument("--d", type=_positive, required=True)
    p.add_argument("--gamma", type=_nonneg, required=True)
    p.add_argument("--coupling", default="q2", choices=["q", "q2", "q2+q"])
    p.add_argument("--levels", type=int, default=40)
    return parser


def _emit(record):
    json.dump(record, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_scan(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    outcome = run_scan(cfg, jobs=args.jobs)
    try:
        write_outputs(outcome, args.out)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if outcome.all_ok else EXIT_ACCURACY


def _cmd_point(args):
    res = evaluate(
        args.quantity, args.theta, args.d, args.gamma, args.c,
        coupling=args.coupling, levels=args.levels,
    )
    record = {
        "quantity": args.quantity,
        "inputs": {"theta": args.theta, "d": args.d, "gamma": args.gamma, "c": args.c},
        "value": res.value,
        "err_estimate": res.err_estimate,
    }
    if args.oracle_n:
        sd = SpectralDensity(args.gamma, args.d)
        exact = oracle_value(args.quantity, sd, ThermalPoint(args.theta), args.c, args.oracle_n)
        record["oracle_value"] = float(exact)
        record["oracle_gap"] = abs(res.value - exact)
    _emit(record)
    return EXIT_OK if res.ok else EXIT_ACCURACY


def _cmd_oracle_check(args):
    gaps = oracle_gaps(SpectralDensity(args.gamma, args.d), ThermalPoint(args.theta), args.c, args.n)
    ok = all(g["rel_gap"] <= args.tol for g in gaps.values())
    _emit({
        "inputs": {"theta": args.theta, "d": args.d, "gamma": args.gamma, "c": args.c, "n": args.n},
        "checks": gaps,
        "ok": ok,
    })
    return EXIT_OK if ok else EXIT_ACCURACY


def _cmd_bound(args):
    sd = SpectralDensity(args.gamma, args.d)
    ts = harmonic_system(args.levels, args.coupling)
    moduli, results = markovian_limit_scan(ts, sd, args.theta, full_output=True)
    _emit({
        "coupling": args.coupling,
        "levels": args.levels,
        "points": [
            {"theta": t, "modulus": float(m), "err_estimate": r.error, "significant": r.significant}
            for t, m, r in zip(args.theta, moduli, results)
        ],
    })
    return EXIT_OK


_COMMANDS = {
    "scan": _cmd_scan,
    "point": _cmd_point,
    "oracle-check": _cmd_oracle_check,
    "bound": _cmd_bound,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AccuracyError as exc:
        print(f"accuracy target missed: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except BathEquilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
