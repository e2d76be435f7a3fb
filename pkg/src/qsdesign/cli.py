"""Command-line interface: ``qsdesign <command> ...``.

Commands
--------
generate   build a design and write it as CSV (plus metadata sidecar)
evaluate   report every criterion for a design file
table-b    best shift values for odd primes
ratios     distance ratios and r_ave for n = m designs, with the lattice baseline
catalog    every supported (m, n) cell with its route and metrics
tsp        profit of a strategy (``eval``) or the random-design baseline (``random``)

Every stochastic command takes ``--seed``; it defaults to 0.  Exit codes: 0 ok,
2 usage error, 3 unsupported size, 4 parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from fractions import Fraction
from math import sqrt
from typing import Sequence

import numpy as np

from . import io as dio
from .core import DesignError, evaluate
from .glp import odd_primes
from .multi import generate, supported_sizes
from .optimizer import TAConfig
from .single import competitor_baseline, construct_nm, route_available, select_b1, select_b2
from .tsp import TspStrategy, completion_times, delays, six_city_instance, profit, random_baseline

EXIT_OK, EXIT_USAGE, EXIT_UNSUPPORTED, EXIT_PARSE = 0, 2, 3, 4

RATIO_SIZES = [8, 14, 20, 24, 26, 32, 44, 48, 50, 54, 56, 64, 68, 74, 80, 84, 86, 90, 92, 98]

log = logging.getLogger("qsdesign")


class StrategyParseError(ValueError):
    pass


def parse_strategy(text: str, city_stays: bool = False) -> TspStrategy:
    """Parse ``"x1,...,xm;o1,...,om"``; stays are in visit order unless ``city_stays``."""
    parts = text.split(";")
    if len(parts) != 2:
        raise StrategyParseError(f"strategy must look like 'x1,...,xm;o1,...,om', got {text!r}")
    try:
        xs = [float(v) for v in parts[0].split(",")]
    except ValueError:
        raise StrategyParseError(f"stay list {parts[0]!r} is not comma-separated numbers") from None
    try:
        order = [int(v) for v in parts[1].split(",")]
    except ValueError:
        raise StrategyParseError(f"order {parts[1]!r} is not comma-separated integers") from None
    if len(xs) != len(order):
        raise StrategyParseError(f"{len(xs)} stays but {len(order)} cities in the order")
    try:
        if city_stays:
            return TspStrategy.from_city_stays(order, xs)
        return TspStrategy(order, xs)
    except ValueError as exc:
        raise StrategyParseError(str(exc)) from None


def _ta_config(args: argparse.Namespace) -> TAConfig:
    return TAConfig(I=args.ta_i, J=args.ta_j, T1=args.ta_t1, T_tau=args.ta_ttau, weight=Fraction(args.weight))


def _add_ta_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("threshold accepting")
    g.add_argument("--ta-i", type=int, default=100, help="outer iterations (default 100)")
    g.add_argument("--ta-j", type=int, default=100, help="steps per outer iteration (default 100)")
    g.add_argument("--ta-t1", type=float, default=0.05, help="first threshold (default 0.05)")
    g.add_argument("--ta-ttau", type=float, default=1e-6, help="last threshold (default 1e-6)")
    g.add_argument("--weight", default="1/2", help="r_ave weight in the stacked criterion (default 1/2)")


def _csv_writer(out):
    return csv.writer(out, lineterminator="\n")


def cmd_generate(args: argparse.Namespace) -> int:
    design = generate(args.n, args.m, _ta_config(args), args.seed)
    report = evaluate(design)
    if args.out:
        side = dio.write_design(args.out, design)
        print(f"wrote {args.out} and {side}")
        print(report.summary())
    else:
        sys.stdout.write(dio.design_to_csv(design))
        print(report.summary(), file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    design = dio.read_design(args.path)
    report = evaluate(design)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    print(report.summary())
    d = report.as_dict()
    for key in ("d1", "d1_upper", "d2sq", "d2sq_upper", "dH", "dH_upper", "d1_upper_2m", "d2sq_upper_2m"):
        print(f"{key}: {'n/a' if d[key] is None else d[key]}")
    print(f"r_ave: {report.r_ave.numerator}/{report.r_ave.denominator} ({report.r_ave_decimal})")
    off = report.t.off_diagonal()
    print(f"t: min={int(off.min())} max={int(off.max())} balanced={str(report.is_pair_balanced).lower()}")
    print(f"lhd: {str(report.is_lhd).lower()}")
    print(f"marginally_coupled: {str(report.is_marginally_coupled).lower()}")
    return EXIT_OK


def cmd_table_b(args: argparse.Namespace) -> int:
    w = _csv_writer(sys.stdout)
    w.writerow(["p", "b1_star", "b2_star", "b2_chosen", "r_ave"])
    for p in odd_primes(5, args.max_p):
        b1, b2 = select_b1(p), select_b2(p)
        w.writerow([p, " ".join(map(str, b1.minimizers)), " ".join(map(str, b2.candidates)), b2.chosen,
                    f"{float(b1.r_value):.3f}"])
    return EXIT_OK


def _ratio_cells(design) -> list[str]:
    r = evaluate(design)
    return [f"{r.d1 / r.d1_upper:.3f}", f"{sqrt(r.d2sq / r.d2sq_upper):.3f}", r.r_ave_decimal]


def cmd_ratios(args: argparse.Namespace) -> int:
    w = _csv_writer(sys.stdout)
    w.writerow(["m", "d1_ratio", "d2_ratio", "r_ave", "baseline_d1_ratio", "baseline_d2_ratio", "baseline_r_ave"])
    status = EXIT_OK
    for m in sorted(set(args.m)):
        if route_available(m) is None:
            print(f"m={m}: unsupported (needs m+1 prime or even m with phi(N)=2m)", file=sys.stderr)
            status = EXIT_UNSUPPORTED
            continue
        row = [m] + _ratio_cells(construct_nm(m, _ta_config(args), args.seed))
        row += _ratio_cells(competitor_baseline(m)) if route_available(m) == "glp" else ["", "", ""]
        w.writerow(row)
    return status


def cmd_catalog(args: argparse.Namespace) -> int:
    w = _csv_writer(sys.stdout)
    header = ["m", "n", "route"]
    if not args.routes_only:
        header += ["d1", "d2sq", "dH", "r_ave", "mcd"]
    w.writerow(header)
    cfg = _ta_config(args)
    for m in range(args.min_m, args.max_m + 1):
        for n, route in supported_sizes(m, args.max_n):
            row = [m, n, route]
            if not args.routes_only:
                r = evaluate(generate(n, m, cfg, args.seed))
                row += [r.d1, r.d2sq, r.dH, r.r_ave_decimal, str(r.is_marginally_coupled).lower()]
            w.writerow(row)
    return EXIT_OK


def cmd_tsp_eval(args: argparse.Namespace) -> int:
    inst = six_city_instance()
    strat = parse_strategy(args.strategy, args.city_stays)
    try:
        value = profit(inst, strat)
    except ValueError as exc:
        raise StrategyParseError(str(exc)) from None
    print(f"profit={value:.2f}")
    print("completion=" + ",".join(f"{c:.2f}" for c in completion_times(inst, strat)))
    print("delay=" + ",".join(f"{t:.2f}" for t in delays(inst, strat)))
    return EXIT_OK


def cmd_tsp_random(args: argparse.Namespace) -> int:
    inst = six_city_instance()
    try:
        best, profits = random_baseline(inst, args.n, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"max={best:.2f}")
    counts, edges = np.histogram(profits, bins=args.bins)
    w = _csv_writer(sys.stdout)
    w.writerow(["bin_lo", "bin_hi", "count"])
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        w.writerow([f"{lo:.2f}", f"{hi:.2f}", int(c)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsdesign", description="Quantitative-sequence design toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log construction warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a design")
    p.add_argument("--n", type=int, required=True, help="run count (a multiple of m)")
    p.add_argument("--m", type=int, required=True, help="component count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path; the metadata sidecar is written next to it")
    _add_ta_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="evaluate a design file")
    p.add_argument("path")
    p.add_argument("--json", action="store_true", help="print the full report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("table-b", help="best shifts for odd primes 5 <= p <= max-p")
    p.add_argument("--max-p", type=int, default=97)
    p.set_defaults(func=cmd_table_b)

    p = sub.add_parser("ratios", help="distance ratios for n = m designs")
    p.add_argument("--m", type=int, nargs="+", default=RATIO_SIZES)
    p.add_argument("--seed", type=int, default=0)
    _add_ta_flags(p)
    p.set_defaults(func=cmd_ratios)

    p = sub.add_parser("catalog", help="supported (m, n) cells")
    p.add_argument("--min-m", type=int, default=2)
    p.add_argument("--max-m", type=int, default=20)
    p.add_argument("--max-n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--routes-only", action="store_true", help="skip building the designs")
    _add_ta_flags(p)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("tsp", help="six-city travelling salesman benchmark")
    tsub = p.add_subparsers(dest="tsp_command", required=True)
    q = tsub.add_parser("eval", help="profit of one strategy")
    q.add_argument("--strategy", required=True, help="'x1,...,xm;o1,...,om' with stays in visit order")
    q.add_argument("--city-stays", action="store_true", help="read the stays as indexed by city")
    q.set_defaults(func=cmd_tsp_eval)
    q = tsub.add_parser("random", help="best profit of a random design")
    q.add_argument("--n", type=int, default=300)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--bins", type=int, default=20)
    q.set_defaults(func=cmd_tsp_random)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except dio.DesignParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except StrategyParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
