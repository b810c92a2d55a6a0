"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments, 3 demand/instance mismatch,
4 internal verification failure, 5 oracle search budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .algebra import Field, is_prime, is_scalar_multiple
from .bounds import CSV_COLUMNS, gap_report
from .oracle import BudgetExceeded, min_rate_bruteforce, sandwich_check, worst_case_sandwich
from .reference import REFERENCE_NULLSPACE, REFERENCE_RATE, REFERENCE_TASKS, reference_instance
from .reports import SCHEMA, DemandFileError, load_demand, run_report
from .scheme import (
    DemandMatrix,
    DemandMismatch,
    ProblemInstance,
    build_plan,
    random_demand,
    rate_achieved,
    to_factorization,
)
from .simulator import run as simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISMATCH = 3
EXIT_VERIFY = 4
EXIT_BUDGET = 5

WORKERS_ENV = "LINSEP_WORKERS"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _instance(args) -> ProblemInstance:
    try:
        field = Field.parse(args.field)
        return ProblemInstance(args.k, args.l, args.m, args.delta, field)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def _demand(args, instance: ProblemInstance) -> DemandMatrix:
    if args.demand and args.random:
        raise CliError(EXIT_USAGE, "--demand and --random are mutually exclusive")
    if args.random:
        return random_demand(instance, random.Random(args.seed))
    if not args.demand:
        raise CliError(EXIT_USAGE, "need --demand <path> or --random")
    try:
        obj = json.loads(Path(args.demand).read_text(encoding="utf-8"))
        field, matrix = load_demand(obj)
    except (OSError, json.JSONDecodeError, DemandFileError) as exc:
        raise CliError(EXIT_MISMATCH, f"cannot read demand: {exc}") from exc
    try:
        return DemandMatrix.for_instance(instance, matrix)
    except DemandMismatch as exc:
        raise CliError(EXIT_MISMATCH, str(exc)) from exc


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _plan_and_check(instance, demand):
    plan = build_plan(instance, demand)
    if not to_factorization(plan).verify(demand.matrix):
        raise CliError(EXIT_VERIFY, "factorization certificate failed to verify")
    return plan


def cmd_plan(args) -> dict:
    instance = _instance(args)
    demand = _demand(args, instance)
    plan = _plan_and_check(instance, demand)
    return run_report("plan", plan, gap_report(instance))


def cmd_simulate(args) -> dict:
    instance = _instance(args)
    demand = _demand(args, instance)
    plan = _plan_and_check(instance, demand)
    sim = simulate(instance, demand, plan, args.seed, zero_outputs=args.force_zero_f)
    report = run_report("simulate", plan, gap_report(instance), sim.to_json(instance.field))
    if not sim.passed:
        raise CliError(EXIT_VERIFY, _dump(report))
    return report


def parse_values(text: str, name: str) -> list[int]:
    """``"5"``, ``"2:7"`` (inclusive) or ``"2,3,5"``."""
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"malformed range for {name}: {text!r}") from exc
    if not values or min(values) < 1:
        raise CliError(EXIT_USAGE, f"empty or non-positive range for {name}: {text!r}")
    return values


def _bounds_row(point) -> dict:
    K, L, M, delta, q = point
    field = Field.prime(q) if q else Field.rational()
    instance = ProblemInstance(K, L, M, delta, field)
    row = gap_report(instance).to_json()
    row["rate_achieved"] = rate_achieved(instance)
    return row


def bounds_points(args) -> list[tuple]:
    ks, ls, ms, ds = (parse_values(getattr(args, n), n) for n in ("k", "l", "m", "delta"))
    if args.q is None:
        qs = [None]
    else:
        qs = parse_values(args.q, "q")
        if ":" in args.q:
            qs = [q for q in qs if is_prime(q)]
        elif not all(is_prime(q) for q in qs):
            raise CliError(EXIT_USAGE, f"field sizes must be prime: {args.q!r}")
        if not qs:
            raise CliError(EXIT_USAGE, f"no primes in {args.q!r}")
    return [(K, L, M, d, q) for K in ks for L in ls for M in ms for d in ds for q in qs
            if M <= K and d <= L]


def cmd_bounds(args) -> list[dict]:
    points = bounds_points(args)
    workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_bounds_row, points))
    return [_bounds_row(p) for p in points]


def format_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return _dump({"schema": SCHEMA, "command": "bounds", "rows": rows})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = {c: row.get(c) for c in CSV_COLUMNS}
        out["findings"] = "; ".join(row["findings"])
        writer.writerow({c: "" if v is None else v for c, v in out.items()})
    return buf.getvalue()


def cmd_oracle(args) -> dict:
    instance = _instance(args)
    if args.worst_case:
        return _worst_case(instance)
    demand = _demand(args, instance)
    try:
        if args.sandwich:
            sw = sandwich_check(instance, demand)
            report = {"schema": SCHEMA, "command": "oracle", "instance": instance.to_json(),
                      "sandwich": sw.to_json()}
            if sw.min_R is None:
                raise CliError(EXIT_BUDGET, _dump(report))
            if not sw.holds:
                raise CliError(EXIT_VERIFY, _dump(report))
            return report
        result = min_rate_bruteforce(instance, demand, args.rmax)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    report = {"schema": SCHEMA, "command": "oracle", "instance": instance.to_json(), **result.to_json()}
    if result.exceeded:
        raise CliError(EXIT_BUDGET, _dump(report))
    return report


def _worst_case(instance) -> dict:
    try:
        sw = worst_case_sandwich(instance)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    except BudgetExceeded as exc:
        raise CliError(EXIT_BUDGET, str(exc)) from exc
    report = {"schema": SCHEMA, "command": "oracle", "instance": instance.to_json(), "worst_case": sw.to_json()}
    if sw.min_R is None:
        raise CliError(EXIT_BUDGET, _dump(report))
    if not sw.holds:
        raise CliError(EXIT_VERIFY, _dump(report))
    return report


def example_checks(plan, sim) -> dict[str, bool]:
    f = plan.instance.field
    block = plan.block(0, 0)
    checks = {
        "rate": plan.R == REFERENCE_RATE and plan.N == REFERENCE_RATE,
        "tasks": block.tasks == REFERENCE_TASKS,
        "simulation": sim.passed,
        "certificate": to_factorization(plan).verify(plan.demand.matrix),
    }
    checks["nullspace"] = all(is_scalar_multiple(f, nu, ref)
                              for nu, ref in zip(block.nullspace, REFERENCE_NULLSPACE))
    return checks


def cmd_example1(args) -> dict:
    try:
        field = Field.parse(args.field)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    instance, demand = reference_instance(field)
    plan = build_plan(instance, demand)
    sim = simulate(instance, demand, plan, args.seed)
    checks = example_checks(plan, sim)
    report = run_report("example1", plan, gap_report(instance), sim.to_json(field),
                        {"checks": checks, "passed": all(checks.values())})
    if not all(checks.values()):
        raise CliError(EXIT_VERIFY, _dump(report))
    return report


def _add_instance_args(p, field_default=None):
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--field", required=field_default is None, default=field_default,
                   help="prime:<q> or rational")
    p.add_argument("--demand", help="demand JSON file")
    p.add_argument("--random", action="store_true", help="draw a random demand matrix")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linsep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="build the scheme for one demand matrix")
    _add_instance_args(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="plan and run the three-phase protocol")
    _add_instance_args(p)
    p.add_argument("--force-zero-f", action="store_true", help="all subfunction outputs zero")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bounds", help="rate formula and lower bounds, single point or sweep")
    for name in ("k", "l", "m", "delta"):
        p.add_argument(f"--{name}", required=True, help="N, A:B (inclusive) or A,B,C")
    p.add_argument("--q", help="field sizes; ranges keep only primes")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("oracle", help="brute-force minimal rate on a tiny instance")
    _add_instance_args(p)
    p.add_argument("--rmax", type=int, default=5)
    p.add_argument("--sandwich", action="store_true", help="check rank(D) <= min R <= scheme R")
    p.add_argument("--worst-case", action="store_true",
                   help="check lb_finite_q <= max over all D of min R <= scheme R")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("example1", help="reproduce the embedded K=10, L=6, M=3, delta=3 instance")
    p.add_argument("--field", default="prime:11")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_example1)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    if args.command == "bounds":
        _emit(args, format_rows(result, args.format))
    else:
        _emit(args, _dump(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
