"""Command-line frontend: solve, verify, brute, monotone, duplicate-demo.

All JSON output is canonical (sorted keys, two-space indent) so golden-file
comparisons are byte-stable.  Exit codes: 0 success, 1 parse or input
error, 2 verification failure, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import flow as flownet
from .auction import SolveOptions, price_raising, solve, trace_records
from .model import Instance, InstanceError, PriceVector, duplicate_instance, load_instance
from .tiers import tier_report
from .verify import (
    BudgetExceededError,
    check_equilibrium,
    check_monotonicity_pair,
    hall_check,
    is_competitive_flowcheck,
    min_competitive_bruteforce,
    perturb_instance,
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VERIFY = 2
EXIT_BUDGET = 3

DEFAULT_SEED = 7
DEFAULT_BUDGET = 1_000_000
HALL_OBJECT_BUDGET = 16


class CliParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliParseError(message)


def _emit(payload: object) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("instance", help="path to a JSON instance file")
    sub.add_argument("--mode", choices=("unit", "adapted"), default="unit")
    sub.add_argument(
        "--warm-start",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="reuse the previous iteration's flow (default on)",
    )
    sub.add_argument("--start-prices", metavar="FILE", help="JSON object-to-price mapping")
    sub.add_argument("--trace", metavar="FILE", help="write the iteration trace as JSON")
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sub.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sub.add_argument(
        "--dump-network", metavar="FILE", help="write the initial demand network and its max flow"
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="flowauction", description=__doc__)
    verbs = parser.add_subparsers(dest="verb", required=True)
    for verb, handler in (
        ("solve", _cmd_solve),
        ("verify", _cmd_verify),
        ("brute", _cmd_brute),
        ("monotone", _cmd_monotone),
        ("duplicate-demo", _cmd_duplicate_demo),
    ):
        sub = verbs.add_parser(verb)
        _add_common(sub)
        sub.set_defaults(handler=handler)
    verbs.choices["monotone"].add_argument(
        "--pairs", type=int, default=200, help="number of perturbations to sweep"
    )
    return parser


def _options(args, instance: Instance) -> SolveOptions:
    start = None
    if args.start_prices:
        with open(args.start_prices, encoding="utf-8") as handle:
            raw = json.load(handle)
        if not isinstance(raw, dict):
            raise InstanceError(f"{args.start_prices}: expected a JSON object")
        start = PriceVector.for_instance(instance, raw)
    return SolveOptions(mode=args.mode, warm_start=args.warm_start, start_prices=start)


def _final_payload(equilibrium) -> dict:
    return {
        "prices": equilibrium.prices.as_dict(),
        "allocation": equilibrium.allocation.to_nested(),
        "iterations": len(equilibrium.trace.iterations),
        "oracle_calls": equilibrium.trace.oracle_calls,
    }


def _write_trace(path: str, equilibrium) -> None:
    payload = {
        "iterations": trace_records(equilibrium.trace),
        "final": _final_payload(equilibrium),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _write_network_dump(path: str, instance: Instance, prices: PriceVector) -> None:
    reports = {j: tier_report(instance, j, prices) for j in instance.buyers}
    network = flownet.build_demand_network(instance, prices, reports)
    best = flownet.max_flow(network)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(flownet.dump_network(network, best))


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    options = _options(args, instance)
    start = options.start_prices or PriceVector.zero(instance)
    if any(p != 0 for p in start.as_dict().values()):
        print(
            "warning: nonzero start prices are only sound below the minimum "
            "competitive prices; use the verify command to check the result",
            file=sys.stderr,
        )
    if args.dump_network:
        _write_network_dump(args.dump_network, instance, start)
    equilibrium = solve(instance, options)
    if args.trace:
        _write_trace(args.trace, equilibrium)
    _emit(_final_payload(equilibrium))
    return EXIT_OK


def _cmd_brute(args) -> int:
    instance = load_instance(args.instance)
    prices = min_competitive_bruteforce(instance, budget=args.budget)
    _emit({"prices": prices.as_dict()})
    return EXIT_OK


def run_verification(instance: Instance, options: SolveOptions, grid_budget: int) -> dict:
    """Solve and run every checker; returns a machine-readable report."""
    equilibrium = solve(instance, options)
    prices = equilibrium.prices
    start = options.start_prices or PriceVector.zero(instance)

    other_mode = "adapted" if options.mode == "unit" else "unit"
    cross_mode, _ = price_raising(
        instance,
        SolveOptions(mode=other_mode, warm_start=options.warm_start, start_prices=options.start_prices),
    )
    cross_warm, _ = price_raising(
        instance,
        SolveOptions(mode=options.mode, warm_start=not options.warm_start, start_prices=options.start_prices),
    )

    checks: list[dict] = []

    def record(name: str, claim: str, passed: bool | None, detail: str = "") -> None:
        entry = {"name": name, "claim": claim, "passed": passed}
        if passed is None:
            entry["skipped"] = True
        if detail:
            entry["detail"] = detail
        checks.append(entry)

    report = check_equilibrium(instance, prices, equilibrium.allocation)
    record(
        "stability",
        "every buyer's assigned bundle is feasible and payoff-maximal",
        report.feasible and all(report.stable.values()),
        "" if all(report.stable.values()) else f"unstable buyers: {[j for j, ok in report.stable.items() if not ok]}",
    )
    record(
        "market-clearing-quantity",
        "total quantity sold equals min(total supply, total demand)",
        report.quantity_sold == report.expected_quantity,
        f"sold {report.quantity_sold}, expected {report.expected_quantity}",
    )
    record(
        "positive-price-sellout",
        "every object with a positive price is completely sold",
        report.positive_price_sellout,
    )
    record(
        "competitive-flow-criterion",
        "the demand network at the final prices admits a saturating flow",
        is_competitive_flowcheck(instance, prices),
    )
    if len(instance.objects) <= HALL_OBJECT_BUDGET:
        ok, violating = hall_check(instance, prices)
        record(
            "hall-condition",
            "no object subset is overdemanded at the final prices",
            ok,
            "" if ok else f"violating set: {list(violating)}",
        )
    else:
        record("hall-condition", "no object subset is overdemanded at the final prices", None)
    span = instance.max_valuation + 2
    if span ** len(instance.objects) <= grid_budget:
        brute = min_competitive_bruteforce(instance, budget=grid_budget)
        record(
            "bruteforce-minimum-agreement",
            "the auction prices equal the grid-enumerated minimum competitive prices",
            brute == prices,
            f"auction {prices.as_dict()}, bruteforce {brute.as_dict()}",
        )
    else:
        record(
            "bruteforce-minimum-agreement",
            "the auction prices equal the grid-enumerated minimum competitive prices",
            None,
        )
    record(
        "unit-adapted-agreement",
        "unit-step and adapted-step modes return identical prices",
        cross_mode == prices,
    )
    record(
        "warm-cold-agreement",
        "warm-started and cold-started runs return identical prices",
        cross_warm == prices,
    )
    raises = len(equilibrium.trace.iterations)
    raise_budget = max((prices[i] - start[i] for i in instance.objects), default=0)
    record(
        "iteration-bound",
        "the number of price raises is at most the largest price increase",
        raises <= raise_budget,
        f"{raises} raises, largest increase {raise_budget}",
    )
    passed = all(entry["passed"] is not False for entry in checks)
    return {"passed": passed, "prices": prices.as_dict(), "checks": checks}


def _cmd_verify(args) -> int:
    instance = load_instance(args.instance)
    options = _options(args, instance)
    report = run_verification(instance, options, args.budget)
    _emit(report)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _cmd_monotone(args) -> int:
    instance = load_instance(args.instance)
    options = _options(args, instance)
    rng = random.Random(args.seed)
    base = solve(instance, options).prices
    failures = 0
    print(f"{'idx':>4}  {'kind':<7}  {'target':<16}  {'delta':>5}  result")
    for index in range(args.pairs):
        perturbed, change = perturb_instance(rng, instance)
        new_prices = solve(perturbed, SolveOptions(mode=options.mode, warm_start=options.warm_start)).prices
        ok = check_monotonicity_pair(instance, perturbed, base, new_prices)
        if not ok:
            failures += 1
        print(
            f"{index:>4}  {change.kind:<7}  {change.target:<16}  {change.amount:>+5}  "
            f"{'pass' if ok else 'FAIL'}"
        )
    print(f"{args.pairs - failures}/{args.pairs} passed")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def _cmd_duplicate_demo(args) -> int:
    instance = load_instance(args.instance)
    options = _options(args, instance)
    original = solve(instance, options)
    duplicated_instance = duplicate_instance(instance)
    duplicated = solve(duplicated_instance, options)
    _emit(
        {
            "original": {
                "prices": original.prices.as_dict(),
                "allocation": original.allocation.to_nested(),
            },
            "duplicated": {
                "prices": duplicated.prices.as_dict(),
                "allocation": duplicated.allocation.to_nested(),
            },
        }
    )
    return EXIT_OK


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.handler(args)
    except (InstanceError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
