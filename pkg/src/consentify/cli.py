"""Command-line entry point."""

from __future__ import annotations

import argparse
import sys
import time

from .commands import COMMANDS, EXIT_FAIL, EXIT_INPUT, run_enumerate
from .report import as_document, render
from .scenario import ScenarioError, ScenarioParseError, build, parse_scenario


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="consentify", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, metavar="PATH")
    v = sub.add_parser("validate", parents=[common], help="check a scenario against the schema and invariants")
    v.set_defaults(command="validate")
    helps = {
        "laws": "run the closure, forbidding and price-closedness law suites",
        "prices": "check that pricey choices do as well as any choice, under every reading",
        "equilibria": "Nash enumeration, Walrasian oracle and the comparator table",
        "enumerate": "dump the tower universe of each agent",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--report", metavar="PATH", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, help="overrides the scenario seed")
        p.add_argument("--budget", type=int, help="overrides the enumeration budget")
        p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical reruns)")
        if name == "enumerate":
            p.add_argument("--agent")
            p.add_argument("--depth", type=int)
    return parser


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        raw = _read(args.scenario)
    except OSError as err:
        print(f"error: cannot read scenario: {err}", file=sys.stderr)
        return EXIT_INPUT
    try:
        scenario = parse_scenario(raw)
        updates = {}
        if getattr(args, "budget", None) is not None:
            if args.budget < 1:
                raise ScenarioError([("--budget", "must be positive")])
            updates["budgets"] = scenario.budgets.model_copy(update={"enumeration": args.budget})
        if updates:
            scenario = scenario.model_copy(update=updates)
        built = build(scenario)
    except ScenarioParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ScenarioError as err:
        for path, msg in err.issues:
            print(f"invalid: {path}: {msg}", file=sys.stderr)
        # a scenario that parses but breaks the schema is an input error for runs
        return EXIT_FAIL if args.command == "validate" else EXIT_INPUT
    if args.command == "validate":
        print("ok")
        return 0

    seed = scenario.seed if args.seed is None else args.seed
    start = time.perf_counter()
    if args.command == "enumerate":
        if args.agent is not None and args.agent not in built.space.agents:
            print(f"error: unknown agent {args.agent!r}", file=sys.stderr)
            return EXIT_INPUT
        report = run_enumerate(built, seed, args.agent, args.depth)
    else:
        report = COMMANDS[args.command](built, seed)
    elapsed = time.perf_counter() - start if args.timing else None
    text = render(as_document(report, raw, seed, elapsed), args.format)
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
