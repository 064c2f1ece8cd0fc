"""Command-line front end.

Each verb runs the matching subset of the scenario's task list against a
scenario file and writes artifacts to the output directory; ``sweep``
repeats the scenario over its declared parameter grid.  Exit status 0
means every executed task passed (or was not applicable).
"""

from __future__ import annotations

import argparse
import sys

from .errors import PlapLabError, ScenarioParseError, TaskError
from .scenario import run_scenario, sweep

VERB_TASKS = {
    "check": ("conditions",),
    "wolff": ("wolff",),
    "solve": ("solve", "envelopes", "extremal", "minimal-growth"),
    "spheres": ("three-spheres",),
    "hardy": ("hardy",),
    "classify": ("classify",),
}


def _parse_tol(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ScenarioParseError(f"--tol expects NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        out[name.strip()] = float(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plaplab",
        description="Desk-scale checks for radial p-Laplacian singularities",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in (*VERB_TASKS, "sweep"):
        cmd = sub.add_parser(verb, help=f"run the {verb} tasks of a scenario")
        cmd.add_argument("--scenario", required=True, help="scenario JSON file")
        cmd.add_argument("--out", required=True, help="output directory for artifacts")
        cmd.add_argument("--tol", action="append", metavar="NAME=VALUE",
                         help="tolerance override (repeatable)")
        cmd.add_argument("--seed", type=int, default=None,
                         help="seed override for triple sampling")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "sweep":
            csv_path = sweep(args.scenario, args.out)
            print(f"sweep matrix written to {csv_path}")
            return 0
        report = run_scenario(
            args.scenario, args.out,
            task_filter=VERB_TASKS[args.verb],
            seed=args.seed,
            tolerances=_parse_tol(args.tol),
        )
        for result in report.results:
            print(f"{result.task}: {result.verdict}")
        print("overall:", "PASS" if report.overall_pass else "FAIL")
        return 0 if report.overall_pass else 1
    except ScenarioParseError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except TaskError as exc:
        print(f"task error: {exc}", file=sys.stderr)
        return 1
    except PlapLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
