"""Command-line interface for suite validation, derivation, and evaluation.

Exit codes: 0 on success, 2 when static validation rejects an input (suite,
task, app, or derivation constraint), 3 when a run, adjudication, replay, or
evidence-integrity check fails at runtime.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .derivation import HypernymTable, MaskingBypass, derive_instruction
from .metrics import (
    STRATIFIERS,
    load_reliability_fixture,
    reliability_report,
    render_text,
)
from .oracle import OracleError
from .packets import PacketError
from .runner import (
    RunConfig,
    RunnerError,
    VERDICTS_VERSION,
    adjudicate_run,
    replay_run,
    run_suite,
)
from .sandbox.mockdevice import MockApp, validate_app
from .taskmodel import Clarity, ValidationError, load_suite, load_task

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3


def _cmd_validate(args) -> int:
    suite = load_suite(args.suite)
    problems = {tid: [str(v) for v in vs]
                for tid, vs in sorted((validate_suite_full(suite)).items())}
    if problems:
        for tid, violations in problems.items():
            for violation in violations:
                print(f"{tid}: {violation}")
        return EXIT_INVALID
    print(f"suite ok: {len(suite.tasks)} tasks")
    return EXIT_OK


def validate_suite_full(suite):
    """Suite-level checks plus static validation of every referenced app."""

    from .taskmodel import Violation, validate_suite

    problems = validate_suite(suite)
    for task in suite.tasks:
        if not task.mock_app:
            continue
        path = suite.root / task.mock_app
        try:
            app_problems = validate_app(MockApp.load(path))
        except (OSError, ValueError) as exc:
            problems.setdefault(task.task_id, []).append(
                Violation("APP_LOAD", str(exc)))
            continue
        if app_problems:
            problems.setdefault(task.task_id, []).extend(app_problems)
    return problems


def _cmd_derive(args) -> int:
    task = load_task(args.task)
    hypernyms = HypernymTable.load(args.hypernyms) if args.hypernyms else None
    mask = frozenset(args.mask.split(",")) if args.mask else None
    out = {}
    for clarity in Clarity:
        if clarity == Clarity.AMBIGUOUS and hypernyms is None:
            continue
        try:
            instr = derive_instruction(
                task, clarity, hypernyms,
                mask if clarity == Clarity.INCOMPLETE else None)
        except MaskingBypass:
            continue
        out[clarity.value] = {
            "text": instr.text,
            "covered_ids": sorted(instr.covered_ids),
            "includes_path": instr.includes_path,
        }
    json.dump(out, sys.stdout, indent=2, sort_keys=True, ensure_ascii=False)
    print()
    return EXIT_OK


def _cmd_run(args) -> int:
    config = RunConfig.load(args.config)
    run_dir = run_suite(config)
    print(run_dir)
    return EXIT_OK


def _cmd_adjudicate(args) -> int:
    report = adjudicate_run(args.run_dir, version=args.version)
    print(render_text(report), end="")
    return EXIT_OK


def _cmd_replay(args) -> int:
    problems = replay_run(args.run_dir, version=args.version)
    if problems:
        for p in problems:
            print(p)
        return EXIT_RUNTIME
    print("replay clean")
    return EXIT_OK


def _cmd_report(args) -> int:
    with open(Path(args.run_dir) / "report.json", encoding="utf-8") as fh:
        report = json.load(fh)
    print(render_text(report, by=args.by), end="")
    if args.annotations:
        fixture = load_reliability_fixture(args.annotations)
        agreement = reliability_report(fixture)
        print()
        json.dump(agreement, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intentgap",
        description="Clarity-stratified evaluation harness for GUI agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="statically check a task suite")
    p.add_argument("suite", help="suite root directory")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("derive", help="derive per-clarity instructions for a task")
    p.add_argument("task", help="task JSON document")
    p.add_argument("--hypernyms", help="hypernym table JSON")
    p.add_argument("--mask", help="comma-separated requirement ids to mask")
    p.set_defaults(func=_cmd_derive)

    p = sub.add_parser("run", help="capture a suite into sealed packets")
    p.add_argument("config", help="run configuration JSON")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("adjudicate", help="judge a captured run and write the report")
    p.add_argument("run_dir")
    p.add_argument("--version", default=VERDICTS_VERSION)
    p.set_defaults(func=_cmd_adjudicate)

    p = sub.add_parser("replay", help="recompute verdicts offline from the audit")
    p.add_argument("run_dir")
    p.add_argument("--version", default=VERDICTS_VERSION)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("report", help="print the metric table for a run")
    p.add_argument("run_dir")
    p.add_argument("--by", choices=STRATIFIERS)
    p.add_argument("--annotations", help="rater annotation fixture JSON")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, MaskingBypass) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RunnerError as exc:
        if exc.code == "SUITE_INVALID":
            print(f"invalid input: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (PacketError, OracleError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
