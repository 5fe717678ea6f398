"""Command-line front end.

Subcommands::

    snsq validate FILE                 parse + structural check, silent when clean
    snsq run FILE --steps N            run and print the final state
    snsq fixpoint FILE [--max-steps N] run until the trajectory settles
    snsq matrix FILE                   print the structural matrices and groups
    snsq check FILE --steps N          cross-check the two step backends

Exit codes: 0 success; 1 the file failed to read, parse, or validate; 2 a
step would drive a cardinal negative (qminus violation); 3 the two backends
disagreed. Diagnostics and violation details go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from snsq import dsl, matrix_engine, runner
from snsq.model import Cao
from snsq.rationals import format_rational


def _load(path: str) -> tuple[Cao | None, int]:
    """Parse and validate a file; print diagnostics. Returns (cao, exit_code)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"snsq: cannot read {path}: {err.strerror}", file=sys.stderr)
        return None, 1
    result = dsl.parse(text)
    for diag in result.diagnostics:
        print(f"{path}:{diag}", file=sys.stderr)
    if result.cao is None:
        return None, 1
    return result.cao, 0


def _print_state(names: tuple[str, ...], state: tuple[Fraction, ...]) -> None:
    for name, value in zip(names, state):
        print(f"{name} = {format_rational(value)}")


def _cmd_validate(args: argparse.Namespace) -> int:
    _, status = _load(args.file)
    return status


def _cmd_run(args: argparse.Namespace) -> int:
    cao, status = _load(args.file)
    if cao is None:
        return status
    result = runner.run(cao, max_steps=args.steps, backend=args.backend)
    if args.trace:
        runner.write_trace(args.trace, result.records, cao.entity_names(), args.format)
    outcome = result.outcome
    if outcome.reason is runner.StopReason.QMINUS_VIOLATION:
        entity, value = outcome.violation
        print(
            f"{args.file}: step {outcome.steps} would drive '{entity}' to "
            f"{format_rational(value)}; stopping at the last valid state",
            file=sys.stderr,
        )
        _print_state(cao.entity_names(), outcome.final_state)
        return 2
    _print_state(cao.entity_names(), outcome.final_state)
    return 0


def _cmd_fixpoint(args: argparse.Namespace) -> int:
    cao, status = _load(args.file)
    if cao is None:
        return status
    result = runner.run(cao, max_steps=args.max_steps, backend=args.backend)
    outcome = result.outcome
    print(f"{outcome.reason.value} after {outcome.steps} steps")
    if outcome.reason is runner.StopReason.QMINUS_VIOLATION:
        entity, value = outcome.violation
        print(
            f"{args.file}: '{entity}' would reach {format_rational(value)}",
            file=sys.stderr,
        )
        return 2
    return 0


def _fmt_table(title: str, header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    grid = [header, *rows]
    widths = [max(len(row[c]) for row in grid) for c in range(len(header))]
    lines = [title]
    for row in grid:
        lines.append("  " + "  ".join(cell.rjust(widths[c]) for c, cell in enumerate(row)))
    return "\n".join(lines)


def _cmd_matrix(args: argparse.Namespace) -> int:
    cao, status = _load(args.file)
    if cao is None:
        return status
    ops = matrix_engine.build_operators(cao)
    names = ops.names

    def matrix_rows(matrix) -> list[tuple[str, ...]]:
        return [
            (names[i], *(format_rational(cell) for cell in row))
            for i, row in enumerate(matrix)
        ]

    header = ("", *names)
    config = matrix_engine.build_configuration_matrix(cao)
    sections = [
        _fmt_table("configuration", header, matrix_rows(config.cells)),
        _fmt_table("radix diagonal", header, matrix_rows(ops.radix)),
        _fmt_table("inverse radix diagonal", header, matrix_rows(ops.inverse_radix)),
        _fmt_table("transfer", header, matrix_rows(matrix_engine.transfer_matrix(ops))),
    ]
    groups = ["carry groups"]
    for gi, group in enumerate(ops.partition.groups):
        members = ", ".join(names[e] for e in group)
        groups.append(f"  group {gi}: {members}")
    if ops.partition.sinks:
        groups.append("  sinks: " + ", ".join(names[e] for e in ops.partition.sinks))
    sections.append("\n".join(groups))
    print("\n\n".join(sections))
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    cao, status = _load(args.file)
    if cao is None:
        return status
    report = runner.check_equivalence(cao, args.steps)
    if report.equivalent:
        print(f"backends agree for {report.steps} steps")
        return 0

    def fmt(value: Fraction | None) -> str:
        return "violation-free" if value is None else format_rational(value)

    print(
        f"{args.file}: backends diverge at step {report.step} "
        f"({report.kind} of '{report.entity}'): "
        f"operator={fmt(report.operator_value)} matrix={fmt(report.matrix_value)}",
        file=sys.stderr,
    )
    return 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snsq",
        description="Exact-rational simulator for carry/convert operator networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a network file and check its structure")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="run a network and print the final state")
    p.add_argument("file")
    p.add_argument("--steps", type=int, required=True, help="step budget")
    p.add_argument("--backend", choices=runner.BACKENDS, default="operator")
    p.add_argument("--trace", metavar="PATH", help="write the trajectory to PATH")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("fixpoint", help="run until the state settles, repeats, or hits the budget")
    p.add_argument("file")
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--backend", choices=runner.BACKENDS, default="operator")
    p.set_defaults(func=_cmd_fixpoint)

    p = sub.add_parser("matrix", help="print the structural matrices and carry groups")
    p.add_argument("file")
    p.set_defaults(func=_cmd_matrix)

    p = sub.add_parser("check", help="run both backends in lockstep and compare")
    p.add_argument("file")
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=_cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)
