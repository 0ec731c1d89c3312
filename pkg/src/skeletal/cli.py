"""``skeletal`` command line: cs, shapes and check."""
from __future__ import annotations

import argparse
import os
import sys

from .charskel import characteristic_skeleton
from .goals import load_goal
from .protocol import load_protocol
from .render import (
    cs_record, format_skeleton, shapes_record, to_dot, to_json, verdict_record,
)
from .search import SearchBounds, VerdictKind, check_goal, shapes
from .sexpr import SkeletalError

EXIT_ACHIEVED = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_BOUND = 2
EXIT_INPUT = 3

_EXIT = {
    VerdictKind.ACHIEVED: EXIT_ACHIEVED,
    VerdictKind.COUNTEREXAMPLE: EXIT_COUNTEREXAMPLE,
    VerdictKind.BOUND_EXCEEDED: EXIT_BOUND,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"{n} is not positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skeletal", description="Check security goals of strand-space protocols.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (("cs", "print the characteristic skeleton of a goal hypothesis"),
                            ("shapes", "print the shapes of the characteristic skeleton"),
                            ("check", "decide whether the protocol achieves the goal")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("protocol", help="protocol file (defprotocol ...)")
        p.add_argument("goal", help="goal file (defgoal ...)")
        p.add_argument("--max-strands", type=_positive, default=3, metavar="N",
                       help="strands the search may add (default 3)")
        p.add_argument("--max-fresh", type=_positive, default=4, metavar="M",
                       help="fresh atoms the search may introduce (default 4)")
        p.add_argument("--max-states", type=_positive, default=20000, metavar="K",
                       help="states the search may visit (default 20000)")
        p.add_argument("--dot", metavar="DIR", help="write DOT graphs into DIR")
        p.add_argument("--json", metavar="PATH", help="write a JSON record to PATH ('-' for stdout)")
    return parser


def _write_dot(directory: str, graphs: list) -> None:
    os.makedirs(directory, exist_ok=True)
    for name, sk in graphs:
        with open(os.path.join(directory, f"{name}.dot"), "w", encoding="utf-8") as fh:
            fh.write(to_dot(sk, name))


def _write_json(path: str, record: dict, out) -> None:
    text = to_json(record)
    if path == "-":
        out.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def run(args, out=sys.stdout) -> int:
    protocol = load_protocol(args.protocol)
    goal = load_goal(args.goal, protocol)
    bounds = SearchBounds(args.max_strands, args.max_fresh, args.max_states)

    if args.command == "cs":
        cs = characteristic_skeleton(goal)
        if cs.ok:
            out.write(format_skeleton(cs.skeleton, "characteristic") + "\n")
        else:
            out.write(f"no characteristic skeleton: {cs.reason.value} at conjunct "
                      f"{cs.index + 1} ({cs.conjunct})\n")
        if args.dot and cs.ok:
            _write_dot(args.dot, [("characteristic", cs.skeleton)])
        if args.json:
            _write_json(args.json, cs_record(cs), out)
        return EXIT_ACHIEVED if cs.ok else EXIT_COUNTEREXAMPLE

    if args.command == "shapes":
        cs = characteristic_skeleton(goal)
        if not cs.ok:
            out.write(f"no characteristic skeleton: {cs.reason.value} at conjunct "
                      f"{cs.index + 1} ({cs.conjunct})\n")
            return EXIT_COUNTEREXAMPLE
        result = shapes(cs.skeleton, protocol, bounds)
        out.write(f"{len(result.shapes)} shape(s), search {'exhausted' if result.exhausted else 'bounded'}\n")
        for i, (_, sk) in enumerate(result.shapes):
            out.write(format_skeleton(sk, f"shape {i}") + "\n")
        if args.dot:
            _write_dot(args.dot, [(f"shape-{i}", sk) for i, (_, sk) in enumerate(result.shapes)])
        if args.json:
            _write_json(args.json, shapes_record(result, bounds), out)
        return EXIT_ACHIEVED if result.exhausted else EXIT_BOUND

    verdict = check_goal(protocol, goal, bounds)
    line = f"verdict: {verdict.kind.value}"
    if verdict.vacuous:
        line += f" (hypothesis unsatisfiable: {verdict.cs.reason.value})"
    else:
        line += f", {len(verdict.shapes)} shape(s), search {'exhausted' if verdict.exhausted else 'bounded'}"
    out.write(line + "\n")
    if verdict.counterexample is not None:
        out.write(format_skeleton(verdict.counterexample[1], "counterexample") + "\n")
    if args.dot:
        graphs = [(f"shape-{i}", sk) for i, (_, sk) in enumerate(verdict.shapes)]
        if verdict.counterexample is not None:
            graphs.append(("counterexample", verdict.counterexample[1]))
        _write_dot(args.dot, graphs)
    if args.json:
        _write_json(args.json, verdict_record(verdict), out)
    return _EXIT[verdict.kind]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except SkeletalError as exc:
        where = args.goal if not getattr(exc, "source", None) else ""
        print(f"skeletal: {where + ': ' if where else ''}{exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"skeletal: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
