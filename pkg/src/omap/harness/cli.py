"""``omap`` command line: run scenario scripts or random schedules."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .fuzz import run_random_schedules
from .scenario import EXIT_INVARIANT, EXIT_OK, EXIT_PARSE, ParseError, load_scenario, run_scenario


def _common(suppress: bool) -> argparse.ArgumentParser:
    # shared flags are accepted before or after the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--depth", type=int, default=d(None), help="Merkle tree depth (default: 16, or the script's own)")
    c.add_argument("--dump-ledger", type=Path, default=d(None), metavar="PATH",
                   help="write the final ledger state of a scenario to PATH")
    c.add_argument("--verbose", action="store_true", default=d(False), help="include harness detail lines")
    return c


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omap", description="Shielded multi-asset ledger exchange harness.",
                                parents=[_common(False)])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario script", parents=[_common(True)])
    run.add_argument("file", type=Path)
    fz = sub.add_parser("fuzz", help="run randomized exchange schedules", parents=[_common(True)])
    fz.add_argument("--count", type=int, default=1000)
    fz.add_argument("--seed", default="0")
    return p


def _run(args) -> int:
    try:
        sc = load_scenario(args.file)
    except ParseError as e:
        print(f"{args.file}: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return EXIT_PARSE
    res = run_scenario(sc, depth=args.depth, verbose=args.verbose)
    sys.stdout.write(res.trace_text())
    if args.dump_ledger is not None:
        args.dump_ledger.write_text(res.world.ledger.dump())
    for f in res.failures:
        print(f"expectation failed: {f}", file=sys.stderr)
    for v in res.violations:
        print(f"invariant violated: {v}", file=sys.stderr)
    print("PASS" if res.exit_code == EXIT_OK else "FAIL", file=sys.stderr)
    return res.exit_code


def _fuzz(args) -> int:
    if args.count < 1:
        print("--count must be at least 1", file=sys.stderr)
        return EXIT_PARSE
    t0 = time.perf_counter()
    report = run_random_schedules(args.count, args.seed, args.depth or 16)
    sys.stdout.write(report.text())
    if args.verbose:
        print(f"elapsed {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_INVARIANT


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.depth is not None and not 1 <= args.depth <= 32:
        print("--depth must be in 1..32", file=sys.stderr)
        return EXIT_PARSE
    return _run(args) if args.command == "run" else _fuzz(args)


if __name__ == "__main__":
    sys.exit(main())
