"""Command line entry point: ``idiom-forge run --query FILE ...``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .isa import IsaError, default_isa_text
from .query import ENGINES, QueryError, parse_cost_model, parse_query
from .report import EXIT_USAGE, emit, run_query
from .search import SearchError
from .terms import TermSyntaxError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idiom-forge",
        description="Exhaustive search for short SIMD instruction sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="search for the idiom described by one or more query files")
    run.add_argument("--isa", type=Path, help="ISA description (default: the shipped SSE2 subset)")
    run.add_argument("--query", type=Path, action="append", required=True,
                     help="query file; repeat to run a batch")
    run.add_argument("--engine", choices=ENGINES)
    run.add_argument("--cost-model", type=Path, help="file of 'cycles <mnemonic> <n>' lines")
    run.add_argument("--max-depth", type=int)
    run.add_argument("--max-cost", type=int)
    run.add_argument("--max-solutions", type=int)
    run.add_argument("--max-states", type=int)
    run.add_argument("--dedup-renames", action="store_true", default=None)
    run.add_argument("--normalize-goal", action="store_true", default=None)
    run.add_argument("--verify-samples", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--emit", choices=("asm", "json", "table"), default="asm")
    run.add_argument("--timing", action="store_true", help="include elapsed time in json output")
    run.add_argument("--out", type=Path, help="write output here instead of stdout")
    run.add_argument("--jobs", type=int, default=1, help="run batch queries in parallel")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    mapping = {
        "engine": "engine",
        "max_depth": "max_depth",
        "max_cost": "max_cost",
        "max_solutions": "max_solutions",
        "max_states": "max_states",
        "dedup_renames": "dedup_renames",
        "normalize_goal": "normalize",
        "verify_samples": "verify_samples",
        "seed": "seed",
    }
    return {field: getattr(args, arg) for arg, field in mapping.items() if getattr(args, arg) is not None}


def _run_one(query_path: Path, isa_text: str, cost_model, overrides: dict, fmt: str, timing: bool):
    q = parse_query(query_path.read_text(encoding="utf-8")).with_overrides(**overrides)
    report = run_query(q, isa_text, cost_model)
    return emit(report, fmt, timing), report.exit_code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        isa_text = args.isa.read_text(encoding="utf-8") if args.isa else default_isa_text()
        cost_model = parse_cost_model(args.cost_model.read_text(encoding="utf-8")) if args.cost_model else None
        overrides = _overrides(args)
        jobs = [(p, isa_text, cost_model, overrides, args.emit, args.timing) for p in args.query]
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_run_one, *zip(*jobs)))
        else:
            results = [_run_one(*job) for job in jobs]
    except (OSError, QueryError, IsaError, TermSyntaxError, SearchError, ValueError) as exc:
        print(f"idiom-forge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    text = "".join(out for out, _ in results)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return max(code for _, code in results)


if __name__ == "__main__":
    sys.exit(main())
