"""Run a query end to end and render the result."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping

from .isa import InstructionTemplate, instantiate, load_default_isa, parse_isa
from .query import Query, QueryError
from .search import (
    CapacityExceeded,
    SearchStats,
    Sequence,
    bfs_search,
    cost_search,
    dedup_renames,
    ids_search,
)
from .verify import verify_sequence

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_SOLUTION = 2
EXIT_VERIFY_FAILED = 3


@dataclass
class SolutionRecord:
    instrs: list[str]
    length: int
    total_cycles: int
    verdict: str  # "pass", "fail" or "skipped"
    detail: str = ""


@dataclass
class Report:
    query: dict
    transition_count: int
    solutions: list[SolutionRecord] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    exhausted: bool = False
    capacity_exceeded: bool = False
    deduplicated: bool = False

    @property
    def name(self) -> str:
        return self.query["name"]

    @property
    def exit_code(self) -> int:
        if any(s.verdict == "fail" for s in self.solutions):
            return EXIT_VERIFY_FAILED
        if not self.solutions:
            return EXIT_NO_SOLUTION
        return EXIT_OK

    def to_dict(self, include_timing: bool = False) -> dict:
        d = asdict(self)
        if not include_timing:
            d["stats"] = {k: v for k, v in d["stats"].items() if k != "elapsed"}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> Report:
        return cls(
            query=dict(d["query"]),
            transition_count=d["transition_count"],
            solutions=[SolutionRecord(**s) for s in d["solutions"]],
            stats=dict(d["stats"]),
            exhausted=d["exhausted"],
            capacity_exceeded=d["capacity_exceeded"],
            deduplicated=d["deduplicated"],
        )


def _templates_for(
    isa: str | Iterable[InstructionTemplate] | None, cost_model: Mapping[str, int] | None
) -> list[InstructionTemplate]:
    if isa is None:
        templates = load_default_isa()
    elif isinstance(isa, str):
        templates = parse_isa(isa)
    else:
        templates = list(isa)
    if cost_model is not None:
        for mnemonic, cycles in cost_model.items():
            if cycles <= 0:
                raise ValueError(f"cost of {mnemonic} must be positive, got {cycles}")
        templates = [t.with_cycles(cost_model.get(t.mnemonic, 1)) for t in templates]
    return templates


def run_query(
    q: Query,
    isa: str | Iterable[InstructionTemplate] | None = None,
    cost_model: Mapping[str, int] | None = None,
) -> Report:
    """Instantiate the ISA, search, optionally deduplicate, and verify.

    ``isa`` is ISA file text, parsed templates, or ``None`` for the shipped
    default.  A ``cost_model`` replaces the ISA cycle counts; mnemonics it
    does not list cost 1.
    """
    templates = _templates_for(isa, cost_model)
    known = {t.mnemonic for t in templates}
    if q.allow is not None:
        unknown = sorted(set(q.allow) - known)
        if unknown:
            raise QueryError(f"allow lists mnemonics missing from the ISA: {', '.join(unknown)}")
    transitions = instantiate(templates, q.registers, q.scalars, q.allow)

    stats = SearchStats()
    report = Report(query=q.describe(), transition_count=len(transitions))
    if not transitions:
        stats.exhausted = True
        report.exhausted = True
        report.stats = _stats_dict(stats)
        return report

    engines = {"ids": ids_search, "bfs": bfs_search, "cost": cost_search}
    stream = engines[q.engine](q.start, q.goal, transitions, q.budget, normalize=q.normalize, stats=stats)
    found: list[Sequence] = []
    try:
        for seq in stream:
            found.append(seq)
    except CapacityExceeded:
        report.capacity_exceeded = True
    if q.dedup_renames:
        found = dedup_renames(found, q.start, q.goal)
        report.deduplicated = True

    for seq in found:
        if q.verify_samples > 0:
            verdict = verify_sequence(
                q.start, q.goal, seq, templates, q.scalars, q.verify_samples, q.seed
            )
            status = "pass" if verdict.passed else "fail"
            detail = verdict.describe()
        else:
            status, detail = "skipped", "verification disabled"
        report.solutions.append(SolutionRecord(seq.asm(), seq.length, seq.total_cycles, status, detail))

    report.exhausted = not report.solutions
    report.stats = _stats_dict(stats)
    return report


def _stats_dict(stats: SearchStats) -> dict:
    return {
        "engine": stats.engine,
        "expanded": stats.expanded,
        "generated": stats.generated,
        "max_depth_reached": stats.max_depth_reached,
        "elapsed": round(stats.elapsed, 6),
    }


# --- emitters -----------------------------------------------------------------


def emit_asm(report: Report) -> str:
    lines = [f"; idiom {report.name}: {len(report.solutions)} solution(s)"]
    for n, sol in enumerate(report.solutions, start=1):
        lines.append(
            f"; solution {n}: length {sol.length}, {sol.total_cycles} cycles, verify {sol.verdict}"
        )
        lines.extend(sol.instrs)
    if report.exhausted:
        lines.append("; no solution within budget")
    if report.capacity_exceeded:
        lines.append("; search stopped: state table capacity exceeded")
    return "\n".join(lines) + "\n"


def emit_json(report: Report, include_timing: bool = False) -> str:
    return json.dumps(report.to_dict(include_timing), indent=2, sort_keys=True) + "\n"


def emit_table(report: Report) -> str:
    """One ``idiom <name>: <instr>; ...`` line per solution that did not fail verification."""
    lines = [f"# idiom table: {report.name} ({report.query['engine']})"]
    for sol in report.solutions:
        if sol.verdict == "fail":
            continue
        lines.append((f"idiom {report.name}: " + "; ".join(sol.instrs)).rstrip())
    return "\n".join(lines) + "\n"


def emit(report: Report, fmt: str = "asm", include_timing: bool = False) -> str:
    if fmt == "asm":
        return emit_asm(report)
    if fmt == "json":
        return emit_json(report, include_timing)
    if fmt == "table":
        return emit_table(report)
    raise ValueError(f"unknown output format {fmt!r}")
