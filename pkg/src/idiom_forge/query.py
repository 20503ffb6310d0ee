"""Query files: what to search for, from where, and with which budget.

Example::

    name hsum
    registers xmm0, xmm1
    start xmm0 = [a,b,c,d]
    goal xmm0 = [_,_,_,((d+b)+(c+a))]
    allow movdqa, psrldq, paddd, punpckldq
    engine bfs
    max_depth 6

Registers without a ``start`` line hold opaque contents tagged with their
own name.  Wildcards are rejected in start states: a start register that
may hold "anything" lets the search assume whatever contents make the goal
trivially true.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .machine import NUM_REGS, GoalPattern, MachineState, Opaque, Packed, parse_reg, reg_name
from .search import SearchBudget
from .terms import Term, TermSyntaxError, has_wild, parse_term, print_term, symbols

ENGINES = ("ids", "bfs", "cost")
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_.]*")


class QueryError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class Query:
    name: str
    start: MachineState
    goal: GoalPattern
    registers: tuple[int, ...] = tuple(range(NUM_REGS))
    scalars: tuple[str, ...] = ()
    allow: Optional[tuple[str, ...]] = None
    engine: str = "ids"
    normalize: bool = False
    dedup_renames: bool = False
    budget: SearchBudget = field(default_factory=SearchBudget)
    verify_samples: int = 100
    seed: int = 0

    def with_overrides(self, **changes) -> Query:
        budget_fields = {"max_depth", "max_cost", "max_solutions", "max_states"}
        budget_changes = {k: changes.pop(k) for k in list(changes) if k in budget_fields}
        q = replace(self, **changes)
        if budget_changes:
            q = replace(q, budget=replace(q.budget, **budget_changes))
        return q

    def describe(self) -> dict:
        return {
            "name": self.name,
            "registers": [reg_name(r) for r in self.registers],
            "start": [str(r) for r in self.start.regs],
            "scalars": list(self.scalars),
            "goal": [None if g is None else [print_term(t) for t in g] for g in self.goal.regs],
            "allow": None if self.allow is None else list(self.allow),
            "engine": self.engine,
            "normalize": self.normalize,
            "dedup_renames": self.dedup_renames,
            "max_depth": self.budget.max_depth,
            "max_cost": self.budget.max_cost,
            "max_solutions": self.budget.max_solutions,
            "max_states": self.budget.max_states,
            "verify_samples": self.verify_samples,
            "seed": self.seed,
        }


def _parse_lanes(text: str, lineno: int) -> tuple[Term, Term, Term, Term]:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise QueryError(f"expected [e3,e2,e1,e0], got {text!r}", lineno)
    parts = [p.strip() for p in text[1:-1].split(",")]
    if len(parts) != 4:
        raise QueryError(f"expected four lanes, got {len(parts)}", lineno)
    try:
        return tuple(parse_term(p) for p in parts)  # type: ignore[return-value]
    except TermSyntaxError as exc:
        raise QueryError(str(exc), lineno) from None


def _parse_int(value: str, key: str, lineno: int, minimum: int = 0) -> int:
    try:
        n = int(value)
    except ValueError:
        raise QueryError(f"{key} needs an integer, got {value!r}", lineno) from None
    if n < minimum:
        raise QueryError(f"{key} must be at least {minimum}", lineno)
    return n


def _parse_flag(value: str, key: str, lineno: int) -> bool:
    value = value.strip().lower()
    if value in ("", "on", "true", "yes", "1"):
        return True
    if value in ("off", "false", "no", "0"):
        return False
    raise QueryError(f"{key} expects on/off, got {value!r}", lineno)


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in re.split(r"[,\s]+", value) if v.strip()]


_PITFALL = (
    "wildcard in start state for {reg}: a start register that may hold anything lets the "
    "search pick favorable initial contents; state its contents or use 'opaque <tag>'"
)


def parse_query(text: str) -> Query:
    """Parse and validate a query file."""
    name = "query"
    registers: Optional[list[int]] = None
    starts: dict[int, object] = {}
    goals: dict[int, tuple] = {}
    goal_lines: dict[int, int] = {}
    scalars: list[str] = []
    allow: Optional[list[str]] = None
    engine = "ids"
    normalize = False
    dedup = False
    budget: dict[str, Optional[int]] = {}
    verify_samples = 100
    seed = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        key = key.lower()
        rest = rest.strip()
        if key == "name":
            if not _IDENT.fullmatch(rest):
                raise QueryError(f"bad query name {rest!r}", lineno)
            name = rest
        elif key == "registers":
            try:
                registers = sorted({parse_reg(r) for r in _split_list(rest)})
            except ValueError as exc:
                raise QueryError(str(exc), lineno) from None
            if not registers:
                raise QueryError("registers list is empty", lineno)
        elif key in ("start", "goal"):
            reg_text, eq, value = rest.partition("=")
            if not eq:
                raise QueryError(f"expected '{key} xmmN = ...'", lineno)
            try:
                reg = parse_reg(reg_text)
            except ValueError as exc:
                raise QueryError(str(exc), lineno) from None
            value = value.strip()
            if key == "start":
                if reg in starts:
                    raise QueryError(f"start for {reg_name(reg)} given twice", lineno)
                if value == "_" or value.startswith("_"):
                    raise QueryError(_PITFALL.format(reg=reg_name(reg)), lineno)
                if value.startswith("opaque"):
                    tag = value[len("opaque"):].strip()
                    if not _IDENT.fullmatch(tag):
                        raise QueryError(f"bad opaque tag {tag!r}", lineno)
                    starts[reg] = Opaque(tag)
                else:
                    lanes = _parse_lanes(value, lineno)
                    if any(has_wild(t) for t in lanes):
                        raise QueryError(_PITFALL.format(reg=reg_name(reg)), lineno)
                    starts[reg] = Packed(lanes)
            else:
                if reg in goals:
                    raise QueryError(f"goal for {reg_name(reg)} given twice", lineno)
                goals[reg] = _parse_lanes(value, lineno)
                goal_lines[reg] = lineno
        elif key == "scalars":
            for s in _split_list(rest):
                if not _IDENT.fullmatch(s) or re.fullmatch(r"xmm\d+", s.lower()):
                    raise QueryError(f"bad scalar name {s!r}", lineno)
                if s not in scalars:
                    scalars.append(s)
        elif key == "allow":
            allow = [m.lower() for m in _split_list(rest)]
        elif key == "engine":
            if rest not in ENGINES:
                raise QueryError(f"engine must be one of {', '.join(ENGINES)}", lineno)
            engine = rest
        elif key in ("max_depth", "max_cost"):
            budget[key] = _parse_int(rest, key, lineno)
        elif key in ("max_solutions", "max_states"):
            budget[key] = _parse_int(rest, key, lineno, minimum=1)
        elif key == "normalize":
            normalize = _parse_flag(rest, key, lineno)
        elif key == "dedup_renames":
            dedup = _parse_flag(rest, key, lineno)
        elif key == "verify_samples":
            verify_samples = _parse_int(rest, key, lineno)
        elif key == "seed":
            seed = _parse_int(rest, key, lineno)
        else:
            raise QueryError(f"unknown directive {key!r}", lineno)

    if not goals:
        raise QueryError("query has no goal")
    regs = tuple(registers) if registers is not None else tuple(range(NUM_REGS))
    content = []
    for i in range(NUM_REGS):
        content.append(starts.get(i, Opaque(reg_name(i))))
    tags = [c.tag for c in content if isinstance(c, Opaque)]
    if len(set(tags)) != len(tags):
        raise QueryError(f"opaque start tags must be distinct: {tags}")
    start = MachineState(tuple(content))

    declared = set(scalars)
    for c in content:
        if isinstance(c, Packed):
            for lane in c.lanes:
                declared |= symbols(lane)
    for reg, lanes in goals.items():
        lineno = goal_lines[reg]
        if reg not in regs:
            raise QueryError(f"goal register {reg_name(reg)} is not among the usable registers", lineno)
        for lane in lanes:
            unknown = symbols(lane) - declared
            if unknown:
                raise QueryError(f"undeclared symbol(s) in goal: {', '.join(sorted(unknown))}", lineno)
    try:
        goal = GoalPattern.from_mapping(goals)
        search_budget = SearchBudget(**{k: v for k, v in budget.items()})
    except ValueError as exc:
        raise QueryError(str(exc)) from None
    return Query(
        name=name,
        start=start,
        goal=goal,
        registers=regs,
        scalars=tuple(scalars),
        allow=None if allow is None else tuple(allow),
        engine=engine,
        normalize=normalize,
        dedup_renames=dedup,
        budget=search_budget,
        verify_samples=verify_samples,
        seed=seed,
    )


def parse_cost_model(text: str) -> dict[str, int]:
    """``cycles <mnemonic> <positive-int>`` lines; unlisted mnemonics cost 1."""
    model: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if len(words) != 3 or words[0] != "cycles":
            raise QueryError("expected 'cycles <mnemonic> <int>'", lineno)
        try:
            cycles = int(words[2])
        except ValueError:
            raise QueryError(f"bad cycle count {words[2]!r}", lineno) from None
        if cycles <= 0:
            raise QueryError(f"cycle count for {words[1]} must be positive", lineno)
        model[words[1].lower()] = cycles
    return model
