"""SIMD machine state: eight xmm registers holding four packed dwords each."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .terms import Term, has_wild, match_term, normalize_ac, print_term

NUM_REGS = 8


def reg_name(index: int) -> str:
    return f"xmm{index}"


def parse_reg(name: str) -> int:
    name = name.strip().lower()
    if not name.startswith("xmm") or not name[3:].isdigit():
        raise ValueError(f"not an xmm register: {name!r}")
    index = int(name[3:])
    if not 0 <= index < NUM_REGS:
        raise ValueError(f"register out of range: {name!r}")
    return index


@dataclass(frozen=True, slots=True)
class Opaque:
    """Register contents that exist but cannot be inspected."""

    tag: str

    def __str__(self) -> str:
        return self.tag


@dataclass(frozen=True, slots=True)
class Packed:
    """Four dword lanes, highest element first (``lanes[0]`` is element 3)."""

    lanes: tuple[Term, Term, Term, Term]

    def __post_init__(self) -> None:
        if len(self.lanes) != 4:
            raise ValueError("packed register needs exactly four lanes")

    def element(self, i: int) -> Term:
        return self.lanes[3 - i]

    def __str__(self) -> str:
        return "[" + ",".join(print_term(t) for t in self.lanes) + "]"


RegisterContent = Union[Opaque, Packed]


def packed(*lanes: Term) -> Packed:
    return Packed(tuple(lanes))  # type: ignore[arg-type]


@dataclass(frozen=True, slots=True)
class MachineState:
    regs: tuple[RegisterContent, ...]

    def __post_init__(self) -> None:
        if len(self.regs) != NUM_REGS:
            raise ValueError(f"machine state needs {NUM_REGS} registers, got {len(self.regs)}")
        for reg in self.regs:
            if isinstance(reg, Packed) and any(has_wild(t) for t in reg.lanes):
                raise ValueError("wildcards are not allowed in a machine state")

    def replace(self, index: int, content: RegisterContent) -> MachineState:
        regs = list(self.regs)
        regs[index] = content
        return MachineState(tuple(regs))

    def __str__(self) -> str:
        return "[ " + ", ".join(str(r) for r in self.regs) + " ]"


def opaque_start(tags: Sequence[str] | None = None) -> MachineState:
    """All-opaque start state; defaults to tags ``xmm0`` .. ``xmm7``."""
    if tags is None:
        tags = [reg_name(i) for i in range(NUM_REGS)]
    tags = list(tags)
    if len(tags) != NUM_REGS:
        raise ValueError(f"need {NUM_REGS} tags, got {len(tags)}")
    if len(set(tags)) != len(tags):
        raise ValueError(f"opaque tags must be pairwise distinct: {tags}")
    return MachineState(tuple(Opaque(t) for t in tags))


def state_key(state: MachineState) -> str:
    """Canonical text encoding; equal iff the states are structurally equal."""
    return ";".join(str(reg) for reg in state.regs)


RegisterGoal = Optional[tuple[Term, Term, Term, Term]]
"""``None`` accepts any contents; otherwise four lane patterns, high to low."""


@dataclass(frozen=True)
class GoalPattern:
    regs: tuple[RegisterGoal, ...]

    def __post_init__(self) -> None:
        if len(self.regs) != NUM_REGS:
            raise ValueError(f"goal needs {NUM_REGS} register slots")
        if all(g is None for g in self.regs):
            raise ValueError("goal constrains no register")
        for g in self.regs:
            if g is not None and len(g) != 4:
                raise ValueError("packed goal needs exactly four lanes")

    @classmethod
    def from_mapping(cls, goals: dict[int, Iterable[Term]]) -> GoalPattern:
        regs: list[RegisterGoal] = [None] * NUM_REGS
        for index, lanes in goals.items():
            regs[index] = tuple(lanes)  # type: ignore[assignment]
        return cls(tuple(regs))

    def constrained(self) -> list[int]:
        return [i for i, g in enumerate(self.regs) if g is not None]

    def __str__(self) -> str:
        parts = []
        for g in self.regs:
            parts.append("_" if g is None else "[" + ",".join(print_term(t) for t in g) + "]")
        return "[ " + ", ".join(parts) + " ]"


def match_goal(state: MachineState, goal: GoalPattern, normalize: bool = False) -> bool:
    """True iff every constrained register is packed and matches lane-wise."""
    for reg, want in zip(state.regs, goal.regs):
        if want is None:
            continue
        if not isinstance(reg, Packed):
            return False
        for pattern, lane in zip(want, reg.lanes):
            if normalize:
                pattern, lane = normalize_ac(pattern), normalize_ac(lane)
            if not match_term(pattern, lane):
                return False
    return True
