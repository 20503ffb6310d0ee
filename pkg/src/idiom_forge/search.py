"""Search for instruction sequences that turn a start state into a goal state.

Three engines share one interface and yield :class:`Sequence` objects as a
stream:

* :func:`ids_search` -- iterative deepening; depth-limited DFS rerun with
  bounds 0, 1, 2, ...  Reports every matching sequence, shortest first.
* :func:`bfs_search` -- level-order search with a visited set; one
  shortest sequence per distinct goal state, far cheaper on deep queries.
* :func:`cost_search` -- uniform-cost search on total cycles.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

from .isa import Form, Instruction, Transition, apply_transition, to_asm
from .machine import GoalPattern, MachineState, Opaque, match_goal


class SearchError(RuntimeError):
    pass


class CapacityExceeded(SearchError):
    """The memo table grew past ``SearchBudget.max_states``."""


@dataclass(frozen=True)
class SearchBudget:
    max_depth: int = 6
    max_cost: Optional[int] = None
    max_solutions: int = 1
    max_states: int = 2_000_000

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")
        if self.max_cost is not None and self.max_cost < 0:
            raise ValueError("max_cost must be nonnegative")
        if self.max_solutions < 1:
            raise ValueError("max_solutions must be positive")
        if self.max_states < 1:
            raise ValueError("max_states must be positive")


@dataclass(frozen=True)
class Sequence:
    instrs: tuple[Instruction, ...]
    total_cycles: int

    @property
    def length(self) -> int:
        return len(self.instrs)

    def asm(self) -> list[str]:
        return [to_asm(i) for i in self.instrs]

    def __str__(self) -> str:
        return "; ".join(self.asm()) if self.instrs else "<empty>"


@dataclass
class SearchStats:
    engine: str = ""
    expanded: int = 0
    generated: int = 0
    solutions: int = 0
    max_depth_reached: int = 0
    exhausted: bool = False
    elapsed: float = 0.0
    _t0: float = field(default=0.0, repr=False)

    def start(self, engine: str) -> None:
        self.engine = engine
        self._t0 = time.perf_counter()

    def stop(self) -> None:
        self.elapsed = time.perf_counter() - self._t0
        self.exhausted = self.solutions == 0


def _sequence(path: Iterable[Transition]) -> Sequence:
    path = list(path)
    return Sequence(tuple(t.instr for t in path), sum(t.cycles for t in path))


def ids_search(
    start: MachineState,
    goal: GoalPattern,
    transitions: list[Transition],
    budget: SearchBudget,
    normalize: bool = False,
    stats: SearchStats | None = None,
) -> Iterator[Sequence]:
    """Iterative deepening: all solutions of length 0, then 1, then 2, ...

    Within one length, solutions come out in the order induced by the
    transition list.  Transitions that leave the state unchanged are skipped.
    """
    if not transitions:
        raise SearchError("no transitions")
    stats = stats if stats is not None else SearchStats()
    stats.start("ids")
    found = 0
    ntrans = len(transitions)
    try:
        for depth in range(budget.max_depth + 1):
            stats.max_depth_reached = depth
            states = [start]
            nexts = [0]
            path: list[Transition] = []
            while states:
                level = len(path)
                state = states[-1]
                if level == depth:
                    if match_goal(state, goal, normalize):
                        found += 1
                        stats.solutions = found
                        yield _sequence(path)
                        if found >= budget.max_solutions:
                            return
                    states.pop()
                    nexts.pop()
                    if path:
                        path.pop()
                    continue
                i = nexts[-1]
                if i == 0:
                    stats.expanded += 1
                child = None
                while i < ntrans:
                    t = transitions[i]
                    i += 1
                    child = apply_transition(t, state)
                    if child is not None and child != state:
                        break
                    child = None
                nexts[-1] = i
                if child is None:
                    states.pop()
                    nexts.pop()
                    if path:
                        path.pop()
                    continue
                stats.generated += 1
                path.append(t)
                states.append(child)
                nexts.append(0)
    finally:
        stats.stop()


def _reconstruct(parents: dict, state: MachineState) -> list[Transition]:
    path = []
    while True:
        parent, t = parents[state]
        if parent is None:
            break
        path.append(t)
        state = parent
    path.reverse()
    return path


def bfs_search(
    start: MachineState,
    goal: GoalPattern,
    transitions: list[Transition],
    budget: SearchBudget,
    normalize: bool = False,
    stats: SearchStats | None = None,
) -> Iterator[Sequence]:
    """Level-order search; the first path to reach a state is its only path.

    Emits one shortest sequence per distinct goal-matching state.  Raises
    :class:`CapacityExceeded` when more than ``max_states`` states are seen.
    """
    if not transitions:
        raise SearchError("no transitions")
    stats = stats if stats is not None else SearchStats()
    stats.start("bfs")
    found = 0
    parents: dict[MachineState, tuple] = {start: (None, None)}
    try:
        if match_goal(start, goal, normalize):
            found = stats.solutions = 1
            yield Sequence((), 0)
            if found >= budget.max_solutions:
                return
        frontier = [start]
        for depth in range(1, budget.max_depth + 1):
            stats.max_depth_reached = depth
            nxt: list[MachineState] = []
            for state in frontier:
                stats.expanded += 1
                for t in transitions:
                    child = apply_transition(t, state)
                    if child is None or child in parents:
                        continue
                    parents[child] = (state, t)
                    if len(parents) > budget.max_states:
                        raise CapacityExceeded(
                            f"more than {budget.max_states} states at depth {depth}"
                        )
                    stats.generated += 1
                    nxt.append(child)
                    if match_goal(child, goal, normalize):
                        found += 1
                        stats.solutions = found
                        yield _sequence(_reconstruct(parents, child))
                        if found >= budget.max_solutions:
                            return
            if not nxt:
                break
            frontier = nxt
    finally:
        stats.stop()


def apply_cost_model(transitions: list[Transition], cost_model: Mapping[str, int]) -> list[Transition]:
    """Return copies of ``transitions`` whose cycle counts come from ``cost_model``.

    Mnemonics missing from the model cost 1.
    """
    out = []
    for t in transitions:
        cycles = cost_model.get(t.mnemonic, 1)
        if cycles <= 0:
            raise ValueError(f"cost of {t.mnemonic} must be positive, got {cycles}")
        out.append(Transition(t.instr, cycles, t.reads_dest, t.reads_src, t.wholecopy, t.constant, t.lane_fns))
    return out


def cost_search(
    start: MachineState,
    goal: GoalPattern,
    transitions: list[Transition],
    budget: SearchBudget,
    cost_model: Mapping[str, int] | None = None,
    normalize: bool = False,
    stats: SearchStats | None = None,
) -> Iterator[Sequence]:
    """Uniform-cost search on total cycles.

    Paths are ordered by (total cycles, length, transition indices), so the
    first solution is the cheapest, then shortest, then earliest in
    instantiation order.  One sequence per distinct goal state.
    """
    if not transitions:
        raise SearchError("no transitions")
    if cost_model is not None:
        transitions = apply_cost_model(transitions, cost_model)
    for t in transitions:
        if t.cycles <= 0:
            raise ValueError(f"cost of {t.mnemonic} must be positive, got {t.cycles}")
    stats = stats if stats is not None else SearchStats()
    stats.start("cost")
    max_cost = budget.max_cost
    found = 0
    best: dict[MachineState, tuple] = {start: (0, 0, ())}
    settled: set[MachineState] = set()
    heap: list = [(0, 0, (), start)]
    try:
        while heap:
            cost, length, idxs, state = heapq.heappop(heap)
            if state in settled:
                continue
            settled.add(state)
            stats.expanded += 1
            stats.max_depth_reached = max(stats.max_depth_reached, length)
            if match_goal(state, goal, normalize):
                found += 1
                stats.solutions = found
                yield _sequence(transitions[i] for i in idxs)
                if found >= budget.max_solutions:
                    return
            if length >= budget.max_depth:
                continue
            for i, t in enumerate(transitions):
                new_cost = cost + t.cycles
                if max_cost is not None and new_cost > max_cost:
                    continue
                child = apply_transition(t, state)
                if child is None or child in settled:
                    continue
                key = (new_cost, length + 1, idxs + (i,))
                known = best.get(child)
                if known is not None and known <= key:
                    continue
                if known is None and len(best) >= budget.max_states:
                    raise CapacityExceeded(f"more than {budget.max_states} states")
                best[child] = key
                stats.generated += 1
                heapq.heappush(heap, (*key, child))
    finally:
        stats.stop()


def scratch_registers(start: MachineState, goal: GoalPattern) -> list[int]:
    """Registers whose start contents are opaque and whose goal is unconstrained."""
    return [
        i
        for i, (content, want) in enumerate(zip(start.regs, goal.regs))
        if isinstance(content, Opaque) and want is None
    ]


def _canonical(seq: Sequence, scratch: list[int]) -> tuple:
    mapping: dict[int, int] = {}
    pool = iter(scratch)
    scratch_set = set(scratch)

    def rename(reg: int) -> int:
        if reg not in scratch_set:
            return reg
        if reg not in mapping:
            mapping[reg] = next(pool)
        return mapping[reg]

    out = []
    for instr in seq.instrs:
        dst = rename(instr.dst)
        src = rename(int(instr.src)) if instr.form is Form.RR else instr.src
        out.append((instr.mnemonic, dst, src))
    return tuple(out)


def dedup_renames(solutions: Iterable[Sequence], start: MachineState, goal: GoalPattern) -> list[Sequence]:
    """Keep the first of each family of solutions equal up to scratch-register renaming."""
    scratch = scratch_registers(start, goal)
    seen: set[tuple] = set()
    kept = []
    for seq in solutions:
        key = _canonical(seq, scratch)
        if key not in seen:
            seen.add(key)
            kept.append(seq)
    return kept
