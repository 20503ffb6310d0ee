"""Concrete interpreter and randomized cross-check of found sequences.

Every symbol (lane symbols, scalars, and the four hidden lanes of each
opaque register) gets a 32-bit value; the sequence is then executed
numerically straight from the ISA lane expressions, without going through
the symbolic transition machinery.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .isa import Form, InstructionTemplate, template_map
from .machine import GoalPattern, MachineState, Opaque, reg_name
from .terms import CONCRETE_OPS, App, IntLit, Sym, Term, evaluate, has_wild, symbols, wrap32

ConcreteState = tuple[tuple[int, int, int, int], ...]  # 8 registers, lanes high to low

BOUNDARY_VALUES = (0, -1)


def opaque_lane_name(tag: str, element: int) -> str:
    return f"{tag}#{element}"


def state_symbols(state: MachineState) -> set[str]:
    names: set[str] = set()
    for reg in state.regs:
        if isinstance(reg, Opaque):
            names.update(opaque_lane_name(reg.tag, i) for i in range(4))
        else:
            for lane in reg.lanes:
                names |= symbols(lane)
    return names


def concretize(state: MachineState, asg: Mapping[str, int]) -> ConcreteState:
    out = []
    for reg in state.regs:
        if isinstance(reg, Opaque):
            out.append(tuple(wrap32(asg[opaque_lane_name(reg.tag, i)]) for i in (3, 2, 1, 0)))
        else:
            out.append(tuple(evaluate(lane, asg) for lane in reg.lanes))
    return tuple(out)  # type: ignore[return-value]


def _eval_lane(expr: Term, env: Mapping[str, int]) -> int:
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, Sym):
        return env[expr.name]
    if isinstance(expr, App):
        return CONCRETE_OPS[expr.op](_eval_lane(expr.left, env), _eval_lane(expr.right, env))
    raise ValueError("wildcard in lane expression")


def step_concrete(
    template: InstructionTemplate, dst: int, src: int | str, regs: list, asg: Mapping[str, int]
) -> tuple[int, int, int, int]:
    """Result lanes (high to low) of one instruction on concrete registers."""
    d = regs[dst]
    env = {f"d{i}": d[3 - i] for i in range(4)}
    imm = None
    if template.form is Form.RR:
        s = regs[int(src)]
        env.update({f"s{i}": s[3 - i] for i in range(4)})
    elif template.form is Form.RI:
        imm = int(src)
        env["imm"] = imm
    else:
        if src not in asg:
            raise KeyError(f"no value for scalar {src!r}")
        env["scalar"] = wrap32(asg[str(src)])
    return tuple(_eval_lane(lane, env) for lane in template.lanes_for(imm))  # type: ignore[return-value]


def run_concrete(
    start: MachineState,
    instrs: Iterable,
    asg: Mapping[str, int],
    templates: Iterable[InstructionTemplate],
) -> ConcreteState:
    """Execute a sequence numerically from ``start`` under ``asg``."""
    by_name = template_map(templates)
    regs = list(concretize(start, asg))
    for instr in getattr(instrs, "instrs", instrs):
        template = by_name.get(instr.mnemonic)
        if template is None:
            raise KeyError(f"unknown mnemonic {instr.mnemonic!r}")
        regs[instr.dst] = step_concrete(template, instr.dst, instr.src, regs, asg)
    return tuple(regs)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    samples: int
    counterexample: Optional[dict[str, int]] = None
    register: Optional[int] = None
    element: Optional[int] = None
    expected: Optional[int] = None
    actual: Optional[int] = None

    def __bool__(self) -> bool:
        return self.passed

    def describe(self) -> str:
        if self.passed:
            return f"pass ({self.samples} samples)"
        return (
            f"fail: {reg_name(self.register)} element {self.element} is {self.actual}, "
            f"goal wants {self.expected} under {self.counterexample}"
        )


def sample_assignments(names: Iterable[str], samples: int, seed: int) -> list[dict[str, int]]:
    """``samples`` assignments; the first ones set every symbol to 0, then -1."""
    names = sorted(names)
    rng = random.Random(seed)
    out = [{n: v for n in names} for v in BOUNDARY_VALUES[:samples]]
    while len(out) < samples:
        out.append({n: wrap32(rng.getrandbits(32)) for n in names})
    return out


def verify_sequence(
    start: MachineState,
    goal: GoalPattern,
    seq,
    templates: Iterable[InstructionTemplate],
    scalars: Iterable[str] = (),
    samples: int = 100,
    seed: int = 0,
) -> Verdict:
    """Check ``seq`` against the goal on seeded random concrete inputs.

    Wildcard lanes are ignored.  A lane that mixes wildcards with other
    structure cannot be evaluated and is left to the symbolic matcher.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    templates = list(templates)
    names = state_symbols(start) | set(scalars)
    for want in goal.regs:
        if want is not None:
            for lane in want:
                names |= symbols(lane)
    for asg in sample_assignments(names, samples, seed):
        final = run_concrete(start, seq, asg, templates)
        for r, want in enumerate(goal.regs):
            if want is None:
                continue
            for pos, pattern in enumerate(want):
                if has_wild(pattern):
                    continue
                expected = evaluate(pattern, asg)
                actual = final[r][pos]
                if expected != actual:
                    return Verdict(False, samples, dict(asg), r, 3 - pos, expected, actual)
    return Verdict(True, samples)
