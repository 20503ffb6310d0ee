"""Declarative instruction descriptions and their concrete transitions.

An ISA file lists instruction templates.  Each template gives the four
result lanes of the destination register as expressions over the
destination elements ``d0..d3``, the source elements ``s0..s3``, the
immediate ``imm`` or the scalar input ``scalar``::

    inst paddd form=rr cycles=1
      e3=(d3+s3) e2=(d2+s2) e1=(d1+s1) e0=(d0+s0)
    inst psrldq form=ri cycles=1 imms=4,8,12
      imm=4:  e3=0 e2=d3 e1=d2 e0=d1
      imm=8:  e3=0 e2=0 e1=d3 e0=d2
      imm=12: e3=0 e2=0 e1=0 e0=d3

Element 0 is the lowest dword.  A lane line without an ``imm=N:`` prefix
applies to every immediate that has no specific line.
"""

from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Optional, Sequence

from .machine import MachineState, Packed, parse_reg, reg_name
from .terms import (
    App,
    CONCRETE_OPS,
    IntLit,
    Sym,
    Term,
    TermSyntaxError,
    fold_binop,
    has_wild,
    iter_subterms,
    parse_term,
    wrap32,
)

DEST_SELECTORS = tuple(f"d{i}" for i in range(4))
SRC_SELECTORS = tuple(f"s{i}" for i in range(4))
IMM = "imm"
SCALAR = "scalar"
ALL_SELECTORS = frozenset(DEST_SELECTORS + SRC_SELECTORS + (IMM, SCALAR))


class Form(enum.Enum):
    RR = "rr"
    RI = "ri"
    RS = "rs"


class IsaError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


Lanes = tuple[Term, Term, Term, Term]  # e3, e2, e1, e0


@dataclass(frozen=True)
class InstructionTemplate:
    mnemonic: str
    form: Form
    cycles: int
    lanes: Optional[Lanes] = None
    imm_lanes: dict[int, Lanes] = field(default_factory=dict)
    imms: tuple[int, ...] = ()
    wholecopy: bool = False

    def lanes_for(self, imm: int | None = None) -> Lanes:
        if imm is not None and imm in self.imm_lanes:
            return self.imm_lanes[imm]
        if self.lanes is None:
            raise IsaError(f"{self.mnemonic}: no lane expressions for imm={imm}")
        return self.lanes

    def all_lane_sets(self) -> list[Lanes]:
        sets = list(self.imm_lanes.values())
        if self.lanes is not None:
            sets.append(self.lanes)
        return sets

    def selectors(self) -> set[str]:
        return {
            t.name
            for lanes in self.all_lane_sets()
            for lane in lanes
            for t in iter_subterms(lane)
            if isinstance(t, Sym)
        }

    @property
    def reads_dest(self) -> bool:
        return any(s in self.selectors() for s in DEST_SELECTORS)

    @property
    def reads_src(self) -> bool:
        return any(s in self.selectors() for s in SRC_SELECTORS)

    def with_cycles(self, cycles: int) -> InstructionTemplate:
        return InstructionTemplate(
            self.mnemonic, self.form, cycles, self.lanes, self.imm_lanes, self.imms, self.wholecopy
        )


# --- parsing ----------------------------------------------------------------

_LANE_SPLIT = re.compile(r"(?:^|\s)e([0-3])=")
_IMM_PREFIX = re.compile(r"^imm=(\d+)\s*:\s*(.*)$")


def _parse_lane_line(text: str, lineno: int) -> Lanes:
    parts = _LANE_SPLIT.split(text.strip())
    if parts[0].strip():
        raise IsaError(f"unexpected text before lane expressions: {parts[0].strip()!r}", lineno)
    lanes: dict[int, Term] = {}
    for index, expr in zip(parts[1::2], parts[2::2]):
        i = int(index)
        if i in lanes:
            raise IsaError(f"lane e{i} given twice", lineno)
        try:
            lanes[i] = parse_term(expr.strip())
        except TermSyntaxError as exc:
            raise IsaError(str(exc), lineno) from None
    if sorted(lanes) != [0, 1, 2, 3]:
        raise IsaError("lane line must define e3, e2, e1 and e0", lineno)
    return (lanes[3], lanes[2], lanes[1], lanes[0])


def _validate(t: InstructionTemplate, lineno: int) -> None:
    allowed = set(DEST_SELECTORS)
    if t.form is Form.RR:
        allowed |= set(SRC_SELECTORS)
    elif t.form is Form.RI:
        allowed.add(IMM)
    else:
        allowed.add(SCALAR)
    for lanes in t.all_lane_sets():
        for lane in lanes:
            if has_wild(lane):
                raise IsaError(f"{t.mnemonic}: wildcard in lane expression", lineno)
    for name in t.selectors():
        if name not in ALL_SELECTORS:
            raise IsaError(f"{t.mnemonic}: unknown selector {name!r}", lineno)
        if name not in allowed:
            raise IsaError(f"{t.mnemonic}: selector {name!r} not allowed with form={t.form.value}", lineno)
    if t.form is Form.RI:
        if not t.imms:
            raise IsaError(f"{t.mnemonic}: form=ri needs a nonempty imms= set", lineno)
        for imm in t.imms:
            t.lanes_for(imm)
        extra = set(t.imm_lanes) - set(t.imms)
        if extra:
            raise IsaError(f"{t.mnemonic}: lanes for undeclared immediates {sorted(extra)}", lineno)
    elif t.imms or t.imm_lanes:
        raise IsaError(f"{t.mnemonic}: immediates only allowed with form=ri", lineno)
    elif t.lanes is None:
        raise IsaError(f"{t.mnemonic}: missing lane expressions", lineno)
    if t.wholecopy:
        expected = tuple(Sym(f"s{i}") for i in (3, 2, 1, 0))
        if t.form is not Form.RR or t.lanes != expected:
            raise IsaError(f"{t.mnemonic}: wholecopy requires form=rr and e_i=s_i", lineno)


def parse_isa(text: str) -> list[InstructionTemplate]:
    """Parse an ISA description into validated templates, in file order."""
    templates: list[InstructionTemplate] = []
    pending: dict | None = None

    def finish() -> None:
        if pending is None:
            return
        t = InstructionTemplate(
            mnemonic=pending["mnemonic"],
            form=pending["form"],
            cycles=pending["cycles"],
            lanes=pending["lanes"],
            imm_lanes=pending["imm_lanes"],
            imms=pending["imms"],
            wholecopy=pending["wholecopy"],
        )
        _validate(t, pending["line"])
        templates.append(t)

    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        if words[0] == "inst" and not raw[0].isspace():
            finish()
            if len(words) < 2:
                raise IsaError("missing mnemonic", lineno)
            mnemonic = words[1].lower()
            if not re.fullmatch(r"[a-z][a-z0-9_]*", mnemonic):
                raise IsaError(f"bad mnemonic {words[1]!r}", lineno)
            if mnemonic in seen:
                raise IsaError(f"duplicate mnemonic {mnemonic!r}", lineno)
            seen.add(mnemonic)
            pending = {
                "mnemonic": mnemonic, "form": None, "cycles": None, "lanes": None,
                "imm_lanes": {}, "imms": (), "wholecopy": False, "line": lineno,
            }
            for word in words[2:]:
                key, _, value = word.partition("=")
                if key == "wholecopy" and not value:
                    pending["wholecopy"] = True
                elif key == "form":
                    try:
                        pending["form"] = Form(value.lower())
                    except ValueError:
                        raise IsaError(f"unknown form {value!r}", lineno) from None
                elif key == "cycles":
                    if not value.isdigit() or int(value) <= 0:
                        raise IsaError(f"cycles must be a positive integer, got {value!r}", lineno)
                    pending["cycles"] = int(value)
                elif key == "imms":
                    try:
                        imms = tuple(int(v) for v in value.split(",") if v.strip())
                    except ValueError:
                        raise IsaError(f"bad immediate list {value!r}", lineno) from None
                    if not imms:
                        raise IsaError("empty immediate set", lineno)
                    if any(not 0 <= v <= 255 for v in imms):
                        raise IsaError("immediates must fit in a byte", lineno)
                    pending["imms"] = tuple(sorted(set(imms)))
                else:
                    raise IsaError(f"unknown attribute {word!r}", lineno)
            if pending["form"] is None:
                raise IsaError(f"{mnemonic}: missing form=", lineno)
            if pending["cycles"] is None:
                raise IsaError(f"{mnemonic}: missing cycles=", lineno)
            continue
        if pending is None:
            raise IsaError("lane expressions outside an inst entry", lineno)
        body = line.strip()
        m = _IMM_PREFIX.match(body)
        if m:
            imm = int(m.group(1))
            if imm in pending["imm_lanes"]:
                raise IsaError(f"lanes for imm={imm} given twice", lineno)
            pending["imm_lanes"][imm] = _parse_lane_line(m.group(2), lineno)
        else:
            if pending["lanes"] is not None:
                raise IsaError("lane expressions given twice", lineno)
            pending["lanes"] = _parse_lane_line(body, lineno)
    finish()
    return templates


def default_isa_text() -> str:
    return resources.files("idiom_forge").joinpath("data/default.isa").read_text(encoding="utf-8")


def load_default_isa() -> list[InstructionTemplate]:
    return parse_isa(default_isa_text())


# --- instructions and transitions -------------------------------------------


@dataclass(frozen=True, slots=True)
class Instruction:
    """A concrete instruction; ``src`` is a register index, immediate, or scalar name."""

    mnemonic: str
    dst: int
    src: int | str
    form: Form

    def __str__(self) -> str:
        return to_asm(self)


def to_asm(instr: Instruction) -> str:
    """Intel syntax, destination first: ``paddd xmm1, xmm7``."""
    if instr.form is Form.RR:
        src = reg_name(int(instr.src))
    else:
        src = str(instr.src)
    return f"{instr.mnemonic} {reg_name(instr.dst)}, {src}"


def parse_asm(line: str) -> Instruction:
    m = re.fullmatch(r"\s*([a-z][a-z0-9_]*)\s+(xmm\d)\s*,\s*(\S+)\s*", line.lower())
    if m is None:
        raise ValueError(f"cannot parse instruction {line!r}")
    mnemonic, dst, src = m.groups()
    if src.startswith("xmm"):
        return Instruction(mnemonic, parse_reg(dst), parse_reg(src), Form.RR)
    if re.fullmatch(r"-?\d+", src):
        return Instruction(mnemonic, parse_reg(dst), int(src), Form.RI)
    # Scalars keep their original spelling.
    original = line.split(",", 1)[1].strip()
    return Instruction(mnemonic, parse_reg(dst), original, Form.RS)


def _fresh_elements(prefix: str) -> tuple[Term, ...]:
    return tuple(Sym(f"{prefix}{i}") for i in range(4))


def _substitute(expr: Term, binding: dict[str, Term]) -> Term:
    if isinstance(expr, Sym):
        return binding.get(expr.name, expr)
    if isinstance(expr, App):
        return fold_binop(expr.op, _substitute(expr.left, binding), _substitute(expr.right, binding))
    return expr


def _aliased_binding() -> dict[str, Term]:
    binding: dict[str, Term] = {}
    for i in range(4):
        fresh = Sym(f"__alias{i}")
        binding[f"d{i}"] = fresh
        binding[f"s{i}"] = fresh
    return binding


def lane_independent(template: InstructionTemplate) -> bool:
    """Whether the dst=src form folds to constants whatever the register holds."""
    if template.form is not Form.RR:
        return False
    binding = _aliased_binding()
    return all(
        isinstance(_substitute(lane, binding), IntLit)
        for lanes in template.all_lane_sets()
        for lane in lanes
    )


def _aliased_is_noop(template: InstructionTemplate, rng: random.Random, trials: int = 16) -> bool:
    # Concrete probe: an aliased form that returns its input on every sample is dead weight.
    for lanes in template.all_lane_sets():
        for _ in range(trials):
            values = [rng.getrandbits(32) for _ in range(4)]
            env = {f"d{i}": values[i] for i in range(4)}
            env.update({f"s{i}": values[i] for i in range(4)})
            for pos, lane in enumerate(lanes):
                if _eval_selector_expr(lane, env) != wrap32(values[3 - pos]):
                    return False
    return True


def _eval_selector_expr(expr: Term, env: dict[str, int]) -> int:
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, Sym):
        return wrap32(env[expr.name])
    assert isinstance(expr, App)
    return CONCRETE_OPS[expr.op](_eval_selector_expr(expr.left, env), _eval_selector_expr(expr.right, env))


# A compiled lane maps (dest elements, source elements) to a folded term.
LaneFn = Callable[[Sequence[Term], Sequence[Term]], Term]


def _compile(expr: Term, fixed: dict[str, Term]) -> LaneFn:
    if isinstance(expr, Sym):
        name = expr.name
        if name in fixed:
            value = fixed[name]
            return lambda d, s: value
        index = int(name[1])
        if name[0] == "d":
            return lambda d, s: d[index]
        return lambda d, s: s[index]
    if isinstance(expr, App):
        op = expr.op
        left = _compile(expr.left, fixed)
        right = _compile(expr.right, fixed)
        return lambda d, s: fold_binop(op, left(d, s), right(d, s))
    return lambda d, s: expr


def _make_state(regs: list) -> MachineState:
    # Results of folding ground lanes never contain wildcards; skip revalidation.
    state = object.__new__(MachineState)
    object.__setattr__(state, "regs", tuple(regs))
    return state


@dataclass(frozen=True, eq=False)
class Transition:
    instr: Instruction
    cycles: int
    reads_dest: bool
    reads_src: bool
    wholecopy: bool = False
    constant: Optional[Packed] = None
    lane_fns: tuple[LaneFn, ...] = ()

    @property
    def mnemonic(self) -> str:
        return self.instr.mnemonic

    def __repr__(self) -> str:
        return f"Transition({to_asm(self.instr)})"


def _make_transition(template: InstructionTemplate, dst: int, src: int | str) -> Transition:
    instr = Instruction(template.mnemonic, dst, src, template.form)
    if template.wholecopy:
        return Transition(instr, template.cycles, False, True, wholecopy=True)
    fixed: dict[str, Term] = {}
    imm = None
    if template.form is Form.RI:
        imm = int(src)
        fixed[IMM] = IntLit(imm)
    elif template.form is Form.RS:
        fixed[SCALAR] = Sym(str(src))
    lanes = template.lanes_for(imm)
    if template.form is Form.RR and dst == src and lane_independent(template):
        binding = _aliased_binding()
        const = Packed(tuple(_substitute(lane, binding) for lane in lanes))  # type: ignore[arg-type]
        return Transition(instr, template.cycles, False, False, constant=const)
    selectors = {t.name for lane in lanes for t in iter_subterms(lane) if isinstance(t, Sym)}
    reads_dest = any(s in selectors for s in DEST_SELECTORS)
    reads_src = any(s in selectors for s in SRC_SELECTORS)
    fns = tuple(_compile(lane, fixed) for lane in lanes)
    if not reads_dest and not reads_src:
        const = Packed(tuple(fn((), ()) for fn in fns))  # type: ignore[arg-type]
        return Transition(instr, template.cycles, False, False, constant=const)
    return Transition(instr, template.cycles, reads_dest, reads_src, lane_fns=fns)


def instantiate(
    templates: Iterable[InstructionTemplate],
    allowed_regs: Iterable[int],
    scalar_pool: Sequence[str] = (),
    mnemonic_whitelist: Optional[Iterable[str]] = None,
) -> list[Transition]:
    """Expand templates into concrete transitions in deterministic order.

    Order follows the template list (ISA file order), then destination,
    then source register, immediate, or scalar (pool order).  Aliased register-register forms are kept only
    when they fold to constants or actually change the register; whole
    register copies onto themselves are dropped.
    """
    regs = sorted(set(allowed_regs))
    if not regs:
        raise ValueError("no usable registers")
    allow = None if mnemonic_whitelist is None else {m.lower() for m in mnemonic_whitelist}
    rng = random.Random(0)
    out: list[Transition] = []
    for template in templates:
        if allow is not None and template.mnemonic not in allow:
            continue
        if template.form is Form.RR:
            keep_aliased = not template.wholecopy and (
                lane_independent(template) or not _aliased_is_noop(template, rng)
            )
            for dst in regs:
                for src in regs:
                    if dst == src and not keep_aliased:
                        continue
                    out.append(_make_transition(template, dst, src))
        elif template.form is Form.RI:
            for dst in regs:
                for imm in template.imms:
                    out.append(_make_transition(template, dst, imm))
        else:
            for dst in regs:
                for scalar in scalar_pool:
                    out.append(_make_transition(template, dst, scalar))
    return out


def aliased_kept(template: InstructionTemplate) -> bool:
    """Whether :func:`instantiate` emits the dst=src form of an RR template."""
    if template.form is not Form.RR or template.wholecopy:
        return False
    return lane_independent(template) or not _aliased_is_noop(template, random.Random(0))


def apply_transition(t: Transition, state: MachineState) -> Optional[MachineState]:
    """Execute ``t`` symbolically; ``None`` when it would read opaque lanes."""
    regs = state.regs
    dst = t.instr.dst
    if t.wholecopy:
        content = regs[t.instr.src]  # type: ignore[index]
    elif t.constant is not None:
        content = t.constant
    else:
        d = s = ()
        if t.reads_dest:
            dreg = regs[dst]
            if not isinstance(dreg, Packed):
                return None
            d = dreg.lanes[::-1]
        if t.reads_src:
            sreg = regs[t.instr.src]  # type: ignore[index]
            if not isinstance(sreg, Packed):
                return None
            s = sreg.lanes[::-1]
        content = Packed(tuple(fn(d, s) for fn in t.lane_fns))  # type: ignore[arg-type]
    new = list(regs)
    new[dst] = content
    return _make_state(new)


def template_map(templates: Iterable[InstructionTemplate]) -> dict[str, InstructionTemplate]:
    return {t.mnemonic: t for t in templates}
