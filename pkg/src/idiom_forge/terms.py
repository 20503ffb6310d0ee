"""Symbolic lane terms.

A lane holds a 32-bit integer literal, an opaque symbol, an operator
application, or (in goal patterns only) a wildcard.  Terms are immutable
and hashable so states built from them can be memoized directly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Union

MASK32 = 0xFFFFFFFF


def wrap32(value: int) -> int:
    """Reduce ``value`` into the signed 32-bit two's-complement range."""
    value &= MASK32
    return value - (1 << 32) if value & 0x80000000 else value


class Operator(enum.Enum):
    ADD = "+"
    SUB = "-"
    AND = "&"
    OR = "|"
    XOR = "^"
    CMPEQ = "=="

    @property
    def symbol(self) -> str:
        return self.value


# Concrete semantics shared by the symbolic folder and the concrete interpreter.
CONCRETE_OPS: dict[Operator, Callable[[int, int], int]] = {
    Operator.ADD: lambda a, b: wrap32(a + b),
    Operator.SUB: lambda a, b: wrap32(a - b),
    Operator.AND: lambda a, b: wrap32(a & b),
    Operator.OR: lambda a, b: wrap32(a | b),
    Operator.XOR: lambda a, b: wrap32(a ^ b),
    Operator.CMPEQ: lambda a, b: -1 if wrap32(a) == wrap32(b) else 0,
}

AC_OPERATORS = frozenset({Operator.ADD, Operator.AND, Operator.OR, Operator.XOR})


@dataclass(frozen=True, slots=True)
class IntLit:
    value: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", wrap32(self.value))

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, slots=True)
class Sym:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class _Wild:
    def __str__(self) -> str:
        return "_"

    def __reduce__(self):
        return "WILD"


WILD = _Wild()


@dataclass(frozen=True, slots=True)
class App:
    op: Operator
    left: Term
    right: Term

    def __str__(self) -> str:
        return print_term(self)


Term = Union[IntLit, Sym, _Wild, App]

ZERO = IntLit(0)
ALL_ONES = IntLit(-1)


# --- printing / parsing ---------------------------------------------------


def print_term(t: Term) -> str:
    """Render ``t`` in the fully parenthesized concrete syntax."""
    if isinstance(t, App):
        return f"({print_term(t.left)}{t.op.symbol}{print_term(t.right)})"
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, Sym):
        return t.name
    return "_"


class TermSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.text = text
        self.pos = pos


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>-?\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_.]*)|(?P<wild>_(?![A-Za-z0-9_]))"
    r"|(?P<op>==|[-+&|^])|(?P<lpar>\()|(?P<rpar>\)))"
)
_OPS_BY_SYMBOL = {op.symbol: op for op in Operator}
_OPERAND_END = frozenset({"int", "ident", "wild", "rpar"})


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise TermSyntaxError("unexpected character", text, pos)
        kind = m.lastgroup
        assert kind is not None
        value, start = m.group(kind), m.start(kind)
        # "a-1" is subtraction: a leading minus only negates in operand position.
        if kind == "int" and value.startswith("-") and tokens and tokens[-1][0] in _OPERAND_END:
            tokens.append(("op", "-", start))
            tokens.append(("int", value[1:], start + 1))
        else:
            tokens.append((kind, value, start))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise TermSyntaxError("unexpected end of input", self.text, len(self.text))
        self.i += 1
        return tok

    def expr(self) -> Term:
        # Without parentheses only a single binary operator is allowed;
        # chains like a+b+c are ambiguous under the no-precedence grammar.
        left = self.atom()
        tok = self.peek()
        if tok is not None and tok[0] == "op":
            self.i += 1
            right = self.atom()
            left = App(_OPS_BY_SYMBOL[tok[1]], left, right)
            tok = self.peek()
            if tok is not None and tok[0] == "op":
                raise TermSyntaxError("operator chain needs parentheses", self.text, tok[2])
        return left

    def atom(self) -> Term:
        kind, value, pos = self.next()
        if kind == "int":
            return IntLit(int(value))
        if kind == "ident":
            return Sym(value)
        if kind == "wild":
            return WILD
        if kind == "lpar":
            inner = self.expr()
            kind, _, pos = self.next()
            if kind != "rpar":
                raise TermSyntaxError("expected ')'", self.text, pos)
            return inner
        raise TermSyntaxError(f"unexpected {value!r}", self.text, pos)


def parse_term(text: str) -> Term:
    """Parse the infix expression syntax (``+ - & | ^ ==``, parentheses).

    Grouping follows the parentheses exactly; there is no precedence and
    no reassociation.
    """
    p = _Parser(text)
    if not p.tokens:
        raise TermSyntaxError("empty expression", text, 0)
    t = p.expr()
    tok = p.peek()
    if tok is not None:
        raise TermSyntaxError(f"trailing {tok[1]!r}", text, tok[2])
    return t


# --- inspection -----------------------------------------------------------


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        yield from iter_subterms(t.left)
        yield from iter_subterms(t.right)


def symbols(t: Term) -> set[str]:
    return {s.name for s in iter_subterms(t) if isinstance(s, Sym)}


def has_wild(t: Term) -> bool:
    return any(isinstance(s, _Wild) for s in iter_subterms(t))


def match_term(pattern: Term, subject: Term) -> bool:
    """One-way syntactic match; wildcards in ``pattern`` accept any subterm."""
    if isinstance(pattern, _Wild):
        return True
    if isinstance(pattern, App):
        return (
            isinstance(subject, App)
            and pattern.op is subject.op
            and match_term(pattern.left, subject.left)
            and match_term(pattern.right, subject.right)
        )
    return pattern == subject


def fold_binop(op: Operator, left: Term, right: Term) -> Term:
    """Build ``op(left, right)``, folding integer operands and self-identities."""
    if isinstance(left, IntLit) and isinstance(right, IntLit):
        return IntLit(CONCRETE_OPS[op](left.value, right.value))
    if op is Operator.XOR and left == right:
        return ZERO
    if op is Operator.SUB and left == right:
        return ZERO
    if op is Operator.CMPEQ and left == right:
        return ALL_ONES
    return App(op, left, right)


def evaluate(t: Term, assignment: Mapping[str, int]) -> int:
    """Concrete value of a ground term under ``assignment``."""
    if isinstance(t, IntLit):
        return t.value
    if isinstance(t, Sym):
        try:
            return wrap32(assignment[t.name])
        except KeyError:
            raise KeyError(f"no value for symbol {t.name!r}") from None
    if isinstance(t, App):
        return CONCRETE_OPS[t.op](evaluate(t.left, assignment), evaluate(t.right, assignment))
    raise ValueError("cannot evaluate a wildcard")


# --- AC normalization -----------------------------------------------------

_KIND_RANK = {IntLit: 0, Sym: 1, _Wild: 2, App: 3}
_OP_RANK = {op: i for i, op in enumerate(Operator)}


def term_order_key(t: Term) -> tuple:
    """Total order on terms: literals < symbols < wildcard < applications."""
    if isinstance(t, IntLit):
        return (0, t.value)
    if isinstance(t, Sym):
        return (1, t.name)
    if isinstance(t, App):
        return (3, _OP_RANK[t.op], term_order_key(t.left), term_order_key(t.right))
    return (2,)


def _flatten(op: Operator, t: Term, out: list[Term]) -> None:
    if isinstance(t, App) and t.op is op:
        _flatten(op, t.left, out)
        _flatten(op, t.right, out)
    else:
        out.append(normalize_ac(t))


def normalize_ac(t: Term) -> Term:
    """Flatten associative-commutative chains, sort operands, reassociate left."""
    if not isinstance(t, App):
        return t
    if t.op not in AC_OPERATORS:
        return App(t.op, normalize_ac(t.left), normalize_ac(t.right))
    operands: list[Term] = []
    _flatten(t.op, t, operands)
    operands.sort(key=term_order_key)
    result = operands[0]
    for operand in operands[1:]:
        result = App(t.op, result, operand)
    return result
