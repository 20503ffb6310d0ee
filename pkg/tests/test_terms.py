import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import BOUNDARY_INTS, assignments, ground_terms, terms, to_signed32
from idiom_forge.terms import (
    WILD,
    App,
    IntLit,
    Operator,
    Sym,
    TermSyntaxError,
    evaluate,
    fold_binop,
    iter_subterms,
    match_term,
    normalize_ac,
    parse_term,
    print_term,
)

a, b, c, d = (Sym(n) for n in "abcd")
ADD = Operator.ADD


def test_parse_horizontal_sum_goal_lane():
    assert parse_term("(d+b)+(c+a)") == App(ADD, App(ADD, d, b), App(ADD, c, a))


def test_parse_literals():
    assert parse_term("0") == IntLit(0)
    assert parse_term("-1") == IntLit(-1)
    assert parse_term("4294967295") == IntLit(-1)
    assert parse_term("_") is WILD


def test_minus_is_subtraction_after_an_operand():
    assert parse_term("a-1") == App(Operator.SUB, a, IntLit(1))
    assert parse_term("(a--1)") == App(Operator.SUB, a, IntLit(-1))
    assert parse_term("(x == y)") == App(Operator.CMPEQ, Sym("x"), Sym("y"))


@pytest.mark.parametrize("text", ["", "(a+b", "a+b+c", "a $ b", "()", "a b", "+a"])
def test_parse_errors_carry_position(text):
    with pytest.raises(TermSyntaxError) as info:
        parse_term(text)
    assert "position" in str(info.value)


def test_print_examples():
    assert print_term(App(ADD, a, IntLit(0))) == "(a+0)"
    assert print_term(WILD) == "_"
    hsum = App(ADD, App(ADD, d, b), App(ADD, c, a))
    assert print_term(hsum) == "((d+b)+(c+a))"
    assert parse_term(print_term(hsum)) == hsum


@given(terms(allow_wild=True))
def test_print_parse_round_trip(t):
    assert parse_term(print_term(t)) == t


def test_match_examples():
    hsum = parse_term("(d+b)+(c+a)")
    assert match_term(WILD, parse_term("a+0"))
    assert match_term(hsum, hsum)
    assert not match_term(hsum, parse_term("(c+a)+(d+b)"))
    assert match_term(parse_term("(d+_)+(c+a)"), hsum)


@given(ground_terms)
def test_match_reflexive(t):
    assert match_term(t, t)


@given(ground_terms, st.data())
def test_match_monotone_in_wildcards(t, data):
    # Replace one subterm by a wildcard: a match must stay a match.
    subterms = list(iter_subterms(t))
    victim = data.draw(st.sampled_from(subterms))

    def punch(u):
        if u is victim:
            return WILD
        if isinstance(u, App):
            return App(u.op, punch(u.left), punch(u.right))
        return u

    assert match_term(punch(t), t)


def test_fold_examples():
    assert fold_binop(ADD, IntLit(3), IntLit(4)) == IntLit(7)
    assert fold_binop(Operator.XOR, Sym("xmm0_init"), Sym("xmm0_init")) == IntLit(0)
    assert fold_binop(Operator.CMPEQ, Sym("xmm0_init"), Sym("xmm0_init")) == IntLit(-1)
    assert fold_binop(ADD, a, IntLit(0)) == App(ADD, a, IntLit(0))
    assert fold_binop(Operator.SUB, App(ADD, a, b), App(ADD, a, b)) == IntLit(0)
    assert fold_binop(Operator.AND, a, a) == App(Operator.AND, a, a)


REFERENCE = {
    Operator.ADD: lambda x, y: to_signed32(x + y),
    Operator.SUB: lambda x, y: to_signed32(x - y),
    Operator.AND: lambda x, y: to_signed32((x % 2**32) & (y % 2**32)),
    Operator.OR: lambda x, y: to_signed32((x % 2**32) | (y % 2**32)),
    Operator.XOR: lambda x, y: to_signed32((x % 2**32) ^ (y % 2**32)),
    Operator.CMPEQ: lambda x, y: -1 if x % 2**32 == y % 2**32 else 0,
}


@pytest.mark.parametrize("op", list(Operator))
def test_fold_soundness_against_reference(op):
    rng = random.Random(1234)
    pairs = [(x, y) for x in BOUNDARY_INTS for y in BOUNDARY_INTS]
    pairs += [(rng.randint(-(2**31), 2**31 - 1), rng.randint(-(2**31), 2**31 - 1)) for _ in range(10_000)]
    for x, y in pairs:
        assert fold_binop(op, IntLit(x), IntLit(y)) == IntLit(REFERENCE[op](x, y)), (op, x, y)


@pytest.mark.parametrize("op, value", [(Operator.XOR, 0), (Operator.SUB, 0), (Operator.CMPEQ, -1)])
@settings(max_examples=25)
@given(t=ground_terms)
def test_identity_soundness(op, value, t):
    rng = random.Random(hash(t) & 0xFFFF)
    assert fold_binop(op, t, t) == IntLit(value)
    for _ in range(100):
        asg = {n: rng.randint(-(2**31), 2**31 - 1) for n in "abcdxy"}
        assert evaluate(App(op, t, t), asg) == value


def test_normalize_examples():
    assert normalize_ac(parse_term("(c+a)+(d+b)")) == normalize_ac(parse_term("(d+b)+(c+a)"))
    assert normalize_ac(a) == a
    # Non-AC operators keep operand order.
    assert normalize_ac(parse_term("b-a")) == parse_term("b-a")


@settings(max_examples=1000)
@given(terms(allow_wild=True))
def test_normalize_idempotent(t):
    once = normalize_ac(t)
    assert normalize_ac(once) == once


@settings(max_examples=300)
@given(ground_terms, assignments)
def test_normalize_preserves_value(t, asg):
    assert evaluate(normalize_ac(t), asg) == evaluate(t, asg)


def test_intlit_is_canonical():
    assert IntLit(2**32) == IntLit(0)
    assert IntLit(2**31).value == -(2**31)
