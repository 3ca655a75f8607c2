import math
import random

import numpy as np
import pytest

from contact_algebroid import (
    Bin, Call, Context, DomainError, ExprError, Neg, Num, Var, fd_crosscheck, parse, parse_field,
    reference_eval, to_scalar_field, to_text,
)
from contact_algebroid.expr import GRAMMAR

CTX = Context(2, 2, "lagrangian", ("lam", "k"))
FUNCS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
LEAVES = ("q1", "q2", "y1", "y2", "s", "lam", "k")


def random_tree(rnd: random.Random, depth: int):
    if depth == 0 or rnd.random() < 0.25:
        if rnd.random() < 0.5:
            return Var(rnd.choice(LEAVES))
        return Num(rnd.choice([0.0, 1.0, 2.0, 0.5, 3.25, 1e-3, 1.5e10, rnd.uniform(0, 5)]))
    r = rnd.random()
    if r < 0.15:
        return Neg(random_tree(rnd, depth - 1))
    if r < 0.35:
        return Call(rnd.choice(FUNCS), random_tree(rnd, depth - 1))
    return Bin(rnd.choice("+-*/^"), random_tree(rnd, depth - 1), random_tree(rnd, depth - 1))


def test_valid_lagrangian_with_parameter():
    e = parse("0.5*y1^2 - lambda*s", Context(0, 1, "lagrangian", ("lambda",)))
    assert e == Bin("-", Bin("*", Num(0.5), Bin("^", Var("y1"), Num(2.0))), Bin("*", Var("lambda"), Var("s")))


def test_out_of_range_variable():
    with pytest.raises(ExprError) as info:
        parse("p1*q2", Context(1, 1, "hamiltonian"))
    assert "q2 out of range" in str(info.value)
    assert info.value.offset == 3


def test_unterminated_call():
    with pytest.raises(ExprError) as info:
        parse("sin(q1", Context(1))
    assert info.value.kind == "syntax"
    assert info.value.offset == 6
    assert "end of input" in str(info.value)


@pytest.mark.parametrize(
    "text, kind",
    [("foo*q1", "identifier"), ("y1", "identifier"), ("sin(q1, q1)", "arity"), ("q1 +", "syntax"),
     ("2 q1", "syntax"), ("q1 $ 2", "syntax"), ("s", "identifier"), ("bar(q1)", "identifier")],
)
def test_rejections(text, kind):
    with pytest.raises(ExprError) as info:
        parse(text, Context(1))
    assert info.value.kind == kind


def test_precedence():
    ctx = Context(0, 0, "lagrangian", ("a", "b", "c"))
    assert parse("-a^2", ctx) == Neg(Bin("^", Var("a"), Num(2.0)))
    assert parse("a^b^c", ctx) == Bin("^", Var("a"), Bin("^", Var("b"), Var("c")))
    assert parse("2^-1", ctx) == Bin("^", Num(2.0), Neg(Num(1.0)))
    assert parse("a-b-c", ctx) == Bin("-", Bin("-", Var("a"), Var("b")), Var("c"))
    assert parse("a/b*c", ctx) == Bin("*", Bin("/", Var("a"), Var("b")), Var("c"))


def test_field_values():
    f = parse_field("0.5*y1^2", 0, 1, "lagrangian")
    assert f([], [3.0], 0.0) == 4.5
    g = parse_field("exp(s)", 0, 1, "lagrangian")
    b = g.bundle([], [0.0], 0.0)
    assert (b.value, b.d_s) == (1.0, 1.0)
    h = parse_field("q1*p1 - 0.5*p1^2", 1, 1, "hamiltonian")
    b = h.bundle([2.0], [3.0], 0.0)
    assert b.value == 1.5
    np.testing.assert_array_equal(b.grad_w, [-1.0])
    assert fd_crosscheck(h, [2.0], [3.0], 0.0) < 1e-8


def test_unbound_parameter():
    ctx = Context(1, 0, "base", ("k",))
    with pytest.raises(ExprError) as info:
        to_scalar_field(parse("k*q1", ctx), ctx, {})
    assert info.value.kind == "binding"


def test_domain_error_names_subexpression():
    f = parse_field("q1 + log(q1 - 1.0)", 1)
    with pytest.raises(DomainError) as info:
        f([0.5])
    assert "log(q1-1.0)" in str(info.value)


def test_fractional_power_needs_positive_base():
    f = parse_field("q1^0.5", 1)
    assert f([4.0]) == 2.0
    with pytest.raises(DomainError):
        f([-4.0])
    assert parse_field("q1^3", 1)([-2.0]) == -8.0


def test_grammar_is_documented():
    assert "expr" in GRAMMAR and "atom" in GRAMMAR and "abs" in GRAMMAR


def test_fuzz_round_trip():
    rnd = random.Random(1234)
    for _ in range(1000):
        tree = random_tree(rnd, 6)
        text = to_text(tree)
        assert parse(text, CTX) == tree, text
        assert to_text(parse(text, CTX)) == text


def test_evaluation_matches_reference():
    rnd = random.Random(99)
    rng = np.random.default_rng(99)
    checked = 0
    for _ in range(100):
        tree = random_tree(rnd, 4)
        try:
            f = to_scalar_field(tree, CTX, {"lam": 0.7, "k": 1.3})
        except DomainError:
            continue  # a constant sub-tree is already out of its domain
        for _ in range(5):
            x = rng.uniform(-2, 2, 5)
            env = dict(zip(("q1", "q2", "y1", "y2", "s"), map(float, x)), lam=0.7, k=1.3)
            try:
                ref = reference_eval(tree, env)
            except (ValueError, ZeroDivisionError, OverflowError):
                continue
            if isinstance(ref, complex) or not math.isfinite(ref):
                continue
            try:
                got = f(x[:2], x[2:4], x[4])
            except DomainError:
                # documented restriction: fractional powers need a positive base
                continue
            assert abs(got - ref) <= 1e-14 * max(1.0, abs(ref)), to_text(tree)
            checked += 1
    assert checked >= 250
