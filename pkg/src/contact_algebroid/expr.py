"""Scenario expression language: parsing, printing and evaluation.

Grammar (EBNF)::

    expr   = term , { ( "+" | "-" ) , term } ;
    term   = unary , { ( "*" | "/" ) , unary } ;
    unary  = "-" , unary | power ;
    power  = atom , [ "^" , unary ] ;            (* right-associative *)
    atom   = number | name | func , "(" , expr , ")" | "(" , expr , ")" ;
    func   = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs" ;
    number = digits , [ "." , [ digits ] ] , [ exponent ]
           | "." , digits , [ exponent ] ;
    exponent = ( "e" | "E" ) , [ "+" | "-" ] , digits ;

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)`` and
``2^-1`` is ``2^(-1)``.  There is no implicit multiplication.

Variables are ``q1..qn``, ``y1..ym`` (Lagrangian side) or ``p1..pm``
(Hamiltonian side), ``s``, and declared parameter names.  Base expressions
(anchors, structure functions, potentials) may only use ``q`` variables and
parameters.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

from .calculus import FUNCTIONS, DomainError, ScalarField, divide, power

__all__ = [
    "ExprError",
    "Context",
    "Num",
    "Var",
    "Neg",
    "Bin",
    "Call",
    "Expr",
    "parse",
    "to_text",
    "reference_eval",
    "compile_expr",
    "to_scalar_field",
    "parse_field",
    "GRAMMAR",
]

GRAMMAR = __doc__.split("Grammar (EBNF)::", 1)[1].split("``^``", 1)[0].strip("\n")

SIDES = ("lagrangian", "hamiltonian", "base")
FIBER_LETTER = {"lagrangian": "y", "hamiltonian": "p"}


class ExprError(ValueError):
    """Parse or binding error.  ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, offset: int | None = None, kind: str = "syntax"):
        self.message = message
        self.offset = offset
        self.kind = kind
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise ValueError(f"literal must be finite and non-negative, got {self.value!r}")


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Bin, Call]


@dataclass(frozen=True)
class Context:
    """Names an expression may reference."""

    n: int
    m: int = 0
    side: str = "base"
    parameters: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        for name in self.parameters:
            if name in FUNCTIONS or _VAR_RE.fullmatch(name) or name == "s":
                raise ValueError(f"parameter name {name!r} clashes with a reserved name")

    def resolve(self, name: str, offset: int) -> None:
        """Reject unknown or out-of-range identifiers."""
        if name in self.parameters:
            return
        if name == "s":
            if self.side == "base":
                raise ExprError("'s' is not available in a base expression", offset, "identifier")
            return
        match = _VAR_RE.fullmatch(name)
        if match:
            letter, index = match.group(1), int(match.group(2))
            if letter == "q":
                limit = self.n
            elif self.side != "base" and letter == FIBER_LETTER[self.side]:
                limit = self.m
            else:
                raise ExprError(f"unknown identifier '{name}' on the {self.side} side", offset, "identifier")
            if not 1 <= index <= limit:
                raise ExprError(f"{name} out of range", offset, "range")
            return
        raise ExprError(f"unknown identifier '{name}'", offset, "identifier")


_VAR_RE = re.compile(r"([qyp])([1-9][0-9]*)")

# ---------------------------------------------------------------------------
# Tokenizer and parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        offset = len(text[:pos].encode("utf-8"))
        if match is None:
            raise ExprError(f"unexpected character {text[pos]!r}", offset)
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(_Tok(kind, match.group(), offset))
        pos = match.end()
    tokens.append(_Tok("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str, ctx: Context):
        self.toks = _tokenize(text)
        self.i = 0
        self.ctx = ctx

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        tok = self.tok
        if tok.kind == "end":
            raise ExprError(f"expected {expected} but reached end of input", tok.offset)
        raise ExprError(f"expected {expected}, found {tok.text!r}", tok.offset)

    def expect(self, text: str) -> None:
        if self.tok.kind == "op" and self.tok.text == text:
            self.advance()
        else:
            self.fail(f"'{text}'")

    def parse(self) -> Expr:
        tree = self.expr()
        if self.tok.kind != "end":
            self.fail("operator or end of input")
        return tree

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            left = Bin(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            left = Bin(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprError(f"literal {tok.text!r} is not finite", tok.offset)
            return Num(value)
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                if not (self.tok.kind == "op" and self.tok.text == "("):
                    raise ExprError(f"function '{tok.text}' must be called with one argument", tok.offset, "arity")
                self.advance()
                arg = self.expr()
                if self.tok.kind == "op" and self.tok.text == ",":
                    raise ExprError(f"function '{tok.text}' takes exactly one argument", self.tok.offset, "arity")
                if not (self.tok.kind == "op" and self.tok.text == ")"):
                    if self.tok.kind == "end":
                        self.fail("')'")
                    raise ExprError(
                        f"function '{tok.text}' takes exactly one argument, found {self.tok.text!r}",
                        self.tok.offset,
                        "arity",
                    )
                self.advance()
                return Call(tok.text, arg)
            if self.tok.kind == "op" and self.tok.text == "(":
                raise ExprError(f"unknown function '{tok.text}'", tok.offset, "identifier")
            self.ctx.resolve(tok.text, tok.offset)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        self.fail("a number, name or '('")


def parse(text: str, context: Context) -> Expr:
    """Parse ``text`` against the names allowed by ``context``."""
    return _Parser(text, context).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(e: Expr) -> int:
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def _wrap(e: Expr, minimum: int) -> str:
    text = to_text(e)
    return f"({text})" if _prec(e) < minimum else text


def to_text(e: Expr) -> str:
    """Render with the fewest parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, _NEG_PREC)
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    p = _PREC[e.op]
    if e.op == "^":
        return f"{_wrap(e.left, _ATOM_PREC)}^{_wrap(e.right, _NEG_PREC)}"
    return f"{_wrap(e.left, p)}{e.op}{_wrap(e.right, p + 1)}"


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_REF_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}


def reference_eval(e: Expr, env: Mapping[str, float]) -> float:
    """Plain recursive float evaluation; the oracle for the compiled path."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -reference_eval(e.operand, env)
    if isinstance(e, Call):
        return _REF_FUNCS[e.func](reference_eval(e.arg, env))
    a = reference_eval(e.left, env)
    b = reference_eval(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        return a / b
    if a < 0 and not float(b).is_integer():
        raise ValueError("math domain error")
    return a**b


def _slot(name: str, side: str):
    """Map a variable name to (group, index) in the (q, w, s) argument triple."""
    if name == "s":
        return ("s", 0)
    match = _VAR_RE.fullmatch(name)
    if match is None:
        return None
    group = "q" if match.group(1) == "q" else "w"
    return (group, int(match.group(2)) - 1)


def compile_expr(e: Expr, bindings: Mapping[str, float], side: str) -> Callable:
    """Closure ``f(q, w, s)`` (or ``f(q)`` for base expressions) over floats or jets.

    Constant sub-trees are folded to floats so that only variable-dependent
    nodes allocate jets.
    """
    node = _compile(e, dict(bindings), side)
    if isinstance(node, float):
        c = node
        if side == "base":
            return lambda q: c
        return lambda q, w, s: c
    if side == "base":
        return lambda q: node(q, (), 0.0)
    return node


def _compile(e: Expr, bindings: dict, side: str):
    """Returns either a float (constant) or a closure (q, w, s) -> value."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name in bindings:
            return float(bindings[e.name])
        slot = _slot(e.name, side)
        if slot is None:
            raise ExprError(f"unbound parameter '{e.name}'", kind="binding")
        group, idx = slot
        if group == "q":
            return lambda q, w, s: q[idx]
        if group == "w":
            return lambda q, w, s: w[idx]
        return lambda q, w, s: s
    text = to_text(e)
    if isinstance(e, Neg):
        inner = _compile(e.operand, bindings, side)
        if isinstance(inner, float):
            return -inner
        return lambda q, w, s: -inner(q, w, s)
    if isinstance(e, Call):
        fn = FUNCTIONS[e.func]
        inner = _compile(e.arg, bindings, side)
        if isinstance(inner, float):
            return _const_call(lambda: fn(inner), text)

        def call(q, w, s):
            try:
                return fn(inner(q, w, s))
            except DomainError as err:
                err.attach(text)
                raise

        return call
    a = _compile(e.left, bindings, side)
    b = _compile(e.right, bindings, side)
    op = _BINOPS[e.op]
    if isinstance(a, float) and isinstance(b, float):
        return _const_call(lambda: op(a, b), text)
    fa = (lambda q, w, s: a) if isinstance(a, float) else a
    fb = (lambda q, w, s: b) if isinstance(b, float) else b
    if e.op in "+-*":
        return lambda q, w, s: op(fa(q, w, s), fb(q, w, s))

    def guarded(q, w, s):
        try:
            return op(fa(q, w, s), fb(q, w, s))
        except DomainError as err:
            err.attach(text)
            raise

    return guarded


def _const_call(fn: Callable[[], float], text: str) -> float:
    try:
        return float(fn())
    except DomainError as err:
        err.attach(text)
        raise


_BINOPS: dict[str, Callable] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": divide,
    "^": power,
}


def free_parameters(e: Expr, ctx: Context) -> set[str]:
    """Parameter names referenced by ``e``."""
    if isinstance(e, Var):
        return {e.name} if e.name in ctx.parameters else set()
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return free_parameters(e.operand, ctx)
    if isinstance(e, Call):
        return free_parameters(e.arg, ctx)
    return free_parameters(e.left, ctx) | free_parameters(e.right, ctx)


def to_scalar_field(
    e: Expr, ctx: Context, bindings: Mapping[str, float] | None = None, label: str = ""
) -> ScalarField:
    """Bind parameters and wrap ``e`` as a differentiable field."""
    bindings = dict(bindings or {})
    missing = sorted(free_parameters(e, ctx) - set(bindings))
    if missing:
        raise ExprError(f"unbound parameter(s): {', '.join(missing)}", kind="binding")
    body = compile_expr(e, bindings, ctx.side)
    label = label or to_text(e)
    if ctx.side == "base":
        return ScalarField(body, ctx.n, base=True, label=label)
    return ScalarField(body, ctx.n, ctx.m, label=label)


def parse_field(
    text: str,
    n: int,
    m: int = 0,
    side: str = "base",
    parameters: Mapping[str, float] | None = None,
) -> ScalarField:
    """Parse and bind in one step."""
    parameters = dict(parameters or {})
    ctx = Context(n, m, side, tuple(parameters))
    return to_scalar_field(parse(text, ctx), ctx, parameters, label=text)
