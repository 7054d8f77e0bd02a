"""Real-valued expression language with forward-mode derivatives.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative, binds tightest
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

``pi`` is a reserved constant.  Supported functions: sin, cos, tan, exp, ln,
sqrt, atan2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from . import jet as _jet
from .jet import Jet, JetDomainError

__all__ = [
    "Expr",
    "Num",
    "Var",
    "BinOp",
    "Neg",
    "Call",
    "ExprError",
    "ExprSyntaxError",
    "UnknownFunctionError",
    "UnboundVariableError",
    "ExprDomainError",
    "parse",
    "to_source",
    "free_vars",
    "evaluate",
    "eval_jet",
    "as_expr",
    "FUNCTIONS",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "call",
    "substitute",
]


# AST -------------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, BinOp, Neg, Call]

# name -> arity
FUNCTIONS = {"sin": 1, "cos": 1, "tan": 1, "exp": 1, "ln": 1, "sqrt": 1, "atan2": 2}

_IMPL = {
    "sin": _jet.sin,
    "cos": _jet.cos,
    "tan": _jet.tan,
    "exp": _jet.exp,
    "ln": _jet.log,
    "sqrt": _jet.sqrt,
    "atan2": _jet.atan2,
}


# errors ----------------------------------------------------------------------------


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, offset: int, expected: str, found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(f"syntax error at byte {offset}: expected {expected}, found {found}")


class UnknownFunctionError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown function {name!r} at byte {offset}")


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name!r}")


class ExprDomainError(ExprError):
    def __init__(self, reason: str, subexpr: Expr):
        self.reason = reason
        self.subexpr = subexpr
        super().__init__(f"{reason} in {to_source(subexpr)!r}")


# tokenizer -------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    byte = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(byte, "a number, name, operator or parenthesis", repr(source[pos]))
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, text, byte))
        pos = m.end()
        byte += len(text.encode("utf-8"))
    toks.append(_Tok("end", "", byte))
    return toks


# parser ----------------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _found(self) -> str:
        t = self.tok
        return "end of input" if t.kind == "end" else repr(t.text)

    def _expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind == "end":
            raise ExprSyntaxError(self.tok.offset, repr(text), self._found())
        self.i += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(self.tok.offset, "an operator or end of input", self._found())
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text))
        if t.kind == "name":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownFunctionError(t.text, t.offset)
                self.i += 1
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self.i += 1
                    args.append(self.expr())
                arity = FUNCTIONS[t.text]
                if len(args) != arity:
                    raise ExprSyntaxError(
                        self.tok.offset, f"{arity} argument(s) to {t.text}", f"{len(args)}"
                    )
                self._expect(")")
                return Call(t.text, tuple(args))
            if t.text == "pi":
                return Num(math.pi)
            if t.text in FUNCTIONS:
                raise ExprSyntaxError(self.tok.offset, f"'(' after function {t.text}", self._found())
            return Var(t.text)
        if t.kind == "op" and t.text == "(":
            self.i += 1
            e = self.expr()
            self._expect(")")
            return e
        raise ExprSyntaxError(t.offset, "a number, name or '('", self._found())


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises :class:`ExprSyntaxError` (with a 0-based byte offset) or
    :class:`UnknownFunctionError`.
    """
    if not source or not source.strip():
        raise ExprSyntaxError(0, "an expression", "empty input")
    return _Parser(source).parse()


def as_expr(e: Union[str, float, int, Expr]) -> Expr:
    if isinstance(e, str):
        return parse(e)
    if isinstance(e, (int, float)):
        return Num(float(e))
    return e


# printing --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG_PREC
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _NEG_PREC
    return _ATOM_PREC


def _wrap(e: Expr, needs: bool) -> str:
    s = to_source(e)
    return f"({s})" if needs else s


def _num_source(v: float) -> str:
    if v == math.pi:
        return "pi"
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v)) if v != 0 or math.copysign(1.0, v) > 0 else "-0.0"
    return repr(v)


def to_source(e: Expr) -> str:
    """Render ``e`` with the minimal parentheses needed to re-parse the same tree."""
    if isinstance(e, Num):
        return _num_source(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, _prec(e.operand) < _NEG_PREC)
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_source(a) for a in e.args)})"
    p = _PREC[e.op]
    if e.op == "^":
        left = _wrap(e.left, _prec(e.left) <= p)
        right = _wrap(e.right, _prec(e.right) < _NEG_PREC)
        return f"{left}^{right}"
    left = _wrap(e.left, _prec(e.left) < p)
    right = _wrap(e.right, _prec(e.right) <= p)
    return f"{left} {e.op} {right}" if p == 1 else f"{left}*{right}" if e.op == "*" else f"{left}/{right}"


# analysis --------------------------------------------------------------------------


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    out: set[str] = set()
    for a in e.args:
        out |= free_vars(a)
    return out


# evaluation ------------------------------------------------------------------------


def _pow(a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        return a**b
    if a == 0.0 and b < 0.0:
        raise JetDomainError("0 raised to a negative power")
    if a < 0.0 and not float(b).is_integer():
        raise JetDomainError("negative base raised to a non-integer power")
    return float(a) ** b


def _div(a, b):
    if not isinstance(b, Jet) and b == 0:
        raise JetDomainError("division by zero")
    if isinstance(b, Jet) and b.value == 0.0:
        raise JetDomainError("division by zero")
    return a / b


def _eval(e: Expr, env: Mapping[str, object]):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        try:
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return _div(a, b)
            return _pow(a, b)
        except (JetDomainError, OverflowError, ZeroDivisionError) as exc:
            raise ExprDomainError(str(exc), e) from None
    args = [_eval(a, env) for a in e.args]
    try:
        return _IMPL[e.name](*args)
    except (JetDomainError, OverflowError, ValueError) as exc:
        if isinstance(exc, ExprError):
            raise
        raise ExprDomainError(str(exc), e) from None


def evaluate(e: Expr, env: Mapping[str, object]):
    """Evaluate ``e`` under ``env``.

    Values in ``env`` may be floats or :class:`Jet` instances; jets propagate
    derivatives through the evaluation (this is how expressions compose with
    coordinate maps).
    """
    return _eval(e, env)


def eval_jet(
    e: Expr,
    env: Mapping[str, float],
    active: Sequence[str] = (),
    order: int = 1,
) -> Jet:
    """Value, gradient and (for ``order=2``) Hessian of ``e`` w.r.t. ``active``."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    m = len(active)
    local: dict[str, object] = {k: float(v) for k, v in env.items()}
    for i, name in enumerate(active):
        if name not in local:
            raise UnboundVariableError(name)
        local[name] = Jet.variable(local[name], i, m, order)
    out = _eval(e, local)
    if isinstance(out, Jet):
        return out
    return Jet(out, np.zeros(m), np.zeros((m, m)) if order == 2 else None)


# construction helpers ----------------------------------------------------------------
# Light constant folding keeps programmatically assembled fields small; no other
# simplification is attempted.


def _is_num(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def add(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def neg(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def call(name: str, *args) -> Expr:
    if name not in FUNCTIONS or FUNCTIONS[name] != len(args):
        raise UnknownFunctionError(name, 0)
    return Call(name, tuple(as_expr(a) for a in args))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (simultaneously)."""
    if isinstance(e, Var):
        return as_expr(mapping[e.name]) if e.name in mapping else e
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    return Call(e.name, tuple(substitute(a, mapping) for a in e.args))
