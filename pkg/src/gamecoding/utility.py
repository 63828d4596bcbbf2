"""Tiny expression language for utility functions of (MSE, PA).

Grammar (usual precedence, ``^`` binds tighter than unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom (('^' | '**') unary)?      # exponent must be constant
    atom   := NUMBER | 'MSE' | 'PA' | ('log' | 'sqrt') '(' expr ')' | '(' expr ')'

Trees are frozen dataclasses, so ``==`` is structural equality.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

VARIABLES = ("MSE", "PA")
FUNCTIONS = ("log", "sqrt")


class UtilitySyntaxError(ValueError):
    def __init__(self, message, text, pos):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


class UtilityDomainError(ArithmeticError):
    """Raised when log/sqrt/divide/power receives an invalid argument."""

    def __init__(self, node, message):
        super().__init__(f"{message} in {to_string(node)}")
        self.node = node


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


Expr = Union[Const, Var, Neg, Func, BinOp, Pow]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise UtilitySyntaxError("unexpected character", text, pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def accept(self, *ops):
        kind, value, _ = self.tok
        if kind == "op" and value in ops:
            self.i += 1
            return value
        return None

    def expect(self, op):
        if self.accept(op) is None:
            raise UtilitySyntaxError(f"expected {op!r}", self.text, self.tok[2])

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            raise UtilitySyntaxError("unexpected token", self.text, self.tok[2])
        return node

    def expr(self):
        node = self.term()
        while (op := self.accept("+", "-")) is not None:
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while (op := self.accept("*", "/")) is not None:
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-") is not None:
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^", "**") is not None:
            pos = self.tok[2]
            exponent = self.unary()
            if variables(exponent):
                raise UtilitySyntaxError("exponent must be a constant", self.text, pos)
            return Pow(base, float(_eval(exponent, 0.0, 0.0)))
        return base

    def atom(self):
        kind, value, pos = self.tok
        if kind == "num":
            self.i += 1
            return Const(float(value))
        if kind == "name":
            self.i += 1
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            raise UtilitySyntaxError(f"unknown identifier {value!r}", self.text, pos)
        if self.accept("(") is not None:
            node = self.expr()
            self.expect(")")
            return node
        raise UtilitySyntaxError("expected a value", self.text, pos)


def parse_utility(text: str) -> Expr:
    """Parse a utility expression over the variables ``MSE`` and ``PA``."""
    return _Parser(text).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _num(x):
    s = repr(float(x))
    return s if x >= 0 else f"({s})"


def to_string(node: Expr) -> str:
    """Canonical printer; ``parse_utility(to_string(e)) == e`` for parsed trees."""
    if isinstance(node, Const):
        return _num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Func):
        return f"{node.name}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        return f"-({inner})" if _prec(node.arg) < 3 else f"-{inner}"
    if isinstance(node, Pow):
        base = to_string(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        return f"{base}^{_num(node.exponent)}"
    p = _PREC[node.op]
    left = to_string(node.left)
    right = to_string(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def variables(node: Expr) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, (Neg, Func)):
        return variables(node.arg)
    if isinstance(node, Pow):
        return variables(node.base)
    return variables(node.left) | variables(node.right)


def _eval(node, mse, pa):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return mse if node.name == "MSE" else pa
    if isinstance(node, Neg):
        return -_eval(node.arg, mse, pa)
    if isinstance(node, Func):
        x = _eval(node.arg, mse, pa)
        if node.name == "log":
            if x <= 0:
                raise UtilityDomainError(node, f"log of non-positive value {x!r}")
            return math.log(x)
        if x < 0:
            raise UtilityDomainError(node, f"sqrt of negative value {x!r}")
        return math.sqrt(x)
    if isinstance(node, Pow):
        x = _eval(node.base, mse, pa)
        p = node.exponent
        if x < 0 and not p.is_integer():
            raise UtilityDomainError(node, f"non-integer power of negative value {x!r}")
        if x == 0 and p < 0:
            raise UtilityDomainError(node, "negative power of zero")
        return x**p
    a = _eval(node.left, mse, pa)
    b = _eval(node.right, mse, pa)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0:
        raise UtilityDomainError(node, "division by zero")
    return a / b


def eval_utility(expr: Expr | str, mse: float, pa: float) -> float:
    """Evaluate ``expr`` at a single (MSE, PA) point.

    Raises :class:`UtilityDomainError` carrying the offending sub-expression
    when log/sqrt/divide/power leave their domain.
    """
    if isinstance(expr, str):
        expr = parse_utility(expr)
    if not mse >= 0:
        raise ValueError(f"MSE must be non-negative, got {mse!r}")
    if not 0 <= pa <= 1:
        raise ValueError(f"PA must lie in [0, 1], got {pa!r}")
    return float(_eval(expr, float(mse), float(pa)))


def _eval_array(node, mse, pa, ok):
    # ok is updated in place: False wherever a domain error occurred
    if isinstance(node, Const):
        return np.full(mse.shape, node.value)
    if isinstance(node, Var):
        return mse if node.name == "MSE" else pa
    if isinstance(node, Neg):
        return -_eval_array(node.arg, mse, pa, ok)
    if isinstance(node, Func):
        x = _eval_array(node.arg, mse, pa, ok)
        bad = x <= 0 if node.name == "log" else x < 0
        ok &= ~bad
        x = np.where(bad, 1.0, x)
        return np.log(x) if node.name == "log" else np.sqrt(x)
    if isinstance(node, Pow):
        x = _eval_array(node.base, mse, pa, ok)
        p = node.exponent
        bad = np.zeros(x.shape, dtype=bool)
        if not p.is_integer():
            bad |= x < 0
        if p < 0:
            bad |= x == 0
        ok &= ~bad
        return np.where(bad, 1.0, x) ** p
    a = _eval_array(node.left, mse, pa, ok)
    b = _eval_array(node.right, mse, pa, ok)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    bad = b == 0
    ok &= ~bad
    return a / np.where(bad, 1.0, b)


def eval_grid(expr: Expr | str, mse, pa):
    """Vectorised evaluation. Returns ``(values, valid)``; invalid entries are NaN."""
    if isinstance(expr, str):
        expr = parse_utility(expr)
    mse, pa = np.broadcast_arrays(np.asarray(mse, dtype=float), np.asarray(pa, dtype=float))
    ok = np.ones(mse.shape, dtype=bool)
    with np.errstate(all="ignore"):
        values = np.asarray(_eval_array(expr, mse, pa, ok), dtype=float)
    values = np.where(ok, values, np.nan)
    return values, ok
