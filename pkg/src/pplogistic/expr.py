"""Small recursive-descent parser for coefficient expressions.

Expressions are written over the variables ``x`` and ``t`` with the constant
``pi``, the operators ``+ - * / ^``, parentheses, unary minus and a handful of
functions. Parsed expressions are evaluated vectorised with numpy.

    >>> Expr.parse("1 + sin(2*pi*t)").evaluate(0.0, 0.25)
    2.0
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = ["Expr", "ExprError"]


class ExprError(ValueError):
    """Raised for malformed expressions."""


_UNARY = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "log": np.log,
}
_BINARY = {"min": np.minimum, "max": np.maximum}
_CONSTANTS = {"pi": math.pi}
_VARIABLES = ("x", "t")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprError(f"unexpected character {text[pos:].strip()[:1]!r} at column {pos + 1}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    tokens.append(("end", ""))
    return tokens


class _Parser:
    # grammar:
    #   sum     := product (('+'|'-') product)*
    #   product := unary (('*'|'/') unary)*
    #   unary   := '-' unary | '+' unary | power
    #   power   := atom ('^' unary)?
    #   atom    := number | name | name '(' args ')' | '(' sum ')'

    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ExprError(f"expected {value!r}, got {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.sum()
        if self.peek()[0] != "end":
            raise ExprError(f"unexpected token {self.peek()[1]!r}")
        return node

    def sum(self):
        node = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = (op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return ("neg", self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return ("^", base, self.unary())
        return base

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return ("num", float(value))
        if kind == "name":
            if self.peek()[1] == "(":
                self.take("(")
                args = [self.sum()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.sum())
                self.take(")")
                if value in _UNARY and len(args) == 1:
                    return ("call", value, args)
                if value in _BINARY and len(args) == 2:
                    return ("call", value, args)
                raise ExprError(f"unknown function {value}/{len(args)}")
            if value in _CONSTANTS:
                return ("num", _CONSTANTS[value])
            if value in _VARIABLES:
                return ("var", value)
            raise ExprError(f"unknown name {value!r}")
        if value == "(":
            node = self.sum()
            self.take(")")
            return node
        raise ExprError(f"unexpected token {value or 'end of input'!r}")


def _eval(node, x, t):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return x if node[1] == "x" else t
    if tag == "neg":
        return -_eval(node[1], x, t)
    if tag == "call":
        args = [_eval(a, x, t) for a in node[2]]
        fn = _UNARY.get(node[1]) or _BINARY[node[1]]
        return fn(*args)
    a = _eval(node[1], x, t)
    b = _eval(node[2], x, t)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if tag == "/":
        return a / b
    return np.power(a, b)


def _uses(node, name):
    if node[0] == "var":
        return node[1] == name
    if node[0] == "call":
        return any(_uses(a, name) for a in node[2])
    return any(_uses(n, name) for n in node[1:] if isinstance(n, tuple))


@dataclass(frozen=True)
class Expr:
    """A parsed coefficient expression; ``text`` is kept for serialisation."""

    text: str
    tree: tuple

    @classmethod
    def parse(cls, text: str) -> "Expr":
        text = text.strip()
        if not text:
            raise ExprError("empty expression")
        return cls(text, _Parser(text).parse())

    @classmethod
    def const(cls, value: float) -> "Expr":
        return cls.parse(repr(float(value)))

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(self.tree, x, t)
        out = np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, t).shape)
        if out.ndim == 0:
            return float(out)
        return np.array(out)

    @property
    def depends_on_x(self) -> bool:
        return _uses(self.tree, "x")

    @property
    def depends_on_t(self) -> bool:
        return _uses(self.tree, "t")

    def __str__(self):
        return self.text
