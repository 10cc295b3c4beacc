"""Closed-form models written as arithmetic expressions.

Grammar (version 1)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus and is right associative, so
``-x1^2`` is ``-(x1^2)`` and ``2^3^2`` is ``2^9``. Variables are ``x1``,
``x2``, ... (1-based column positions) or, when the model is bound to
column names, those names. Functions: exp, log, sqrt, abs.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..predictor import EvalLedger, PredictionError, Predictor

GRAMMAR_VERSION = 1

FUNCTIONS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs}
BINARY_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)
_XVAR = re.compile(r"x([1-9]\d*)$")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprEvalError(PredictionError):
    def __init__(self, message: str, row: int):
        super().__init__(f"{message} at row {row}")
        self.row = row


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, offset = self.advance()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", offset)

    def parse(self):
        node = self.expr(1)
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", offset)
        return node

    def expr(self, min_prec: int):
        lhs = self.unary()
        while True:
            kind, text, _ = self.peek()
            prec = BINARY_PREC.get(text) if kind == "op" else None
            if prec is None or prec < min_prec:
                return lhs
            self.advance()
            rhs = self.expr(prec + 1)
            lhs = BinOp(text, lhs, rhs)

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, text, offset = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr(1)
                _, t2, o2 = self.peek()
                if t2 == ",":
                    raise ExprSyntaxError(f"{text}() takes exactly 1 argument", o2)
                self.expect(")")
                return Call(text, arg)
            return Var(text, offset)
        if kind == "op" and text == "(":
            node = self.expr(1)
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", offset)


def variables(node) -> list[Var]:
    if isinstance(node, Var):
        return [node]
    if isinstance(node, Neg):
        return variables(node.arg)
    if isinstance(node, Call):
        return variables(node.arg)
    if isinstance(node, BinOp):
        return variables(node.left) + variables(node.right)
    return []


class ExprModel(Predictor):
    """A parsed expression usable as a black-box model."""

    def __init__(self, source: str, tree, columns: Sequence[str] | None = None,
                 ledger: EvalLedger | None = None):
        super().__init__(ledger)
        self.source = source
        self.tree = tree
        self.columns = tuple(columns) if columns is not None else None
        self.label = f"expr:{source}"
        self._slots = {}
        for var in variables(tree):
            self._slots[var.name] = self._resolve(var)

    def _resolve(self, var: Var) -> int:
        if self.columns is not None and var.name in self.columns:
            return self.columns.index(var.name)
        m = _XVAR.match(var.name)
        if m:
            return int(m.group(1)) - 1
        raise ExprSyntaxError(f"unknown identifier {var.name!r}", var.offset)

    @property
    def n_inputs(self) -> int:
        """Smallest number of columns the model can be evaluated on."""
        return max(self._slots.values(), default=-1) + 1

    def bind(self, columns: Sequence[str]) -> "ExprModel":
        return ExprModel(self.source, self.tree, columns, self.ledger)

    def _predict(self, rows):
        if rows.shape[1] < self.n_inputs:
            raise PredictionError(
                f"{self.label}: needs {self.n_inputs} columns, rows have {rows.shape[1]}"
            )
        with np.errstate(all="ignore"):
            out = self._eval(self.tree, rows)
        out = np.broadcast_to(np.asarray(out, dtype=float), (rows.shape[0],)).copy()
        bad = ~np.isfinite(out)
        if bad.any():
            raise ExprEvalError("non-finite result", int(np.argmax(bad)))
        return out

    def _eval(self, node, X):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return X[:, self._slots[node.name]]
        if isinstance(node, Neg):
            return -self._eval(node.arg, X)
        if isinstance(node, Call):
            arg = np.asarray(self._eval(node.arg, X), dtype=float)
            if node.func == "log" and (arg <= 0).any():
                raise ExprEvalError("log of a nonpositive value", _first(arg <= 0))
            if node.func == "sqrt" and (arg < 0).any():
                raise ExprEvalError("sqrt of a negative value", _first(arg < 0))
            return FUNCTIONS[node.func](arg)
        a = self._eval(node.left, X)
        b = self._eval(node.right, X)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            zero = np.asarray(b) == 0
            if zero.any():
                raise ExprEvalError("division by zero", _first(zero))
            return a / b
        return np.power(np.asarray(a, dtype=float), b)


def _first(mask) -> int:
    mask = np.atleast_1d(mask)
    return int(np.argmax(mask))


def parse_expression(text: str, columns: Sequence[str] | None = None) -> ExprModel:
    """Parse ``text`` into an :class:`ExprModel`.

    Raises :class:`ExprSyntaxError` (with ``.offset``) on malformed input,
    unknown identifiers or wrong function arity.
    """
    tree = _Parser(text).parse()
    return ExprModel(text, tree, columns)
