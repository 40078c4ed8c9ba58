"""Nested-radical arithmetic expressions evaluated at extended precision.

Grammar, loosest binding first::

    sum     := product (('+' | '-') product)*
    product := signed (('*' | '/' | <juxtaposition>) signed)*
    signed  := ('-' | '+') signed | atom
    atom    := number | '(' sum ')' | 'sqrt' atom

Juxtaposition before ``sqrt`` or ``(`` is multiplication, so ``8sqrt(5)`` and
``2(1+sqrt(5))`` work; two bare numbers side by side are an error.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import mpmath

WORK_DPS = 50
_NEG_SLACK = mpmath.mpf(10) ** -40

_ALIASES = {"−": "-", "×": "*", "·": "*", "÷": "/", "√": "sqrt"}
_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)([eE][-+]?\d+)?|(sqrt)|([-+*/()]))")


class RadicalSyntaxError(SyntaxError):
    def __init__(self, msg: str, text: str, pos: int):
        super().__init__(f"{msg} at position {pos}: {text!r}")
        self.pos = pos
        self.text_ = text


class DomainError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    literal: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Sqrt:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


def _tokenize(text: str):
    for k, v in _ALIASES.items():
        text = text.replace(k, v)
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise RadicalSyntaxError("unexpected character", text, pos)
        start = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        if m.group(1) is not None:
            out.append(("num", m.group(1) + (m.group(2) or ""), start))
        elif m.group(3):
            out.append(("sqrt", "sqrt", start))
        else:
            out.append((m.group(4), m.group(4), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out, text


class _Parser:
    def __init__(self, text: str):
        self.toks, self.text = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "end" else repr(kind)
            raise RadicalSyntaxError(f"expected {want}, found {tok[1]!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise RadicalSyntaxError("empty expression", self.text, 0)
        node = self.sum()
        self.take("end")
        return node

    def sum(self):
        node = self.product()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = BinOp(op, node, self.product())
        return node

    def product(self):
        node = self.signed()
        while True:
            kind = self.peek()[0]
            if kind in ("*", "/"):
                self.take()
                node = BinOp(kind, node, self.signed())
            elif kind in ("sqrt", "("):
                node = BinOp("*", node, self.signed())
            else:
                return node

    def signed(self):
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return Neg(self.signed())
        if kind == "+":
            self.take()
            return self.signed()
        return self.atom()

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(val)
        if kind == "(":
            self.take()
            node = self.sum()
            self.take(")")
            return node
        if kind == "sqrt":
            self.take()
            return Sqrt(self.atom())
        what = "end of input" if kind == "end" else repr(val)
        raise RadicalSyntaxError(f"unexpected {what}", self.text, pos)


@dataclass(frozen=True)
class RadicalExpr:
    text: str
    tree: object

    def value(self, dps: int = WORK_DPS) -> mpmath.mpf:
        with mpmath.workdps(dps):
            return +_eval(self.tree)

    def __float__(self) -> float:
        return float(self.value())

    def to_text(self) -> str:
        return _show(self.tree)


def parse_radical(text: str) -> RadicalExpr:
    if not text or not text.strip():
        raise RadicalSyntaxError("empty expression", text or "", 0)
    return RadicalExpr(text, _Parser(text).parse())


def evaluate(text: str, dps: int = WORK_DPS) -> mpmath.mpf:
    return parse_radical(text).value(dps)


def _eval(node):
    if isinstance(node, Num):
        return mpmath.mpf(node.literal)
    if isinstance(node, Neg):
        return -_eval(node.arg)
    if isinstance(node, Sqrt):
        x = _eval(node.arg)
        if x < 0:
            if x < -_NEG_SLACK:
                raise DomainError(f"sqrt of negative value {mpmath.nstr(x, 10)} in {_show(node)}")
            x = mpmath.mpf(0)
        return mpmath.sqrt(x)
    a, b = _eval(node.left), _eval(node.right)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0:
        raise DomainError(f"division by zero in {_show(node)}")
    return a / b


def _show(node) -> str:
    # fully parenthesised, so re-parsing cannot change the grouping
    if isinstance(node, Num):
        return node.literal
    if isinstance(node, Neg):
        return f"(-{_show(node.arg)})"
    if isinstance(node, Sqrt):
        return f"sqrt({_show(node.arg)})"
    return f"({_show(node.left)}{node.op}{_show(node.right)})"
