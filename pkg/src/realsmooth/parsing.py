"""Recursive-descent parser for polynomial expressions.

Grammar (whitespace-insensitive)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base (('^'|'**') INT)?
    base   := NUMBER | IMAG | IDENT | '(' expr ')' | ('+'|'-') factor

Division is only allowed by expressions that evaluate to a nonzero constant.
Imaginary literals such as ``2.5j`` are accepted so that printed polynomials
read back unchanged.
"""

from __future__ import annotations

import re
from typing import Sequence

from .poly import Polynomial, PolySystem


class ParseError(ValueError):
    """Malformed polynomial text; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self._render())

    def _render(self) -> str:
        if self.line is not None and self.column is not None:
            return f"line {self.line}, column {self.column}: {self.message}"
        if self.column is not None:
            return f"column {self.column}: {self.message}"
        return self.message

    def at(self, line: int | None = None, offset: int = 0) -> "ParseError":
        """Copy placed on ``line`` with the column shifted by ``offset``."""
        col = None if self.column is None else self.column + offset
        return ParseError(self.message, line, col)


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>[jJ])?"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()])"
    r")"
)


def tokenize(text: str) -> list[tuple[str, str]]:
    return [(k, v) for k, v, _ in _tokenize(text)]


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + bad:pos + bad + 1]!r}", column=pos + bad + 1)
        if m.group("num") is not None:
            kind = "imag" if m.group("imag") else "num"
            tokens.append((kind, m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        elif m.group("op") is not None:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, registry, end=0):
        self.tokens = [(k, v) for k, v, _ in tokens]
        self.pos = [p for _, _, p in tokens]
        self.end = end
        self.i = 0
        self.registry = tuple(registry)

    def error(self, message, back=0):
        i = self.i - back
        col = self.pos[i] if 0 <= i < len(self.pos) else self.end
        return ParseError(message, column=col + 1)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise self.error(f"expected {op!r}, found {'end of input' if val is None else repr(val)}", back=1)

    def parse(self) -> Polynomial:
        if not self.tokens:
            raise ParseError("empty expression")
        p = self.expr()
        if self.i != len(self.tokens):
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-" and val != "**":
                self.take()
                q = self.term()
                p = p + q if val == "+" else p - q
            else:
                return p

    def term(self) -> Polynomial:
        p = self.factor()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in ("*", "/"):
                self.take()
                q = self.factor()
                if val == "*":
                    p = p * q
                else:
                    if not q.is_constant() or q.is_zero():
                        raise self.error("division is only supported by nonzero constants", back=1)
                    p = p / q.constant_term()
            else:
                return p

    def factor(self) -> Polynomial:
        base = self.base()
        kind, val = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            sign = 1
            k2, v2 = self.peek()
            if k2 == "op" and v2 in "+-":
                self.take()
                sign = -1 if v2 == "-" else 1
            kind, val = self.take()
            if kind != "num" or not val.isdigit():
                raise self.error(f"exponent must be a non-negative integer, found {val!r}", back=1)
            if sign < 0 and int(val) != 0:
                raise self.error("negative exponents are not polynomial", back=1)
            return base ** int(val)
        return base

    def base(self) -> Polynomial:
        kind, val = self.take()
        if kind == "num":
            return Polynomial.constant(float(val), self.registry)
        if kind == "imag":
            return Polynomial.constant(complex(0, float(val)), self.registry)
        if kind == "ident":
            if val not in self.registry:
                raise self.error(f"unknown identifier {val!r}", back=1)
            return Polynomial.variable(val, self.registry)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        if kind == "op" and val in "+-":
            p = self.factor()
            return -p if val == "-" else p
        if kind is None:
            raise self.error("unexpected end of expression")
        raise self.error(f"unexpected token {val!r}", back=1)


def parse_polynomial(text: str, registry: Sequence[str]) -> Polynomial:
    """Parse ``text`` into a polynomial over ``registry``."""
    return _Parser(_tokenize(text), registry, len(text.rstrip())).parse()


def parse_system(lines: Sequence[str], registry: Sequence[str], params: Sequence[str] = ()) -> PolySystem:
    return PolySystem([parse_polynomial(s, registry) for s in lines], registry, params)


def identifiers(text: str) -> list[str]:
    """Variable-like identifiers appearing in ``text`` in order of first use."""
    seen = []
    for kind, val in tokenize(text):
        if kind == "ident" and val not in seen:
            seen.append(val)
    return seen
