"""Recursive-descent parser for the concrete STL syntax.

Grammar (precedence ``!`` > ``U`` > ``&`` > ``|``)::

    expr    := conj ('|' conj)*
    conj    := until ('&' until)*
    until   := unary ('U' interval unary)?
    unary   := '!' atom | ('G' | 'F') interval unary | atom
    atom    := IDENT | 'True' | 'False' | '(' expr ')'
    interval:= '[' NUMBER ',' NUMBER ']'

``G``, ``F`` and ``U`` are operators only when followed by ``[``; otherwise
they are ordinary region names.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import (And, Always, Eventually, FalseF, Formula, Interval, Not, Or, Pred, TrueF,
                      Until)


class STLSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<sym>[&|!()\[\],])"
)


def tokenize(text: str):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            bad = re.match(r"[^\sA-Za-z0-9_&|!()\[\],]+", text[pos:])
            raise STLSyntaxError(f"unknown operator {bad.group(0)!r}", line, col)
        kind = m.lastgroup
        chunk = m.group(0)
        if kind == "ws":
            for i, ch in enumerate(chunk):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            tokens.append(Token(kind if kind != "sym" else chunk, chunk, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise STLSyntaxError(f"expected {kind!r}, found {found!r}", self.tok.line, self.tok.col)
        return self.advance()

    def _is_op(self, name: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text == name and self.peek().kind == "["

    def parse(self) -> Formula:
        f = self.expr()
        if self.tok.kind != "eof":
            raise STLSyntaxError(f"unexpected {self.tok.text!r}", self.tok.line, self.tok.col)
        return f

    def expr(self) -> Formula:
        first = self.tok
        args = [self.conj()]
        while self.tok.kind == "|":
            self.advance()
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args), pos=(first.line, first.col))

    def conj(self) -> Formula:
        first = self.tok
        args = [self.until()]
        while self.tok.kind == "&":
            self.advance()
            args.append(self.until())
        return args[0] if len(args) == 1 else And(tuple(args), pos=(first.line, first.col))

    def until(self) -> Formula:
        left = self.unary()
        if self._is_op("U"):
            op = self.advance()
            interval = self.interval()
            right = self.unary()
            if self._is_op("U"):
                raise STLSyntaxError("chained Until needs parentheses", self.tok.line, self.tok.col)
            return Until(interval, left, right, pos=(op.line, op.col))
        return left

    def unary(self) -> Formula:
        t = self.tok
        if t.kind == "!":
            self.advance()
            return Not(self.atom(), pos=(t.line, t.col))
        if self._is_op("G") or self._is_op("F"):
            self.advance()
            interval = self.interval()
            arg = self.unary()
            cls = Always if t.text == "G" else Eventually
            return cls(interval, arg, pos=(t.line, t.col))
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        if t.kind == "(":
            self.advance()
            f = self.expr()
            self.expect(")")
            return f
        if t.kind == "ident":
            if self.peek().kind == "[":
                raise STLSyntaxError(f"unknown operator {t.text!r}", t.line, t.col)
            self.advance()
            if t.text == "True":
                return TrueF(pos=(t.line, t.col))
            if t.text == "False":
                return FalseF(pos=(t.line, t.col))
            return Pred(t.text, pos=(t.line, t.col))
        found = t.text or "end of input"
        raise STLSyntaxError(f"unexpected {found!r}", t.line, t.col)

    def interval(self) -> Interval:
        start = self.expect("[")
        a = float(self.expect("num").text)
        self.expect(",")
        b = float(self.expect("num").text)
        self.expect("]")
        try:
            return Interval(a, b)
        except ValueError as exc:
            raise STLSyntaxError(str(exc), start.line, start.col) from None


def parse(text: str) -> Formula:
    """Parse specification text into an AST (negations not yet normalized)."""
    return _Parser(text).parse()
