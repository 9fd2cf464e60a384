"""Recursive-descent parser for the textual STL grammar::

    formula := or
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "!" unary | "F[" int "," int "]" unary | "G[" int "," int "]" unary | until
    until   := atom ("U[" int "," int "]" atom)*
    atom    := ident | "(" formula ")"

``F``, ``G`` and ``U`` act as operators only when followed by ``[``; otherwise
they are ordinary identifiers. ``a & b & c`` yields one three-way And.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import Always, And, Eventually, Formula, Not, Or, PredicateTable, Until


class STLSyntaxError(ValueError):
    def __init__(self, msg, line, col):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownPredicateError(STLSyntaxError):
    pass


class IntervalError(STLSyntaxError):
    pass


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<temporal>[FGU])\s*\[
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>-?\d+(?:\.\d*)?)
  | (?P<op>[!&|(),\]])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text):
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            line, col = _linecol(text, pos)
            raise STLSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group("temporal") if kind == "temporal" else m.group(kind)
            out.append(_Tok(kind, val, m.start()))
        pos = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


def _linecol(text, pos):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, text, table):
        self.text = text
        self.table = table
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None, cls=STLSyntaxError):
        tok = tok or self.peek()
        line, col = _linecol(self.text, tok.pos)
        raise cls(msg, line, col)

    def expect(self, text):
        tok = self.take()
        if tok.text != text or tok.kind not in ("op",):
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def parse(self):
        f = self.or_()
        if self.peek().kind != "eof":
            self.error(f"unexpected {self.peek().text!r}")
        return f

    def or_(self):
        args = [self.and_()]
        while self.peek().text == "|" and self.peek().kind == "op":
            self.take()
            args.append(self.and_())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def and_(self):
        args = [self.unary()]
        while self.peek().text == "&" and self.peek().kind == "op":
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "!":
            self.take()
            return Not(self.unary())
        if tok.kind == "temporal" and tok.text in "FG":
            self.take()
            t1, t2 = self.interval(tok)
            child = self.unary()
            return (Eventually if tok.text == "F" else Always)(t1, t2, child)
        return self.until()

    def until(self):
        left = self.atom()
        while self.peek().kind == "temporal" and self.peek().text == "U":
            tok = self.take()
            t1, t2 = self.interval(tok)
            left = Until(t1, t2, left, self.atom())
        return left

    def interval(self, op_tok):
        a = self.integer()
        self.expect(",")
        b = self.integer()
        self.expect("]")
        if a < 0 or b < 0:
            self.error(f"malformed interval [{a},{b}]: bounds must be non-negative", op_tok, IntervalError)
        if b < a:
            self.error(f"malformed interval [{a},{b}]: upper bound below lower bound", op_tok, IntervalError)
        return a, b

    def integer(self):
        tok = self.take()
        if tok.kind != "int":
            self.error(f"expected an integer, found {tok.text or 'end of input'!r}", tok)
        if not re.fullmatch(r"-?\d+", tok.text):
            self.error(f"interval bounds must be integers, found {tok.text!r}", tok, IntervalError)
        return int(tok.text)

    def atom(self):
        tok = self.take()
        if tok.kind == "ident":
            if tok.text not in self.table:
                self.error(f"unknown predicate {tok.text!r}", tok, UnknownPredicateError)
            return self.table.formula(tok.text)
        if tok.kind == "op" and tok.text == "(":
            f = self.or_()
            self.expect(")")
            return f
        self.error(f"expected a predicate or '(', found {tok.text or 'end of input'!r}", tok)


def parse(text: str, table: PredicateTable) -> Formula:
    """Parse ``text`` into a formula whose identifiers resolve in ``table``."""
    return _Parser(text, table).parse()
