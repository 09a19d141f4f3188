"""A small expression language for user-defined systems.

Grammar (EBNF)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = atom [ "^" unary ] ;            (* right associative *)
    atom     = number | variable | func "(" expr ")" | "(" expr ")" ;
    variable = "x" digit { digit } ;           (* x1 .. xn *)
    func     = "sin" | "cos" | "exp" | "ln" ;
    number   = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;

Power binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)`` while the
exponent itself may carry a sign (``x1^-1``).  A source file holds one
expression per line; ``#`` starts a comment and blank lines are ignored.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import ArityError, ParseError, UnknownVariable

FUNCTIONS = ("sin", "cos", "exp", "ln")


@dataclass(frozen=True)
class Const:
    text: str


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int  # 1-based


def _tokenize(src: str, line: int):
    toks = []
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos + 1)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", len(src) + 1))
    return toks


class _Parser:
    def __init__(self, src: str, n: int, line: int):
        self.toks = _tokenize(src, line)
        self.i = 0
        self.n = n
        self.line = line

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, self.line, tok.col)

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(tok.text)
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            m = re.fullmatch(r"x(\d+)", name)
            if m:
                idx = int(m.group(1))
                if 1 <= idx <= self.n:
                    return Var(idx)
            if self.tok.kind == "op" and self.tok.text == "(":
                raise ParseError(f"unknown function {name!r}", self.line, tok.col)
            raise UnknownVariable(f"unknown variable {name!r} (valid: x1..x{self.n})", self.line, tok.col)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"expected an operand, found {found!r}")


def parse_expr(src: str, n: int, line: int = 1) -> Node:
    return _Parser(src, n, line).parse()


def parse_lines(source: str, n: int) -> list:
    """Parse a multi-line system source into ``n`` expression trees."""
    exprs = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0]
        if not text.strip():
            continue
        exprs.append(parse_expr(text, n, lineno))
    if len(exprs) != n:
        raise ArityError(f"expected {n} expressions, found {len(exprs)}")
    return exprs


def to_source(node: Node) -> str:
    """Fully parenthesised text that re-parses to the same tree."""
    if isinstance(node, Const):
        return node.text
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-({to_source(node.operand)}))"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def _int_exponent(node):
    if isinstance(node, Const) and re.fullmatch(r"\d+", node.text):
        return int(node.text)
    if isinstance(node, Neg):
        k = _int_exponent(node.operand)
        return None if k is None else -k
    return None


def evaluate(node: Node, xs, lib):
    """Interpret ``node`` with variables ``xs`` (0-based sequence) and math ``lib``."""
    if isinstance(node, Const):
        return lib.const(node.text)
    if isinstance(node, Var):
        return xs[node.index - 1]
    if isinstance(node, Neg):
        return -evaluate(node.operand, xs, lib)
    if isinstance(node, Call):
        return getattr(lib, node.func)(evaluate(node.arg, xs, lib))
    a = evaluate(node.left, xs, lib)
    if node.op == "^":
        k = _int_exponent(node.right)
        if k is not None:
            return lib.ipow(a, k)
        return lib.pow(a, evaluate(node.right, xs, lib))
    b = evaluate(node.right, xs, lib)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b
