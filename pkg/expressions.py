"""
expressions.py

Metric component expressions: tree nodes, tokenizer, recursive-descent
parser, printer, and evaluator.

Grammar (no implicit multiplication, '^' binds tighter than unary minus
and is right-associative):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

'a - b' is stored as Add(a, Neg(b)); the printer reproduces the same
tree when its output is parsed again.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import dual
from errors import ConfigError, MetricSyntaxError


# ------------------------------------------------------------
# TREE NODES
# ------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    name: str


@dataclass(frozen=True)
class Add:
    left: "ExprNode"
    right: "ExprNode"


@dataclass(frozen=True)
class Mul:
    left: "ExprNode"
    right: "ExprNode"


@dataclass(frozen=True)
class Div:
    left: "ExprNode"
    right: "ExprNode"


@dataclass(frozen=True)
class Pow:
    base: "ExprNode"
    exponent: "ExprNode"


@dataclass(frozen=True)
class Neg:
    operand: "ExprNode"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "ExprNode"


ExprNode = Union[Const, Coord, Add, Mul, Div, Pow, Neg, Func]

FUNCTION_NAMES = frozenset(dual.FUNCTIONS)


def coordinates_used(node: ExprNode) -> set[str]:
    """Names of the coordinates referenced by a tree."""
    if isinstance(node, Coord):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, Neg):
        return coordinates_used(node.operand)
    if isinstance(node, Func):
        return coordinates_used(node.arg)
    if isinstance(node, Pow):
        return coordinates_used(node.base) | coordinates_used(node.exponent)
    return coordinates_used(node.left) | coordinates_used(node.right)


def is_constant(node: ExprNode) -> bool:
    return not coordinates_used(node)


# ------------------------------------------------------------
# TOKENIZER
# ------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "eof"
    text: str
    column: int


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def tokenize(text: str, line: int = 1, column_offset: int = 0) -> list[Token]:
    """
    Split an expression into tokens with 1-based columns.

    Raises
    ------
    MetricSyntaxError
        Unexpected character.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise MetricSyntaxError(f"unexpected character {text[pos]!r}", line, column_offset + pos + 1)
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, match.group(), column_offset + pos + 1))
        pos = match.end()
    tokens.append(Token("eof", "", column_offset + len(text) + 1))
    return tokens


# ------------------------------------------------------------
# PARSER
# ------------------------------------------------------------

class _Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, tokens: list[Token], coords: Sequence[str], line: int):
        self.tokens = tokens
        self.pos = 0
        self.coords = set(coords)
        self.line = line
        self.open_parens: list[Token] = []

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str, token: Token | None = None):
        token = token or self.current
        if token.kind == "eof" and self.open_parens:
            # at end of input point at the innermost unclosed parenthesis
            raise MetricSyntaxError(f"{message} (unclosed '(')", self.line, self.open_parens[-1].column)
        raise MetricSyntaxError(message, self.line, token.column)

    def accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.advance()
            return True
        return False

    def parse(self) -> ExprNode:
        node = self.expr()
        if self.current.kind != "eof":
            self.error(f"unexpected {self.current.text!r}")
        return node

    def expr(self) -> ExprNode:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            right = self.term()
            node = Add(node, right) if op == "+" else Add(node, Neg(right))
        return node

    def term(self) -> ExprNode:
        node = self.unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            right = self.unary()
            node = Mul(node, right) if op == "*" else Div(node, right)
        return node

    def unary(self) -> ExprNode:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> ExprNode:
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.unary())
        return base

    def atom(self) -> ExprNode:
        token = self.current
        if token.kind == "num":
            self.advance()
            return Const(float(token.text))
        if token.kind == "name":
            self.advance()
            if token.text in FUNCTION_NAMES:
                if not (self.current.kind == "op" and self.current.text == "("):
                    self.error(f"expected '(' after {token.text}")
                arg = self.parenthesized()
                return Func(token.text, arg)
            if token.text not in self.coords:
                raise MetricSyntaxError(f"unknown coordinate {token.text!r}", self.line, token.column)
            return Coord(token.text)
        if token.kind == "op" and token.text == "(":
            return self.parenthesized()
        if token.kind == "eof":
            self.error("unexpected end of expression")
        self.error(f"unexpected {token.text!r}")

    def parenthesized(self) -> ExprNode:
        self.open_parens.append(self.advance())
        node = self.expr()
        if not self.accept(")"):
            self.error("expected ')'")
        self.open_parens.pop()
        return node


def parse_expression(text: str, coords: Sequence[str], line: int = 1, column_offset: int = 0) -> ExprNode:
    """
    Parse an expression over the given coordinate names.

    Parameters
    ----------
    text : str
        Expression source.
    coords : sequence of str
        Declared coordinate names.
    line, column_offset : int
        Location of the text inside a larger document, for error messages.

    Raises
    ------
    MetricSyntaxError
        Syntax error or unknown coordinate, with line and column.
    """
    return _Parser(tokenize(text, line, column_offset), coords, line).parse()


# ------------------------------------------------------------
# PRINTER
# ------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _precedence(node: ExprNode) -> int:
    if isinstance(node, Add):
        return _PREC_ADD
    if isinstance(node, (Mul, Div)):
        return _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Pow):
        return _PREC_POW
    if isinstance(node, Const) and node.value < 0:
        return _PREC_NEG
    return _PREC_ATOM


def _wrap(node: ExprNode, minimum: int) -> str:
    text = print_expression(node)
    return f"({text})" if _precedence(node) < minimum else text


def _format_number(value: float) -> str:
    if not math.isfinite(value):
        raise ConfigError(f"cannot print non-finite constant {value}")
    return repr(float(value))


def print_expression(node: ExprNode) -> str:
    """Text with the fewest parentheses that parses back to the same tree."""
    if isinstance(node, Const):
        return _format_number(node.value)
    if isinstance(node, Coord):
        return node.name
    if isinstance(node, Func):
        return f"{node.name}({print_expression(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _PREC_NEG)
    if isinstance(node, Pow):
        return _wrap(node.base, _PREC_ATOM) + "^" + _wrap(node.exponent, _PREC_NEG)
    if isinstance(node, Add):
        left = _wrap(node.left, _PREC_ADD)
        if isinstance(node.right, Neg):
            return f"{left} - {_wrap(node.right.operand, _PREC_MUL)}"
        return f"{left} + {_wrap(node.right, _PREC_MUL)}"
    if isinstance(node, Mul):
        return f"{_wrap(node.left, _PREC_MUL)}*{_wrap(node.right, _PREC_NEG)}"
    if isinstance(node, Div):
        return f"{_wrap(node.left, _PREC_MUL)}/{_wrap(node.right, _PREC_NEG)}"
    raise TypeError(f"not an expression node: {node!r}")


# ------------------------------------------------------------
# EVALUATOR
# ------------------------------------------------------------

def evaluate(node: ExprNode, env: dict):
    """
    Evaluate a tree with coordinate values from env.

    Values may be floats or Duals; the same walk yields plain values,
    gradients, or Hessians depending on how the coordinates are seeded.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Coord):
        return env[node.name]
    if isinstance(node, Add):
        return evaluate(node.left, env) + evaluate(node.right, env)
    if isinstance(node, Mul):
        return evaluate(node.left, env) * evaluate(node.right, env)
    if isinstance(node, Div):
        return evaluate(node.left, env) / evaluate(node.right, env)
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, Pow):
        exponent = node.exponent
        if isinstance(exponent, Const):
            return dual.power(evaluate(node.base, env), exponent.value)
        if isinstance(exponent, Neg) and isinstance(exponent.operand, Const):
            return dual.power(evaluate(node.base, env), -exponent.operand.value)
        return dual.power(evaluate(node.base, env), evaluate(exponent, env))
    if isinstance(node, Func):
        return dual.FUNCTIONS[node.name](evaluate(node.arg, env))
    raise TypeError(f"not an expression node: {node!r}")
