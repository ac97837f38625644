"""Surface syntax for exact polynomial data.

The input language covers integer and rational literals (``p``, ``p/q``),
variables ``u1`` .. ``uN``, addition, subtraction, multiplication, division by
a nonzero rational constant, integer powers, unary minus, and parentheses.
Precedence, from tightest to loosest: ``^``, unary minus, ``*`` and ``/``,
``+`` and ``-``; binary operators associate to the left.

``format_polynomial`` prints the canonical form: terms in descending graded
lexicographic order, explicit ``*`` and ``^``, coefficient first.  Parsing a
canonical print always reproduces the identical polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import Poly

__all__ = ["ExprSource", "ParseError", "parse_polynomial", "parse", "format_polynomial"]


@dataclass(frozen=True)
class ExprSource:
    """A raw expression string together with the ambient variable count."""

    text: str
    n_vars: int


class ParseError(ValueError):
    """Syntax or range failure, with the byte position of the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


_OPS = set("+-*/^()")

# binary precedence; unary minus sits between POW and MUL, handled structurally
_PREC = {"+": 10, "-": 10, "*": 20, "/": 20}


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens: list[tuple[str, object, int]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append(("OP", ch, i))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("INT", int(text[i:j]), i))
            i = j
            continue
        if ch == "u":
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise ParseError("variable name needs an index, like u1", i)
            tokens.append(("VAR", int(text[i + 1 : j]), i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("END", None, n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, object, int]], n_vars: int):
        self.tokens = tokens
        self.pos = 0
        self.n_vars = n_vars

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Poly:
        poly = self.parse_expr(0)
        kind, value, at = self.peek()
        if kind != "END":
            raise ParseError(f"unexpected {value!r} after expression", at)
        return poly

    def parse_expr(self, min_prec: int) -> Poly:
        left = self.parse_unary()
        while True:
            kind, value, at = self.peek()
            if kind != "OP" or value not in _PREC or _PREC[value] < min_prec:
                return left
            self.advance()
            right = self.parse_expr(_PREC[value] + 1)
            if value == "+":
                left = left + right
            elif value == "-":
                left = left - right
            elif value == "*":
                left = left * right
            else:
                left = self._divide(left, right, at)

    def _divide(self, left: Poly, right: Poly, at: int) -> Poly:
        if not right.is_constant():
            raise ParseError("division is only defined by a rational constant", at)
        value = right.constant_value()
        if value == 0:
            raise ParseError("division by zero", at)
        return left * (Fraction(1) / value)

    def parse_unary(self) -> Poly:
        kind, value, at = self.peek()
        if kind == "OP" and value == "-":
            self.advance()
            return -self.parse_unary()
        return self.parse_power()

    def parse_power(self) -> Poly:
        base = self.parse_atom()
        kind, value, at = self.peek()
        if kind == "OP" and value == "^":
            self.advance()
            ekind, evalue, eat = self.peek()
            if ekind != "INT":
                raise ParseError("exponent must be a nonnegative integer literal", eat)
            self.advance()
            return base**evalue
        return base

    def parse_atom(self) -> Poly:
        kind, value, at = self.advance()
        if kind == "INT":
            return Poly.constant(self.n_vars, value)
        if kind == "VAR":
            if not 1 <= value <= self.n_vars:
                raise ParseError(
                    f"variable u{value} out of range for {self.n_vars} variables", at
                )
            return Poly.variable(self.n_vars, value)
        if kind == "OP" and value == "(":
            inner = self.parse_expr(0)
            ckind, cvalue, cat = self.advance()
            if not (ckind == "OP" and cvalue == ")"):
                raise ParseError("expected closing parenthesis", cat)
            return inner
        if kind == "END":
            raise ParseError("unexpected end of expression", at)
        raise ParseError(f"unexpected {value!r}", at)


def parse_polynomial(src: ExprSource) -> Poly:
    """Parse the expression in src; raises ParseError with a byte position."""
    return _Parser(_tokenize(src.text), src.n_vars).parse()


def parse(text: str, n_vars: int) -> Poly:
    return parse_polynomial(ExprSource(text, n_vars))


def _format_monomial(exp: tuple) -> str:
    parts = []
    for i, e in enumerate(exp):
        if e == 0:
            continue
        parts.append(f"u{i + 1}" if e == 1 else f"u{i + 1}^{e}")
    return "*".join(parts)


def format_polynomial(p: Poly) -> str:
    """Canonical text: descending graded lex order, explicit * and ^."""
    if p.is_zero():
        return "0"
    chunks: list[str] = []
    for exp, coeff in p.sorted_terms():
        mono = _format_monomial(exp)
        mag = abs(coeff)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not chunks:
            chunks.append(body if coeff > 0 else f"-{body}")
        else:
            chunks.append(f" + {body}" if coeff > 0 else f" - {body}")
    return "".join(chunks)
