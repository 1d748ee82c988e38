"""
Tokenizer, parser and printer for .ten index expressions.

    expr    := term (("+" | "-") term)*
    term    := [rational ["*"]] factor ("*" factor)*
    factor  := name "[" index ("," index)* "]" | "alt" "(" indexlist ")" "{" expr "}"
    index   := ("^" | "_") identifier
    name    := "omega" | "omegaInv" | "R" | "K" | "delta"
    rational:= integer ["/" positive-integer]

Whitespace is ignored and "#" starts a comment running to the end of the line.
A leading sign on the first term is accepted.
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple, Union

from scripts.utils.errors import ExprArityError, ExprSyntaxError

SYMBOLS = ('omega', 'omegaInv', 'R', 'K', 'delta')
ARITY = {'omega': 2, 'omegaInv': 2, 'R': 4, 'K': 2, 'delta': 2}

_TOKEN_RE = re.compile(r'''
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9]*)
  | (?P<punct>[-+*/\[\](){},^_])
''', re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str      # 'number' | 'ident' | 'punct' | 'end'
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, column)
        kind = match.lastgroup
        if kind == 'newline':
            line += 1
            line_start = match.end()
        elif kind not in ('space', 'comment'):
            tokens.append(Token(kind, match.group(), line, column))
        pos = match.end()
    tokens.append(Token('end', '', line, pos - line_start + 1))
    return tokens


# ============================================================================
# AST
# ============================================================================

@dataclass(frozen=True)
class Index:
    name: str
    covariant: bool
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def __str__(self):
        return ('_' if self.covariant else '^') + self.name


@dataclass(frozen=True)
class Symbol:
    name: str
    indices: Tuple[Index, ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Alt:
    indices: Tuple[Index, ...]
    body: 'Expr'
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


Factor = Union[Symbol, Alt]


@dataclass(frozen=True)
class Term:
    coefficient: Fraction
    factors: Tuple[Factor, ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Expr:
    terms: Tuple[Term, ...]

    def symbols(self) -> Iterator[Symbol]:
        """Every symbol occurrence, including those inside alt bodies."""
        for term in self.terms:
            for factor in term.factors:
                if isinstance(factor, Alt):
                    yield from factor.body.symbols()
                else:
                    yield factor


# ============================================================================
# PARSER
# ============================================================================

class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, message: str, token: Optional[Token] = None) -> ExprSyntaxError:
        token = token or self.current
        found = 'end of input' if token.kind == 'end' else repr(token.text)
        return ExprSyntaxError(f"{message}, found {found}", token.line, token.column)

    def accept(self, text: str) -> Optional[Token]:
        if self.current.text == text and self.current.kind != 'end':
            token = self.current
            self.pos += 1
            return token
        return None

    def expect(self, text: str) -> Token:
        token = self.accept(text)
        if token is None:
            raise self._error(f"expected {text!r}")
        return token

    def parse(self) -> Expr:
        expr = self.expr()
        if self.current.kind != 'end':
            raise self._error("expected '+', '-' or end of input")
        return expr

    def expr(self) -> Expr:
        sign = 1
        if self.accept('-'):
            sign = -1
        else:
            self.accept('+')
        terms = [self.term(sign)]
        while self.current.text in ('+', '-') and self.current.kind == 'punct':
            sign = 1 if self.current.text == '+' else -1
            self.pos += 1
            terms.append(self.term(sign))
        return Expr(tuple(terms))

    def term(self, sign: int) -> Term:
        start = self.current
        coefficient = Fraction(sign)
        if self.current.kind == 'number':
            coefficient *= self.rational()
            self.accept('*')
        factors = [self.factor()]
        while self.accept('*'):
            factors.append(self.factor())
        return Term(coefficient, tuple(factors), start.line, start.column)

    def rational(self) -> Fraction:
        numerator = int(self.current.text)
        self.pos += 1
        if self.accept('/'):
            if self.current.kind != 'number':
                raise self._error("expected a positive integer denominator")
            denominator = int(self.current.text)
            if denominator == 0:
                raise self._error("denominator must be positive")
            self.pos += 1
            return Fraction(numerator, denominator)
        return Fraction(numerator)

    def index_list(self, closing: str) -> Tuple[Index, ...]:
        indices = [self.index()]
        while self.accept(','):
            indices.append(self.index())
        self.expect(closing)
        return tuple(indices)

    def index(self) -> Index:
        marker = self.current
        if marker.text not in ('^', '_') or marker.kind != 'punct':
            raise self._error("expected '^' or '_' before an index")
        self.pos += 1
        name = self.current
        if name.kind != 'ident':
            raise self._error("expected an index name")
        self.pos += 1
        return Index(name.text, marker.text == '_', marker.line, marker.column)

    def factor(self) -> Factor:
        token = self.current
        if token.kind != 'ident':
            raise self._error("expected a symbol or 'alt'")
        self.pos += 1
        if token.text == 'alt':
            self.expect('(')
            indices = self.index_list(')')
            self.expect('{')
            body = self.expr()
            self.expect('}')
            return Alt(indices, body, token.line, token.column)
        if token.text not in SYMBOLS:
            raise ExprSyntaxError(f"unknown symbol {token.text!r}; expected one of {', '.join(SYMBOLS)}",
                                  token.line, token.column)
        self.expect('[')
        indices = self.index_list(']')
        if len(indices) != ARITY[token.text]:
            raise ExprArityError(f"{token.text} takes {ARITY[token.text]} indices, got {len(indices)}",
                                 token.line, token.column)
        return Symbol(token.text, indices, token.line, token.column)


def parse(text: str) -> Expr:
    """Parse .ten source into an Expr; raises ExprSyntaxError or ExprArityError with positions."""
    return _Parser(text).parse()


def parse_file(path: str) -> Expr:
    with open(path, 'r', encoding='utf-8') as f:
        return parse(f.read())


# ============================================================================
# PRINTER
# ============================================================================

def _factor_text(factor: Factor) -> str:
    if isinstance(factor, Alt):
        return f"alt({','.join(map(str, factor.indices))}){{{to_text(factor.body)}}}"
    return f"{factor.name}[{','.join(map(str, factor.indices))}]"


def to_text(expr: Expr) -> str:
    """Canonical single-line source; parse(to_text(e)) == e."""
    parts = []
    for k, term in enumerate(expr.terms):
        magnitude = abs(term.coefficient)
        negative = term.coefficient < 0
        body = ' * '.join(_factor_text(f) for f in term.factors)
        if magnitude != 1:
            body = f"{magnitude} * {body}"
        if k == 0:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f"{'-' if negative else '+'} {body}")
    return ' '.join(parts)
