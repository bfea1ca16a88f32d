"""Group word expressions.

Grammar (whitespace is ignored)::

    expr     := factor+
    factor   := atom ('^' exponent)*
    atom     := name | '(' expr ')' | '[' expr (',' expr)+ ']'
    exponent := ['-'] integer | name | '[' ... ']' | '(' expsum ')'
    expsum   := ['-'] term (('+' | '-') term)*
    term     := efactor+
    efactor  := integer | name ('^' exponent)* | '(' expsum ')' | '[' ... ']'

``a^b`` is ``b^-1 a b``, ``a^(x+y)`` is ``a^x a^y``, ``a^(xy)`` is
``(a^x)^y`` and ``[x, y]`` is ``x^-1 y^-1 x y`` (left-normed for more
arguments).  A name is one letter followed by digits/underscores, or any
identifier in braces (``{foo}``).  Names bound in ``params`` evaluate to
integers inside exponents.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union


class ExpressionError(ValueError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)
        self.position = position


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Product:
    factors: tuple


@dataclass(frozen=True)
class Commutator:
    args: tuple


@dataclass(frozen=True)
class Power:
    base: object
    exponent: object


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class ExpTerm:
    factors: tuple


@dataclass(frozen=True)
class ExpSum:
    terms: tuple  # of (sign, ExpTerm)


WordExpression = Union[Name, Product, Commutator, Power]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|\{(?P<brace>[A-Za-z][A-Za-z0-9_]*)\}|(?P<name>[A-Za-z][0-9_]*)|(?P<op>[()\[\],^+\-]))"
)


def _tokenize(text):
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        if m.group("int") is not None:
            tokens.append(("int", int(m.group("int")), start))
        elif m.group("brace") is not None:
            tokens.append(("name", m.group("brace"), start))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), start))
        else:
            tokens.append((m.group("op"), None, start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def take(self, kind=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1] if tok[1] is not None else tok[0])
            raise ExpressionError(f"expected {kind!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def error(self, message):
        raise ExpressionError(message, self.tokens[self.i][2])

    def parse(self):
        node = self.expr()
        if self.peek() != "end":
            self.error(f"unexpected {self.tokens[self.i][0]!r}")
        return node

    def expr(self):
        factors = []
        while self.peek() in ("name", "(", "["):
            factors.append(self.factor())
        if not factors:
            self.error("expected a generator, '(' or '['")
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def factor(self):
        node = self.atom()
        while self.peek() == "^":
            self.take()
            node = Power(node, self.exponent())
        return node

    def atom(self):
        kind = self.peek()
        if kind == "name":
            return Name(self.take()[1])
        if kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if kind == "[":
            return self.commutator()
        self.error("expected a generator, '(' or '['")

    def commutator(self):
        self.take("[")
        args = [self.expr()]
        while self.peek() == ",":
            self.take()
            args.append(self.expr())
        self.take("]")
        if len(args) < 2:
            self.error("commutator needs at least two entries")
        return Commutator(tuple(args))

    def exponent(self):
        kind = self.peek()
        if kind == "-":
            self.take()
            if self.peek() == "int":
                return ExpSum(((-1, ExpTerm((Int(self.take()[1]),))),))
            return ExpSum(((-1, ExpTerm((self.exponent(),))),))
        if kind == "int":
            return Int(self.take()[1])
        if kind == "name":
            return Name(self.take()[1])
        if kind == "[":
            return self.commutator()
        if kind == "(":
            self.take()
            node = self.expsum()
            self.take(")")
            return node
        self.error("expected an exponent")

    def expsum(self):
        terms = []
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        terms.append((sign, self.term()))
        while self.peek() in ("+", "-"):
            sign = 1 if self.take()[0] == "+" else -1
            terms.append((sign, self.term()))
        return ExpSum(tuple(terms))

    def term(self):
        factors = []
        while self.peek() in ("int", "name", "(", "["):
            kind = self.peek()
            if kind == "int":
                factors.append(Int(self.take()[1]))
            elif kind == "(":
                self.take()
                factors.append(self.expsum())
                self.take(")")
            else:
                node = Name(self.take()[1]) if kind == "name" else self.commutator()
                while self.peek() == "^":
                    self.take()
                    node = Power(node, self.exponent())
                factors.append(node)
        if not factors:
            self.error("expected an exponent term")
        return ExpTerm(tuple(factors))


def parse_word(text: str) -> WordExpression:
    """Parse a word expression into an AST."""
    return _Parser(text).parse()


# ---------------------------------------------------------------- evaluation
# Words are tuples of non-zero ints; -c is the inverse letter of c.


def free_reduce(word):
    out = []
    for c in word:
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def invert(word):
    return tuple(-c for c in reversed(word))


def multiply(*words):
    out = []
    for w in words:
        for c in w:
            if out and out[-1] == -c:
                out.pop()
            else:
                out.append(c)
    return tuple(out)


def power(word, n):
    if n < 0:
        word, n = invert(word), -n
    out = ()
    base = word
    while n:
        if n & 1:
            out = multiply(out, base)
        base = multiply(base, base)
        n >>= 1
    return out


def commutator(x, y):
    return multiply(invert(x), invert(y), x, y)


Resolver = Callable[[str], tuple]


def evaluate(node, resolve: Resolver, params: dict | None = None) -> tuple:
    """Evaluate an AST to a freely reduced word.

    ``resolve(name)`` returns the word for a generator name and raises
    ``ExpressionError`` for unknown names.
    """
    params = params or {}

    def ev(n):
        if isinstance(n, Name):
            if n.name in params:
                raise ExpressionError(f"parameter {n.name!r} used as a group element")
            return resolve(n.name)
        if isinstance(n, Product):
            return multiply(*(ev(f) for f in n.factors))
        if isinstance(n, Commutator):
            acc = ev(n.args[0])
            for a in n.args[1:]:
                acc = commutator(acc, ev(a))
            return acc
        if isinstance(n, Power):
            return raise_to(ev(n.base), n.exponent)
        raise ExpressionError(f"cannot evaluate {n!r} as a group element")

    def raise_to(base, e):
        if isinstance(e, Int):
            return power(base, e.value)
        if isinstance(e, Name) and e.name in params:
            return power(base, int(params[e.name]))
        if isinstance(e, ExpSum):
            parts = []
            for sign, term in e.terms:
                w = raise_to(base, term)
                parts.append(w if sign > 0 else invert(w))
            return multiply(*parts)
        if isinstance(e, ExpTerm):
            for f in e.factors:
                base = raise_to(base, f)
            return base
        g = ev(e)
        return multiply(invert(g), base, g)

    return ev(node)
