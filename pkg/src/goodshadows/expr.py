"""Expression grammar shared by manifold and field declarations.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

with FUNC in {sin, cos, exp, sqrt, log} and VAR in the caller's variable list
(``x, y`` by default).  The parser builds a sympy tree directly; nothing is
passed through ``eval``.
"""

import re

import numpy as np
import sympy as sp

from .errors import ConfigError

FUNCTIONS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "sqrt": sp.sqrt, "log": sp.log}
_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)|([A-Za-z_]\w*)|(\S))")


def _tokenize(text):
    pos = 0
    tokens = []
    text = text.replace("−", "-")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.end() == pos:
            break
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif name is not None:
            tokens.append(("name", name))
        elif op is not None:
            tokens.append(("op", op))
        pos = m.end()
    if text[pos:].strip():
        raise ConfigError(f"cannot tokenize expression {text!r}")
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.symbols = {v: sp.Symbol(v, real=True) for v in variables}

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            what = "end of input" if tok[0] is None else f"token {tok[1]!r}"
            raise ConfigError(f"unexpected {what} in expression {self.text!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.i != len(self.tokens):
            raise ConfigError(f"trailing input {self.peek()[1]!r} in expression {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            node = node * rhs if op == "*" else node / rhs
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            return base ** self.unary()
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return sp.Rational(val) if re.fullmatch(r"\d+", val) else sp.Float(val, 17)
        if kind == "name":
            self.take()
            if val in FUNCTIONS:
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                return FUNCTIONS[val](arg)
            if val in self.symbols:
                return self.symbols[val]
            if val == "pi":
                return sp.pi
            raise ConfigError(f"unknown identifier {val!r} in expression {self.text!r}")
        if (kind, val) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        what = "end of input" if val is None else f"token {val!r}"
        raise ConfigError(f"unexpected {what} in expression {self.text!r}")


def parse(text, variables=("x", "y")):
    """Parse ``text`` into a sympy expression over ``variables``."""
    return _Parser(str(text), variables).parse()


class CompiledExpression:
    """Value, gradient and Hessian of a parsed expression, vectorized.

    Callables take an array whose last axis holds the variables.
    """

    def __init__(self, text, variables=("x", "y")):
        self.text = str(text)
        self.variables = tuple(variables)
        self.expr = parse(self.text, self.variables)
        syms = [sp.Symbol(v, real=True) for v in self.variables]
        grad = [sp.diff(self.expr, s) for s in syms]
        hess = [[sp.diff(g, s) for s in syms] for g in grad]
        self._f = sp.lambdify(syms, self.expr, "numpy")
        self._g = [sp.lambdify(syms, g, "numpy") for g in grad]
        self._h = [[sp.lambdify(syms, h, "numpy") for h in row] for row in hess]

    def _args(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != len(self.variables):
            raise ConfigError(
                f"expression {self.text!r} expects {len(self.variables)} coordinates, got {p.shape[-1]}"
            )
        return p, [p[..., i] for i in range(p.shape[-1])]

    def value(self, p):
        p, args = self._args(p)
        return np.broadcast_to(np.asarray(self._f(*args), dtype=float), p.shape[:-1]).copy()

    def gradient(self, p):
        p, args = self._args(p)
        return np.stack([np.broadcast_to(np.asarray(g(*args), dtype=float), p.shape[:-1]) for g in self._g], axis=-1)

    def hessian(self, p):
        p, args = self._args(p)
        rows = [
            np.stack([np.broadcast_to(np.asarray(h(*args), dtype=float), p.shape[:-1]) for h in row], axis=-1)
            for row in self._h
        ]
        return np.stack(rows, axis=-2)
