"""Symbolic expressions: parse, differentiate, evaluate.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

Numbers may be decimal (``1.5``) or scientific (``2e-3``); a rational such as
``3/4`` is a quotient of two literals and is folded to a single constant, so
``x^3/4`` means ``(x^3)/4``.  Evaluation dispatches on the argument type: Python
floats use :mod:`math` and raise :class:`DomainError` off-domain, numpy arrays
evaluate elementwise (off-domain entries become NaN), and :class:`Jet`
arguments propagate truncated Taylor expansions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .jet import ELEMENTARY_NAMES, Jet, JetError

FUNCTIONS = frozenset(ELEMENTARY_NAMES)

EVOLUTIONARY_VARS = ("a", "b", "c", "p", "q")
HESSIAN_VARS = ("u11", "u12", "u13", "u22", "u23", "u33")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, position: int | None = None):
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.position = position


class DomainError(ArithmeticError):
    def __init__(self, message: str, subexpr: "Expr | None" = None):
        if subexpr is not None:
            message = f"{message} in subexpression {subexpr}"
        super().__init__(message)
        self.subexpr = subexpr


# ---------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ()
    precedence = 100

    def evaluate(self, env: Mapping[str, object]):
        raise NotImplementedError

    def diff(self, v: str) -> "Expr":
        raise NotImplementedError

    def variables(self) -> frozenset[str]:
        raise NotImplementedError

    def substitute(self, mapping: Mapping[str, "Expr"]) -> "Expr":
        raise NotImplementedError

    def __str__(self):
        return self.render()

    def render(self) -> str:
        raise NotImplementedError

    # operator sugar, used when building expressions programmatically
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, other):
        return power(self, as_expr(other))


@dataclass(frozen=True, repr=False)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def diff(self, v):
        return ZERO

    def variables(self):
        return frozenset()

    def substitute(self, mapping):
        return self

    def render(self):
        r = repr(float(self.value))
        return f"({r})" if self.value < 0 else r

    def __repr__(self):
        return f"Num({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnknownIdentifierError(self.name) from None

    def diff(self, v):
        return ONE if v == self.name else ZERO

    def variables(self):
        return frozenset((self.name,))

    def substitute(self, mapping):
        return mapping.get(self.name, self)

    def render(self):
        return self.name

    def __repr__(self):
        return f"Var({self.name!r})"


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


@dataclass(frozen=True, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def precedence(self):
        return _PREC[self.op]

    def evaluate(self, env):
        x = self.left.evaluate(env)
        y = self.right.evaluate(env)
        if self.op == "+":
            return x + y
        if self.op == "-":
            return x - y
        if self.op == "*":
            return x * y
        if self.op == "/":
            return _divide(x, y, self)
        return _power(x, y, self)

    def diff(self, v):
        l, r = self.left, self.right
        dl, dr = l.diff(v), r.diff(v)
        if self.op == "+":
            return add(dl, dr)
        if self.op == "-":
            return sub(dl, dr)
        if self.op == "*":
            return add(mul(dl, r), mul(l, dr))
        if self.op == "/":
            return div(sub(mul(dl, r), mul(l, dr)), mul(r, r))
        # power
        if isinstance(r, Num):
            return mul(mul(r, power(l, Num(r.value - 1.0))), dl)
        if isinstance(dr, Num) and dr.value == 0.0:
            return mul(mul(r, power(l, sub(r, ONE))), dl)
        # d(l^r) = l^r (r' ln l + r l'/l)
        return mul(self, add(mul(dr, Func("ln", l)), div(mul(r, dl), l)))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def substitute(self, mapping):
        return _build(self.op, self.left.substitute(mapping), self.right.substitute(mapping))

    def render(self):
        p = self.precedence
        ls = self.left.render()
        rs = self.right.render()
        if self.op == "^":
            if self.left.precedence <= p:
                ls = f"({ls})"
            if self.right.precedence < p:
                rs = f"({rs})"
            return f"{ls}^{rs}"
        if self.left.precedence < p:
            ls = f"({ls})"
        # left associativity: parenthesize a right operand of equal precedence
        if self.right.precedence <= p:
            rs = f"({rs})"
        return f"{ls} {self.op} {rs}"

    def __repr__(self):
        return f"BinOp({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr
    precedence = 3

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def diff(self, v):
        return neg(self.arg.diff(v))

    def variables(self):
        return self.arg.variables()

    def substitute(self, mapping):
        return neg(self.arg.substitute(mapping))

    def render(self):
        s = self.arg.render()
        if self.arg.precedence <= self.precedence:
            s = f"({s})"
        return f"-{s}"

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def evaluate(self, env):
        return apply_function(self.name, self.arg.evaluate(env), self)

    def diff(self, v):
        da = self.arg.diff(v)
        if isinstance(da, Num) and da.value == 0.0:
            return ZERO
        return mul(_outer_derivative(self.name, self.arg), da)

    def variables(self):
        return self.arg.variables()

    def substitute(self, mapping):
        return Func(self.name, self.arg.substitute(mapping))

    def render(self):
        return f"{self.name}({self.arg.render()})"

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


ZERO = Num(0.0)
ONE = Num(1.0)
TWO = Num(2.0)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Num(float(x))


def _outer_derivative(name: str, u: Expr) -> Expr:
    if name == "exp":
        return Func("exp", u)
    if name == "ln":
        return div(ONE, u)
    if name == "sqrt":
        return div(ONE, mul(TWO, Func("sqrt", u)))
    if name == "sin":
        return Func("cos", u)
    if name == "cos":
        return neg(Func("sin", u))
    if name == "tan":
        return add(ONE, power(Func("tan", u), TWO))
    if name == "cot":
        return neg(add(ONE, power(Func("cot", u), TWO)))
    if name == "sinh":
        return Func("cosh", u)
    if name == "cosh":
        return Func("sinh", u)
    if name == "tanh":
        return sub(ONE, power(Func("tanh", u), TWO))
    if name == "coth":
        return sub(ONE, power(Func("coth", u), TWO))
    raise UnknownIdentifierError(name)


# constant-folding constructors; differentiation relies on these to keep trees small


def _is(x: Expr, v: float) -> bool:
    return isinstance(x, Num) and x.value == v


def add(x: Expr, y: Expr) -> Expr:
    if _is(x, 0.0):
        return y
    if _is(y, 0.0):
        return x
    if isinstance(x, Num) and isinstance(y, Num):
        return Num(x.value + y.value)
    return BinOp("+", x, y)


def sub(x: Expr, y: Expr) -> Expr:
    if _is(y, 0.0):
        return x
    if _is(x, 0.0):
        return neg(y)
    if isinstance(x, Num) and isinstance(y, Num):
        return Num(x.value - y.value)
    return BinOp("-", x, y)


def mul(x: Expr, y: Expr) -> Expr:
    if _is(x, 0.0) or _is(y, 0.0):
        return ZERO
    if _is(x, 1.0):
        return y
    if _is(y, 1.0):
        return x
    if _is(x, -1.0):
        return neg(y)
    if _is(y, -1.0):
        return neg(x)
    if isinstance(x, Num) and isinstance(y, Num):
        return Num(x.value * y.value)
    return BinOp("*", x, y)


def div(x: Expr, y: Expr) -> Expr:
    if _is(x, 0.0):
        return ZERO
    if _is(y, 1.0):
        return x
    if isinstance(x, Num) and isinstance(y, Num) and y.value != 0.0:
        return Num(x.value / y.value)
    return BinOp("/", x, y)


def power(x: Expr, y: Expr) -> Expr:
    if _is(y, 0.0):
        return ONE
    if _is(y, 1.0):
        return x
    return BinOp("^", x, y)


def neg(x: Expr) -> Expr:
    if isinstance(x, Num):
        return Num(-x.value)
    if isinstance(x, Neg):
        return x.arg
    return Neg(x)


def _build(op: str, l: Expr, r: Expr) -> Expr:
    return {"+": add, "-": sub, "*": mul, "/": div, "^": power}[op](l, r)


# ---------------------------------------------------------------------------
# numeric kernels

_NUMPY_FUNCS = {
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "cot": lambda x: 1.0 / np.tan(x),
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "coth": lambda x: 1.0 / np.tanh(x),
}

_MATH_FUNCS = {
    "exp": math.exp,
    "ln": math.log,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "cot": lambda x: math.cos(x) / math.sin(x),
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "coth": lambda x: 1.0 / math.tanh(x),
}


def apply_function(name: str, x, node: Expr | None = None):
    if isinstance(x, Jet):
        try:
            return x.compose(name)
        except JetError as exc:
            raise DomainError(str(exc), node) from None
    if isinstance(x, np.ndarray):
        with np.errstate(all="ignore"):
            return _NUMPY_FUNCS[name](x)
    x = float(x)
    if name in ("ln",) and x <= 0.0:
        raise DomainError(f"ln of non-positive value {x!r}", node)
    if name == "sqrt" and x < 0.0:
        raise DomainError(f"sqrt of negative value {x!r}", node)
    try:
        return _MATH_FUNCS[name](x)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise DomainError(f"{name}({x!r}) undefined: {exc}", node) from None


def _divide(x, y, node):
    if isinstance(y, Jet):
        try:
            return x / y if isinstance(x, Jet) else y.__rtruediv__(x)
        except JetError as exc:
            raise DomainError(str(exc), node) from None
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        with np.errstate(all="ignore"):
            return x / y
    if float(y) == 0.0:
        raise DomainError("division by zero", node)
    return x / y


def _power(x, y, node):
    if isinstance(x, Jet) or isinstance(y, Jet):
        try:
            if isinstance(y, Jet):
                if not isinstance(x, Jet):
                    if float(x) <= 0.0:
                        raise JetError("non-integer power of non-positive base")
                    return (y * math.log(float(x))).compose("exp")
                return x**y
            return x**y
        except JetError as exc:
            raise DomainError(str(exc), node) from None
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        with np.errstate(all="ignore"):
            if np.ndim(y) == 0 and float(y).is_integer():
                return x ** int(y)
            return np.power(x, y)
    x, y = float(x), float(y)
    if y.is_integer():
        if x == 0.0 and y < 0:
            raise DomainError("zero to a negative power", node)
        return x ** int(y)
    if x <= 0.0:
        raise DomainError(f"non-integer power of non-positive base {x!r}", node)
    return x**y


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Iterable[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise ExprSyntaxError("empty input", 0)
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op, pos = self.take()[1:]
            rhs = self.factor()
            if isinstance(e, Num) and isinstance(rhs, Num):
                if op == "/" and rhs.value == 0.0:
                    raise ExprSyntaxError("zero denominator in constant quotient", pos)
                e = Num(e.value * rhs.value if op == "*" else e.value / rhs.value)
            else:
                e = BinOp(op, e, rhs)
        return e

    def factor(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(val, pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            if val not in self.variables:
                raise UnknownIdentifierError(val, pos)
            return Var(val)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            prev = self.tokens[self.i - 2] if self.i >= 2 else None
            if prev is not None and prev[0] == "op":
                raise ExprSyntaxError(f"missing operand after {prev[1]!r}", prev[2])
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected token {val!r}", pos)


def parse(text: str, variables: Sequence[str] = EVOLUTIONARY_VARS) -> Expr:
    """Parse ``text`` into an expression over the declared ``variables``."""
    if text is None or not text.strip():
        raise ExprSyntaxError("empty input", 0)
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# public helpers


def differentiate(e: Expr, v: str) -> Expr:
    return e.diff(v)


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    return e.evaluate(point)


def eval_jet(e: Expr, base: Mapping[str, float], order: int = 3,
             variables: Sequence[str] = EVOLUTIONARY_VARS) -> Jet:
    """Truncated Taylor expansion of ``e`` around ``base`` in ``variables``."""
    n = len(variables)
    env = {v: Jet.variable(i, float(base[v]), n, order) for i, v in enumerate(variables)}
    for k, val in base.items():
        env.setdefault(k, val)
    out = e.evaluate(env)
    if not isinstance(out, Jet):
        out = Jet.constant(float(out), n, order)
    if not np.all(np.isfinite(out.coeffs)):
        raise DomainError("non-finite jet coefficient", e)
    return out
