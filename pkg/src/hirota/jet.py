"""Truncated multivariate Taylor arithmetic (order <= 3, up to 6 variables).

A :class:`Jet` stores Taylor coefficients ``d^alpha f / alpha!`` of a function
around a base point.  Multi-indices are kept as sorted tuples of variable
positions, e.g. ``(0, 0, 2)`` is ``x0^2 x2``; the coefficient array follows
graded lexicographic order, i.e. the order produced by
``itertools.combinations_with_replacement(range(nvars), k)`` for
``k = 0, 1, ..., order``.  For the five evolutionary variables
``(a, b, c, p, q)`` the 35 third-order entries therefore run
``aaa, aab, aac, aap, aaq, abb, abc, abp, abq, acc, ..., qqq``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 3
MAX_VARS = 6


class JetError(ArithmeticError):
    """Raised for undefined jet operations (zero divisor, domain violation)."""


@lru_cache(maxsize=None)
def multi_indices(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of total degree <= order, graded lexicographic."""
    out: list[tuple[int, ...]] = []
    for k in range(order + 1):
        out.extend(combinations_with_replacement(range(nvars), k))
    return tuple(out)


@lru_cache(maxsize=None)
def index_map(nvars: int, order: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(multi_indices(nvars, order))}


@lru_cache(maxsize=None)
def _product_table(nvars: int, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = multi_indices(nvars, order)
    pos = index_map(nvars, order)
    rows_i, rows_j, rows_k = [], [], []
    for i, mi in enumerate(idx):
        for j, mj in enumerate(idx):
            if len(mi) + len(mj) > order:
                continue
            rows_i.append(i)
            rows_j.append(j)
            rows_k.append(pos[tuple(sorted(mi + mj))])
    return np.array(rows_i), np.array(rows_j), np.array(rows_k)


def factorial_weight(alpha: Sequence[int]) -> int:
    """alpha! for a multi-index given as a sorted tuple of positions."""
    w = 1
    for v in set(alpha):
        w *= math.factorial(alpha.count(v))
    return w


# value, first, second and third derivative of each elementary function
_ELEMENTARY: dict[str, Callable[[float], tuple[float, float, float, float]]] = {}


def _register(name):
    def deco(fn):
        _ELEMENTARY[name] = fn
        return fn
    return deco


@_register("exp")
def _exp(x):
    e = math.exp(x)
    return e, e, e, e


@_register("ln")
def _ln(x):
    if x <= 0.0:
        raise JetError(f"ln of non-positive value {x!r}")
    return math.log(x), 1.0 / x, -1.0 / x**2, 2.0 / x**3


@_register("sqrt")
def _sqrt(x):
    if x <= 0.0:
        raise JetError(f"sqrt jet needs a positive constant term, got {x!r}")
    s = math.sqrt(x)
    return s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)


@_register("sin")
def _sin(x):
    s, c = math.sin(x), math.cos(x)
    return s, c, -s, -c


@_register("cos")
def _cos(x):
    s, c = math.sin(x), math.cos(x)
    return c, -s, -c, s


@_register("tan")
def _tan(x):
    c = math.cos(x)
    if c == 0.0:
        raise JetError("tan pole")
    t = math.tan(x)
    sec2 = 1.0 + t * t
    return t, sec2, 2.0 * t * sec2, 2.0 * sec2 * (1.0 + 3.0 * t * t)


@_register("cot")
def _cot(x):
    s = math.sin(x)
    if s == 0.0:
        raise JetError("cot pole")
    k = math.cos(x) / s
    csc2 = 1.0 + k * k
    return k, -csc2, 2.0 * k * csc2, -2.0 * csc2 * (1.0 + 3.0 * k * k)


@_register("sinh")
def _sinh(x):
    s, c = math.sinh(x), math.cosh(x)
    return s, c, s, c


@_register("cosh")
def _cosh(x):
    s, c = math.sinh(x), math.cosh(x)
    return c, s, c, s


@_register("tanh")
def _tanh(x):
    t = math.tanh(x)
    sech2 = 1.0 - t * t
    return t, sech2, -2.0 * t * sech2, -2.0 * sech2 * (1.0 - 3.0 * t * t)


@_register("coth")
def _coth(x):
    if x == 0.0:
        raise JetError("coth pole")
    k = 1.0 / math.tanh(x)
    csch2 = k * k - 1.0
    return k, -csch2, 2.0 * k * csch2, -2.0 * csch2 * (3.0 * k * k - 1.0)


@_register("recip")
def _recip(x):
    if x == 0.0:
        raise JetError("division by a jet with zero constant term")
    return 1.0 / x, -1.0 / x**2, 2.0 / x**3, -6.0 / x**4


ELEMENTARY_NAMES = frozenset(_ELEMENTARY) - {"recip"}


class Jet:
    """Truncated Taylor expansion in ``nvars`` variables up to ``order``."""

    __slots__ = ("nvars", "order", "coeffs")
    # numpy scalars must defer to the reflected jet operators
    __array_ufunc__ = None

    def __init__(self, nvars: int, order: int, coeffs=None):
        if not 1 <= nvars <= MAX_VARS:
            raise ValueError(f"nvars must be in 1..{MAX_VARS}")
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in 0..{MAX_ORDER}")
        n = len(multi_indices(nvars, order))
        self.nvars = nvars
        self.order = order
        if coeffs is None:
            self.coeffs = np.zeros(n)
        else:
            self.coeffs = np.asarray(coeffs, dtype=float)
            if self.coeffs.shape != (n,):
                raise ValueError(f"expected {n} coefficients, got {self.coeffs.shape}")

    # construction ---------------------------------------------------------
    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> "Jet":
        j = cls(nvars, order)
        j.coeffs[0] = value
        return j

    @classmethod
    def variable(cls, i: int, value: float, nvars: int, order: int) -> "Jet":
        j = cls.constant(value, nvars, order)
        if order >= 1:
            j.coeffs[1 + i] = 1.0
        return j

    @classmethod
    def from_derivatives(cls, derivs: dict, nvars: int, order: int) -> "Jet":
        """Build from a map multi-index -> partial derivative value."""
        j = cls(nvars, order)
        pos = index_map(nvars, order)
        for alpha, d in derivs.items():
            alpha = tuple(sorted(alpha))
            if len(alpha) <= order:
                j.coeffs[pos[alpha]] = d / factorial_weight(alpha)
        return j

    def _like(self, coeffs) -> "Jet":
        return Jet(self.nvars, self.order, coeffs)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvars != self.nvars or other.order != self.order:
                raise ValueError("jets must share nvars and order")
            return other
        return Jet.constant(float(other), self.nvars, self.order)

    # access ---------------------------------------------------------------
    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coeff(self, alpha: Sequence[int]) -> float:
        alpha = tuple(sorted(alpha))
        if len(alpha) > self.order:
            raise JetError(f"|alpha|={len(alpha)} exceeds jet order {self.order}")
        return float(self.coeffs[index_map(self.nvars, self.order)[alpha]])

    def derivative(self, alpha: Sequence[int]) -> float:
        """Partial derivative d^alpha f at the base point."""
        alpha = tuple(sorted(alpha))
        return self.coeff(alpha) * factorial_weight(alpha)

    def block(self, k: int) -> np.ndarray:
        """Derivatives (not Taylor coefficients) of total order k, graded-lex."""
        idx = multi_indices(self.nvars, self.order)
        start = sum(1 for m in idx if len(m) < k)
        stop = sum(1 for m in idx if len(m) <= k)
        w = np.array([factorial_weight(m) for m in idx[start:stop]], dtype=float)
        return self.coeffs[start:stop] * w

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return self._like(self.coeffs + self._coerce(other).coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self._like(self.coeffs - self._coerce(other).coeffs)

    def __rsub__(self, other):
        return self._like(self._coerce(other).coeffs - self.coeffs)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self._like(self.coeffs * float(other))
        other = self._coerce(other)
        i, j, k = _product_table(self.nvars, self.order)
        out = np.zeros_like(self.coeffs)
        np.add.at(out, k, self.coeffs[i] * other.coeffs[j])
        return self._like(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self._like(self.coeffs / float(other))
        return self * other.compose("recip")

    def __rtruediv__(self, other):
        return self._coerce(other) * self.compose("recip")

    def __pow__(self, n):
        if isinstance(n, Jet):
            return (n * self.compose("ln")).compose("exp")
        if float(n).is_integer():
            return self.pow_int(int(n))
        return self.pow_real(float(n))

    def pow_int(self, n: int) -> "Jet":
        if n < 0:
            return self.pow_int(-n).compose("recip")
        result = Jet.constant(1.0, self.nvars, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def pow_real(self, r: float) -> "Jet":
        x0 = self.value
        if x0 <= 0.0:
            raise JetError(f"non-integer power {r} of non-positive base {x0}")
        return self._compose_values(
            x0**r, r * x0 ** (r - 1), r * (r - 1) * x0 ** (r - 2),
            r * (r - 1) * (r - 2) * x0 ** (r - 3),
        )

    def compose(self, name: str) -> "Jet":
        """Apply an elementary function by its univariate Taylor series."""
        try:
            fn = _ELEMENTARY[name]
        except KeyError:
            raise ValueError(f"unknown elementary function {name!r}") from None
        try:
            g0, g1, g2, g3 = fn(self.value)
        except (ValueError, OverflowError) as exc:
            raise JetError(f"{name} undefined at {self.value!r}") from exc
        return self._compose_values(g0, g1, g2, g3)

    def _compose_values(self, g0, g1, g2, g3) -> "Jet":
        # g(x0 + h) = g0 + g1 h + g2 h^2/2 + g3 h^3/6, h nilpotent past `order`
        h = self._like(self.coeffs.copy())
        h.coeffs[0] = 0.0
        out = Jet.constant(g0, self.nvars, self.order)
        if self.order >= 1:
            out = out + h * g1
        if self.order >= 2:
            h2 = h * h
            out = out + h2 * (g2 / 2.0)
        if self.order >= 3:
            out = out + (h2 * h) * (g3 / 6.0)
        return out

    # calculus -------------------------------------------------------------
    def partial(self, v: int) -> "Jet":
        """Jet of df/dx_v, one order lower."""
        if self.order == 0:
            raise JetError("cannot differentiate an order-0 jet")
        low = self.order - 1
        pos = index_map(self.nvars, self.order)
        out = Jet(self.nvars, low)
        for i, alpha in enumerate(multi_indices(self.nvars, low)):
            up = tuple(sorted(alpha + (v,)))
            out.coeffs[i] = (alpha.count(v) + 1) * self.coeffs[pos[up]]
        return out

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetError("cannot raise jet order by truncation")
        n = len(multi_indices(self.nvars, order))
        return Jet(self.nvars, order, self.coeffs[:n].copy())

    def permute(self, perm: Sequence[int]) -> "Jet":
        """Relabel variables: new variable ``k`` is old variable ``perm[k]``."""
        inv = {old: new for new, old in enumerate(perm)}
        pos = index_map(self.nvars, self.order)
        out = Jet(self.nvars, self.order)
        for i, alpha in enumerate(multi_indices(self.nvars, self.order)):
            new = tuple(sorted(inv[v] for v in alpha))
            out.coeffs[pos[new]] = self.coeffs[i]
        return out

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value:.6g})"


def jet_combine(op: str, *args):
    """Functional front-end: ``jet_combine("mul", j1, j2)``, ``("compose_elementary", j, "exp")``."""
    if op == "add":
        return args[0] + args[1]
    if op == "sub":
        return args[0] - args[1]
    if op == "mul":
        return args[0] * args[1]
    if op == "div":
        return args[0] / args[1]
    if op == "pow_int":
        return args[0].pow_int(int(args[1]))
    if op == "compose_elementary":
        return args[0].compose(args[1])
    raise ValueError(f"unknown jet operation {op!r}")
