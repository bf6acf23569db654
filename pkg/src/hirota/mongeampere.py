"""Symplectic Monge-Ampere equations in three dimensions.

An equation is a constant-coefficient combination of all minors of the
Hessian ``U``:

    eps det U + h . (principal 2x2 minors) + g . (mixed 2x2 minors)
        + s . (u11, u22, u33) + tau . (u23, u13, u12) + nu = 0

It is linearizable (equivalently, integrable) exactly when the quartic
:func:`quartic` of the 14 coefficients vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dispersion import _as_rng
from .expr import HESSIAN_VARS, Expr, parse

COEFF_NAMES = ("eps", "h1", "h2", "h3", "g1", "g2", "g3",
               "s1", "s2", "s3", "tau1", "tau2", "tau3", "nu")


@dataclass(frozen=True)
class MACoeffs:
    eps: float = 0.0
    h: tuple = (0.0, 0.0, 0.0)
    g: tuple = (0.0, 0.0, 0.0)
    s: tuple = (0.0, 0.0, 0.0)
    tau: tuple = (0.0, 0.0, 0.0)
    nu: float = 0.0

    def __post_init__(self):
        for f in ("h", "g", "s", "tau"):
            object.__setattr__(self, f, tuple(float(x) for x in getattr(self, f)))
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "nu", float(self.nu))
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("Monge-Ampere coefficients must be finite")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.eps, *self.h, *self.g, *self.s, *self.tau, self.nu])

    @classmethod
    def from_vector(cls, v) -> "MACoeffs":
        v = [float(x) for x in v]
        if len(v) != 14:
            raise ValueError("expected 14 coefficients")
        return cls(v[0], v[1:4], v[4:7], v[7:10], v[10:13], v[13])

    def __mul__(self, t: float) -> "MACoeffs":
        return MACoeffs.from_vector(t * self.vector)

    __rmul__ = __mul__

    def as_dict(self) -> dict[str, float]:
        return dict(zip(COEFF_NAMES, self.vector.tolist()))

    @property
    def is_degenerate(self) -> bool:
        """True when every coefficient except ``nu`` vanishes."""
        return not np.any(self.vector[:13])


def minor_basis(U: np.ndarray) -> np.ndarray:
    """The 14 minors paired with the coefficients, in ``COEFF_NAMES`` order."""
    (u11, u12, u13), (_, u22, u23), (_, _, u33) = U
    return np.array([
        np.linalg.det(U),
        u22 * u33 - u23 * u23, u11 * u33 - u13 * u13, u11 * u22 - u12 * u12,
        u11 * u23 - u12 * u13, u22 * u13 - u12 * u23, u33 * u12 - u13 * u23,
        u11, u22, u33, u23, u13, u12, 1.0,
    ])


def ma_value(c: MACoeffs, U) -> float:
    return float(c.vector @ minor_basis(np.asarray(U, dtype=float)))


def ma_expr(c: MACoeffs) -> Expr:
    """The equation as an expression in ``u11 .. u33``."""
    minors = (
        "(u11*u22*u33 + 2*u12*u13*u23 - u11*u23^2 - u22*u13^2 - u33*u12^2)",
        "(u22*u33 - u23^2)", "(u11*u33 - u13^2)", "(u11*u22 - u12^2)",
        "(u11*u23 - u12*u13)", "(u22*u13 - u12*u23)", "(u33*u12 - u13*u23)",
        "u11", "u22", "u33", "u23", "u13", "u12", "1",
    )
    terms = [f"({k!r})*{m}" for k, m in zip(c.vector.tolist(), minors) if k != 0.0]
    return parse(" + ".join(terms) if terms else "0", HESSIAN_VARS)


def quartic(c: MACoeffs) -> float:
    """The degree-4 linearizability invariant of the coefficients."""
    e, nu = c.eps, c.nu
    h1, h2, h3 = c.h
    g1, g2, g3 = c.g
    s1, s2, s3 = c.s
    t1, t2, t3 = c.tau
    return (h1 * h1 * s1 * s1 + h2 * h2 * s2 * s2 + h3 * h3 * s3 * s3
            + g1 * g1 * s2 * s3 + g2 * g2 * s1 * s3 + g3 * g3 * s1 * s2
            - 2 * (h1 * h2 * s1 * s2 + h1 * h3 * s1 * s3 + h2 * h3 * s2 * s3)
            + 4 * e * s1 * s2 * s3 + 4 * nu * h1 * h2 * h3
            + e * t1 * t2 * t3 - nu * g1 * g2 * g3 - e * e * nu * nu
            - nu * (g1 * g1 * h1 + g2 * g2 * h2 + g3 * g3 * h3)
            - (g1 * t1 + g2 * t2 + g3 * t3 + 2 * e * nu) * (h1 * s1 + h2 * s2 + h3 * s3 - e * nu)
            + 2 * (g1 * h1 * s1 * t1 + g2 * h2 * s2 * t2 + g3 * h3 * s3 * t3)
            + t1 * t1 * h2 * h3 + t2 * t2 * h1 * h3 + t3 * t3 * h1 * h2
            - e * (t1 * t1 * s1 + t2 * t2 * s2 + t3 * t3 * s3)
            + s1 * t1 * g2 * g3 + s2 * t2 * g1 * g3 + s3 * t3 * g1 * g2
            - (g1 * h1 * t2 * t3 + g2 * h2 * t1 * t3 + g3 * h3 * t1 * t2))


def reduced_quartic(c: MACoeffs) -> float:
    """The condition for ``det U + linear + nu = 0``; ``eps``, ``h``, ``g`` ignored."""
    s1, s2, s3 = c.s
    t1, t2, t3 = c.tau
    return (4 * s1 * s2 * s3 + c.nu ** 2 + t1 * t2 * t3
            - s1 * t1 * t1 - s2 * t2 * t2 - s3 * t3 * t3)


def reduced_on_slice(c: MACoeffs) -> float:
    """``eps^4 * reduced(c / eps)``, the normalisation matching :func:`quartic`.

    On ``h = g = 0`` this equals :func:`quartic` with constant 1.
    """
    if c.eps == 0.0:
        raise ValueError("the reduced form needs eps != 0")
    return c.eps ** 4 * reduced_quartic(c * (1.0 / c.eps))


def slice_ratio(n: int = 50, seed=None) -> tuple[float, float]:
    """Mean and spread of ``quartic / reduced_on_slice`` over random h = g = 0 points."""
    rng = _as_rng(seed)
    ratios = []
    while len(ratios) < n:
        v = rng.normal(size=14)
        v[1:7] = 0.0
        c = MACoeffs.from_vector(v)
        r = reduced_on_slice(c)
        if abs(r) > 1e-3:
            ratios.append(quartic(c) / r)
    ratios = np.array(ratios)
    return float(ratios.mean()), float(ratios.max() - ratios.min())


def coeffs_from_function(fn: Callable[[np.ndarray], float], seed=0) -> MACoeffs:
    """Recover the 14 coefficients of a function known to be a minor combination."""
    rng = _as_rng(seed)
    rows, rhs = [], []
    for _ in range(40):
        M = rng.normal(size=(3, 3))
        U = 0.5 * (M + M.T)
        rows.append(minor_basis(U))
        rhs.append(fn(U))
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return MACoeffs.from_vector(coef)


def shift(c: MACoeffs, S) -> MACoeffs:
    """Coefficients after ``u -> u + x^t S x / 2``, i.e. ``U -> U + S``."""
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + S.T)
    return coeffs_from_function(lambda U: ma_value(c, U + S))


def _sym(p) -> np.ndarray:
    a, b, c_, d, e, f = p
    return np.array([[a, b, c_], [b, d, e], [c_, e, f]])


def eliminate_minors(c: MACoeffs) -> tuple[MACoeffs, np.ndarray]:
    """Quadratic shift killing the 2x2-minor block when ``eps != 0``.

    The ``h, g`` block of the shifted equation is affine in the shift, so the
    minimiser of ``|h| + |g|`` comes from one least-squares solve.
    """
    if c.eps == 0.0:
        raise ValueError("minor elimination needs eps != 0")
    base = shift(c, np.zeros((3, 3))).vector[1:7]
    cols = []
    for k in range(6):
        e = np.zeros(6)
        e[k] = 1.0
        cols.append(shift(c, _sym(e)).vector[1:7] - base)
    p, *_ = np.linalg.lstsq(np.array(cols).T, -base, rcond=None)
    S = _sym(p)
    return shift(c, S), S


def heavenly_travelling_wave(alpha: float, gamma: float) -> tuple[MACoeffs, float]:
    """Travelling-wave reduction of the first heavenly equation.

    ``alpha (u12 u13 - u11 u23) + gamma (u12 u33 - u13 u23) = 1``.  When
    ``alpha = gamma = 0`` the equation reads ``0 = 1``; the quartic is then
    trivially zero and callers should check :attr:`MACoeffs.is_degenerate`.
    """
    c = MACoeffs(g=(-alpha, 0.0, gamma), nu=-1.0)
    return c, quartic(c)


HESS_ONE = MACoeffs(eps=1.0, nu=-1.0)
HESS_TRACE = MACoeffs(eps=1.0, s=(-1.0, -1.0, -1.0))


def random_linear(rng) -> MACoeffs:
    rng = _as_rng(rng)
    return MACoeffs(s=rng.normal(size=3), tau=rng.normal(size=3), nu=float(rng.normal()))


def random_coeffs(rng) -> MACoeffs:
    return MACoeffs.from_vector(_as_rng(rng).normal(size=14))
