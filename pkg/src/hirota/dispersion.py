"""Dispersion conic, its discriminant and the pairwise quantities N, D, B.

For an equation written as ``u_33 = f(a, b, c, p, q)`` with
``a = u_11, b = u_12, c = u_22, p = u_13, q = u_23`` a characteristic
direction is a point ``(lam, mu)`` on the conic

    lam^2 = f_a + f_b mu + f_c mu^2 + f_p lam + f_q lam mu.

Each point carries the rank-one direction ``v = (1, mu, mu^2, lam, lam mu)``
in the ``(a, b, c, p, q)`` coordinates.  With it,

    N_ij = d2f(v_i, v_j)
    D_ij = -2 lam_i lam_j + 2 f_a + f_b (mu_i + mu_j) + 2 f_c mu_i mu_j
           + f_p (lam_i + lam_j) + f_q (lam_i mu_j + lam_j mu_i)
    B_ij = N_ij / D_ij.

Applying a reduction derivative ``d_j`` to the conic at point ``i`` and
using ``d_j lam_i = (lam_i - lam_j) B_ij d_j a`` (and the same for ``mu``)
produces exactly ``N_ij = B_ij D_ij``, which confirms the bilinear pairing of
``N`` used here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .expr import EVOLUTIONARY_VARS, Expr, eval_jet
from .jet import Jet, multi_indices

DEGENERACY_FLOOR = 1e-8
MU_SEPARATION = 0.05
MU_WINDOW = (-2.0, 2.0)
CONIC_TOL = 1e-9

SECOND_INDEX = multi_indices(5, 2)[6:]
THIRD_INDEX = multi_indices(5, 3)[21:]


class DegenerateConicError(ArithmeticError):
    pass


class ComplexDispersionError(ArithmeticError):
    def __init__(self, message="complex dispersion: sampling over complex λ not supported"):
        super().__init__(message)


class DegeneratePairError(ArithmeticError):
    pass


def _fold_map(order: int) -> np.ndarray:
    """Map each entry of a full ``5^order`` tensor to its graded-lex slot."""
    idx = multi_indices(5, order)
    start = sum(1 for m in idx if len(m) < order)
    pos = {m: i - start for i, m in enumerate(idx) if len(m) == order}
    full = np.indices((5,) * order).reshape(order, -1).T
    return np.array([pos[tuple(sorted(t))] for t in full])


_FOLD2 = _fold_map(2)
_FOLD3 = _fold_map(3)
_UNFOLD2 = _FOLD2.reshape(5, 5)
_UNFOLD3 = _FOLD3.reshape(5, 5, 5)


def third_weights(u, v, w) -> np.ndarray:
    """35-vector ``t`` with ``d3f(u, v, w) = t @ thirds``."""
    outer = np.einsum("i,j,k->ijk", u, v, w).ravel()
    if np.iscomplexobj(outer):
        return (np.bincount(_FOLD3, weights=outer.real, minlength=35)
                + 1j * np.bincount(_FOLD3, weights=outer.imag, minlength=35))
    return np.bincount(_FOLD3, weights=outer, minlength=35)


def second_weights(u, v) -> np.ndarray:
    """15-vector ``t`` with ``d2f(u, v) = t @ second``; symmetric bit-for-bit."""
    out = np.empty(15, dtype=np.result_type(u, v))
    for n, (x, y) in enumerate(SECOND_INDEX):
        out[n] = u[x] * v[x] if x == y else u[x] * v[y] + u[y] * v[x]
    return out


@dataclass(frozen=True)
class Snapshot:
    """First, second and optionally third derivatives of ``f`` at one point."""

    first: np.ndarray
    second: np.ndarray
    third: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "first", np.asarray(self.first, dtype=float).reshape(5))
        object.__setattr__(self, "second", np.asarray(self.second, dtype=float).reshape(15))
        if self.third is not None:
            object.__setattr__(self, "third", np.asarray(self.third, dtype=float).reshape(35))

    @classmethod
    def from_jet(cls, jet: Jet, with_third: bool = True) -> "Snapshot":
        third = jet.block(3) if with_third and jet.order >= 3 else None
        return cls(jet.block(1), jet.block(2), third)

    @classmethod
    def from_expr(cls, f: Expr, base: Mapping[str, float], with_third: bool = True) -> "Snapshot":
        return cls.from_jet(eval_jet(f, base, 3, EVOLUTIONARY_VARS), with_third)

    def with_third(self, third) -> "Snapshot":
        return Snapshot(self.first, self.second, third)

    @property
    def hessian(self) -> np.ndarray:
        return self.second[_UNFOLD2]

    @property
    def tensor3(self) -> np.ndarray:
        if self.third is None:
            raise ValueError("snapshot carries no third derivatives")
        return self.third[_UNFOLD3]

    def scale(self) -> float:
        return 1.0 + float(np.dot(self.first, self.first))


@dataclass(frozen=True)
class ConicPoint:
    """A point of the dispersion conic; ``lam`` is complex on elliptic branches."""

    lam: float | complex
    mu: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([1.0, self.mu, self.mu * self.mu, self.lam, self.lam * self.mu])


@dataclass(frozen=True)
class PairData:
    N: float
    D: float
    B: float


def delta(s: Snapshot) -> float:
    fa, fb, fc, fp, fq = s.first
    return fb * fb + fb * fp * fq - fa * fq * fq - fc * fp * fp - 4.0 * fa * fc


def conic_residual(s: Snapshot, lam: float, mu: float) -> float:
    fa, fb, fc, fp, fq = s.first
    return lam * lam - (fa + fb * mu + fc * mu * mu + fp * lam + fq * lam * mu)


def on_conic(s: Snapshot, P: ConicPoint, tol: float = CONIC_TOL) -> bool:
    return abs(conic_residual(s, P.lam, P.mu)) <= tol * (1.0 + abs(P.lam) ** 2 + P.mu ** 2)


def lam_roots(s: Snapshot, mu: float) -> tuple[float, ...]:
    """Real roots in ``lam`` of the conic at fixed ``mu`` (empty if complex)."""
    fa, fb, fc, fp, fq = s.first
    beta = fp + fq * mu
    gamma = fa + fb * mu + fc * mu * mu
    disc = beta * beta + 4.0 * gamma
    if disc < 0.0:
        return ()
    r = math.sqrt(disc)
    # avoid cancellation in the smaller root
    big = 0.5 * (beta + math.copysign(r, beta)) if beta != 0.0 else 0.5 * r
    if big == 0.0:
        return (0.0, 0.0)
    return (big, -gamma / big)


def complex_lam_roots(s: Snapshot, mu: float) -> tuple[complex, complex]:
    fa, fb, fc, fp, fq = s.first
    beta = fp + fq * mu
    gamma = fa + fb * mu + fc * mu * mu
    r = cmath.sqrt(beta * beta + 4.0 * gamma)
    return (0.5 * (beta + r), 0.5 * (beta - r))


def check_nondegenerate(s: Snapshot, floor: float = DEGENERACY_FLOOR) -> float:
    d = delta(s)
    if abs(d) <= floor * s.scale():
        raise DegenerateConicError(f"degenerate conic: delta={d:.3e}")
    return d


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def real_mu_intervals(s: Snapshot, window=MU_WINDOW) -> list[tuple[float, float]]:
    """Sub-intervals of ``window`` where the conic has real ``lam``."""
    fa, fb, fc, fp, fq = s.first
    # discriminant in lam as a quadratic in mu
    c2, c1, c0 = fq * fq + 4.0 * fc, 2.0 * fp * fq + 4.0 * fb, fp * fp + 4.0 * fa
    lo, hi = window
    cuts = [lo, hi]
    for r in np.roots([c2, c1, c0]) if (c2 or c1) else []:
        if abs(r.imag) < 1e-12 and lo < r.real < hi:
            cuts.append(float(r.real))
    cuts.sort()
    out = []
    for x0, x1 in zip(cuts, cuts[1:]):
        m = 0.5 * (x0 + x1)
        if x1 > x0 and c2 * m * m + c1 * m + c0 >= 0.0:
            out.append((x0, x1))
    return out


def conic_sample(s: Snapshot, count: int, seed=None, *, mu_window=MU_WINDOW,
                 min_sep: float = MU_SEPARATION,
                 floor: float = DEGENERACY_FLOOR,
                 complex_ok: bool = False) -> list[ConicPoint]:
    """Random real points of the conic with well separated ``mu`` values.

    With ``complex_ok`` the real budget is skipped and ``lam`` is taken from
    the complex root pair at real ``mu``; the residual identities are
    polynomial in ``(lam, mu)`` so they hold on complex points as well.
    """
    check_nondegenerate(s, floor)
    rng = _as_rng(seed)
    intervals = [mu_window] if complex_ok else real_mu_intervals(s, mu_window)
    starts = [lo for lo, _ in intervals]
    ends = np.cumsum([hi - lo for lo, hi in intervals])
    total = float(ends[-1]) if len(ends) else 0.0
    # room for count points at least min_sep apart, with some slack
    if total <= 2.0 * count * min_sep:
        raise ComplexDispersionError()
    points: list[ConicPoint] = []
    attempts = 0
    budget = 100 * max(count, 1)
    while len(points) < count:
        attempts += 1
        if attempts > budget:
            raise ComplexDispersionError()
        x = float(rng.uniform(0.0, total))
        k = min(int(np.searchsorted(ends, x, side="right")), len(ends) - 1)
        mu = starts[k] + x - (float(ends[k - 1]) if k else 0.0)
        if any(abs(mu - P.mu) < min_sep for P in points):
            continue
        roots = complex_lam_roots(s, mu) if complex_ok else lam_roots(s, mu)
        if not roots:
            continue
        lam = roots[int(rng.integers(2))]
        points.append(ConicPoint(lam, mu))
    return points


def d_value(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint) -> float:
    fa, fb, fc, fp, fq = s.first
    li, mi, lj, mj = Pi.lam, Pi.mu, Pj.lam, Pj.mu
    return (-2.0 * (li * lj) + 2.0 * fa + fb * (mi + mj) + 2.0 * fc * (mi * mj)
            + fp * (li + lj) + fq * (li * mj + lj * mi))


def n_value(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint) -> float:
    return (second_weights(Pi.vector, Pj.vector) @ s.second).item()


def d_scale(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint) -> float:
    fa, fb, fc, fp, fq = np.abs(s.first)
    li, mi, lj, mj = abs(Pi.lam), abs(Pi.mu), abs(Pj.lam), abs(Pj.mu)
    return 1.0 + 2 * li * lj + 2 * fa + fb * (mi + mj) + 2 * fc * mi * mj + fp * (li + lj) + fq * (li * mj + lj * mi)


def pair_data(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint,
              floor: float = DEGENERACY_FLOOR) -> PairData:
    for P in (Pi, Pj):
        if not on_conic(s, P):
            raise ValueError(f"point {P} violates the dispersion relation")
    D = d_value(s, Pi, Pj)
    if abs(D) <= floor * d_scale(s, Pi, Pj):
        raise DegeneratePairError(f"near-zero D={D:.3e} for {Pi}, {Pj}")
    N = n_value(s, Pi, Pj)
    return PairData(N, D, N / D)


def u_value(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint) -> float:
    fa, fb, fc, fp, fq = s.first
    l1, m1, l2, m2 = Pi.lam, Pi.mu, Pj.lam, Pj.mu
    bracket = (2 * fa + (m1 + m2) * fb + 2 * m1 * m2 * fc - (l1 + l2) * fp
               - (l1 * m2 + l2 * m1) * fq + fp * fp + (m1 + m2) * fp * fq
               + m1 * m2 * fq * fq + 2 * l1 * l2)
    return bracket / ((m1 - m2) ** 2 * delta(s))


def u_identity_residual(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint,
                        min_sep: float = MU_SEPARATION) -> float:
    """Relative mismatch between ``1/D_ij`` and the closed-form ``U_ij``."""
    if abs(Pi.mu - Pj.mu) <= min_sep:
        raise DegeneratePairError("mu values too close for the U identity")
    check_nondegenerate(s)
    inv = 1.0 / pair_data(s, Pi, Pj).D
    return abs(inv - u_value(s, Pi, Pj)) / (1.0 + abs(inv))


def random_snapshot(rng: np.random.Generator, delta_range=(0.1, 10.0),
                    with_third: bool = False, max_tries: int = 10_000) -> Snapshot:
    """Gaussian first/second derivatives with ``|delta|`` in ``delta_range``."""
    for _ in range(max_tries):
        s = Snapshot(rng.normal(size=5), rng.normal(size=15),
                     rng.normal(size=35) if with_third else None)
        if delta_range[0] <= abs(delta(s)) <= delta_range[1]:
            try:
                conic_sample(s, 3, rng)
            except ComplexDispersionError:
                continue
            return s
    raise RuntimeError("could not draw a snapshot in the requested delta range")
