"""Cubic form and conformal metric induced on the hypersurface ``u_33 = f``.

Tangent vectors are written in the basis ``(da, db, dc, dp, dq)``.  The cubic
form is ``det dU`` restricted by ``df = f_a da + ... + f_q dq``; the metric is
the quadric through the tangent variety of the rational normal curve
``(1, mu, mu^2, lam, lam mu)``.  After ``C -> 3 sqrt(3) Delta C`` the pair
satisfies the apolarity relations checked in :func:`geometry_report`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .dispersion import (
    ConicPoint,
    Snapshot,
    _UNFOLD3,
    check_nondegenerate,
    conic_sample,
    delta,
)
from .expr import Expr
from .jet import Jet


@dataclass(frozen=True)
class CubicForm:
    tensor: np.ndarray  # 5x5x5, fully symmetric

    def __call__(self, u, v=None, w=None) -> float:
        v = u if v is None else v
        w = u if w is None else w
        return float(np.einsum("ijk,i,j,k->", self.tensor, u, v, w))


@dataclass(frozen=True)
class Metric5:
    matrix: np.ndarray  # 5x5, symmetric

    def __call__(self, u, v=None) -> float:
        v = u if v is None else v
        return float(u @ self.matrix @ v)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def _tangent_matrix(v, first) -> list[list]:
    a, b, c, p, q = v
    f = sum(fi * vi for fi, vi in zip(first, v))
    return [[a, b, p], [b, c, q], [p, q, f]]


def _det3(M):
    return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
            - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
            + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))


def cubic_C(first) -> CubicForm:
    """Symmetric tensor of ``det dU`` with ``df`` eliminated."""
    first = np.asarray(first, dtype=float)
    v = [Jet.variable(i, 0.0, 5, 3) for i in range(5)]
    cubic = _det3(_tangent_matrix(v, first))
    # d^3 det / dv_i dv_j dv_k = 6 C_ijk for a homogeneous cubic
    return CubicForm(cubic.block(3)[_UNFOLD3] / 6.0)


def cubic_expanded(first, v) -> float:
    """The expanded restricted cubic, term by term."""
    fa, fb, fc, fp, fq = first
    da, db, dc, dp, dq = v
    return (fa * da * da * dc + fb * da * db * dc + fp * da * dc * dp + fc * da * dc * dc
            + fq * da * dc * dq - da * dq * dq - fa * da * db * db - fb * db ** 3
            - fp * db * db * dp - fc * db * db * dc - fq * db * db * dq
            + 2 * db * dp * dq - dc * dp * dp)


_Q_TERMS = {
    # (i, j): coefficient of dx_i dx_j, basis order a, b, c, p, q
    (0, 0): lambda a, b, c, p, q: 4 * a * a + a * p * p,
    (0, 1): lambda a, b, c, p, q: 8 * a * b + b * p * p + 2 * a * p * q,
    (0, 3): lambda a, b, c, p, q: 4 * a * p + p ** 3,
    (0, 2): lambda a, b, c, p, q: b * b + 4 * a * c + c * p * p + a * q * q,
    (0, 4): lambda a, b, c, p, q: 2 * b * p + p * p * q,
    (1, 1): lambda a, b, c, p, q: 3 * b * b + 4 * a * c + 2 * b * p * q,
    (1, 3): lambda a, b, c, p, q: 2 * b * p + 4 * a * q + 2 * p * p * q,
    (1, 2): lambda a, b, c, p, q: 8 * b * c + 2 * c * p * q + b * q * q,
    (1, 4): lambda a, b, c, p, q: 4 * c * p + 2 * b * q + 2 * p * q * q,
    (3, 3): lambda a, b, c, p, q: -(4 * a + p * p),
    (2, 3): lambda a, b, c, p, q: 2 * b * q + p * q * q,
    (3, 4): lambda a, b, c, p, q: -(4 * b + 2 * p * q),
    (2, 2): lambda a, b, c, p, q: 4 * c * c + c * q * q,
    (2, 4): lambda a, b, c, p, q: 4 * c * q + q ** 3,
    (4, 4): lambda a, b, c, p, q: -(4 * c + q * q),
}


def metric_Q(first) -> Metric5:
    """The conformal metric from its 15 closed-form coefficients."""
    fa, fb, fc, fp, fq = (float(x) for x in first)
    M = np.zeros((5, 5))
    for (i, j), coeff in _Q_TERMS.items():
        val = coeff(fa, fb, fc, fp, fq)
        if i == j:
            M[i, i] = val
        else:
            M[i, j] = M[j, i] = 0.5 * val
    return Metric5(M)


def lam_prime(first, P: ConicPoint) -> float:
    fa, fb, fc, fp, fq = first
    return (fb + 2 * fc * P.mu + fq * P.lam) / (2 * P.lam - fq * P.mu - fp)


def tangent_variety_point(first, P: ConicPoint, t: float) -> np.ndarray:
    lp = lam_prime(first, P)
    mu, lam = P.mu, P.lam
    return np.array([1.0, mu + t, mu * mu + 2 * t * mu, lam + t * lp, mu * lam + t * (lam + mu * lp)])


def apolarity_residuals(first) -> dict[str, float]:
    """Relative residuals of ``det Q = 3 Delta^4`` and both apolarity relations."""
    first = np.asarray(first, dtype=float)
    d = delta(Snapshot(first, np.zeros(15)))
    Q = metric_Q(first).matrix
    detq = float(np.linalg.det(Q))
    target = 3.0 * d ** 4
    out = {"delta": d, "det_Q": detq, "det_residual": abs(detq - target) / abs(target)}
    # The sign of Delta in 3 sqrt(3) Delta is irrelevant below: the first
    # relation is linear in C (so its zero set is sign free) and the second is
    # quadratic in C.
    Ct = 3.0 * math.sqrt(3.0) * d * cubic_C(first).tensor
    Qi = np.linalg.inv(Q)
    out["condition_Q"] = float(np.linalg.cond(Q))
    trace = np.einsum("ijk,kj->i", Ct, Qi)
    trace_scale = np.einsum("ijk,kj->i", np.abs(Ct), np.abs(Qi)).max()
    out["apolarity"] = float(np.abs(trace).max() / trace_scale)
    lhs = (np.einsum("jkr,rs,lns->jkln", Ct, Qi, Ct)
           + np.einsum("ljr,rs,kns->jkln", Ct, Qi, Ct)
           + np.einsum("klr,rs,jns->jkln", Ct, Qi, Ct))
    rhs = (np.einsum("jk,ln->jkln", Q, Q) + np.einsum("lj,kn->jkln", Q, Q)
           + np.einsum("kl,jn->jkln", Q, Q))
    out["quartic_relation"] = float(np.abs(lhs - rhs).max() / np.abs(rhs).max())
    return out


def hankel_det(x) -> float:
    x0, x1, x2, x3, x4 = x
    return float(np.linalg.det(np.array([[x0, x1, x2], [x1, x2, x3], [x2, x3, x4]], dtype=float)))


def flat_quadric(x) -> float:
    x0, x1, x2, x3, x4 = x
    return x0 * x4 - 4 * x1 * x3 + 3 * x2 * x2


def flat_model_checks(ts: Iterable[float] = (-1.5, -0.5, 0.5, 1.0, 2.0)) -> dict[str, float]:
    """Rational normal curve facts: Hankel cubic and tangent-variety quadric."""
    worst_h, worst_q = 0.0, 0.0
    for t in ts:
        g = np.array([1.0, t, t * t, t ** 3, t ** 4])
        dg = np.array([0.0, 1.0, 2 * t, 3 * t * t, 4 * t ** 3])
        worst_h = max(worst_h, abs(hankel_det(g)) / (1 + np.abs(g).max() ** 3))
        for s in (-1.0, 0.3, 2.0):
            w = g + s * dg
            worst_q = max(worst_q, abs(flat_quadric(w)) / (1 + np.abs(w).max() ** 2))
    return {"hankel_on_curve": worst_h, "quadric_on_tangents": worst_q}


def geometry_report(f: Expr, bases: Iterable[Mapping[str, float]], seed=None) -> list[dict]:
    """Per-point residuals of the cubic/metric identities for ``u_33 = f``."""
    rng = np.random.default_rng(seed)
    out = []
    flat = flat_model_checks()
    for base in bases:
        s = Snapshot.from_expr(f, {v: base.get(v, 0.0) for v in "abcpq"}, with_third=False)
        check_nondegenerate(s)
        rec = apolarity_residuals(s.first)
        C = cubic_C(s.first)
        Q = metric_Q(s.first)
        worst_c, worst_t = 0.0, 0.0
        try:
            pts = conic_sample(s, 5, rng)
        except ArithmeticError:
            pts = []
        for P in pts:
            v = P.vector
            worst_c = max(worst_c, abs(C(v)) / (1 + np.abs(v).max() ** 3))
            w = tangent_variety_point(s.first, P, float(rng.uniform(-1, 1)))
            scale = np.abs(Q.matrix).max() * (1 + np.abs(w).max() ** 2)
            worst_t = max(worst_t, abs(Q(w)) / scale)
        rec.update(cubic_on_curve=worst_c, metric_on_tangents=worst_t, base=dict(base), **flat)
        out.append(rec)
    return out
