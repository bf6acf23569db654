"""Hydrodynamic reductions built numerically.

Fields live on a grid in the Riemann invariants ``R^1..R^n``.  Along ``R^j``

    d_j lam^i = (lam^i - lam^j) B_ij d_j a,   d_j mu^i = (mu^i - mu^j) B_ij d_j a,
    d_i d_j a = -2 B_ij d_i a d_j a,
    d_i (b, c, p, q, r) = (mu^i, mu^i^2, lam^i, lam^i mu^i, lam^i^2) d_i a,

with ``r`` the ``u_33`` slot.  The quantities ``mu^i``, ``A_i = d_i a`` have no
equation along their own axis; the Goursat data fix them there, together with
``lam^i`` taken from the conic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .dispersion import (
    SECOND_INDEX,
    ConicPoint,
    Snapshot,
    conic_residual,
    d_scale,
    d_value,
    delta,
    lam_roots,
    second_weights,
)
from .expr import EVOLUTIONARY_VARS, Expr, differentiate, parse

BASE_FIELDS = ("a", "b", "c", "p", "q", "r")
STEP_REJECT = 100.0
D_FLOOR = 1e-8
DELTA_FLOOR = 1e-8


class ReductionError(ArithmeticError):
    def __init__(self, message: str, node=None):
        super().__init__(message if node is None else f"{message} at node {node}")
        self.node = node


class BranchError(ReductionError):
    pass


class StepRejected(ReductionError):
    pass


class Derivatives:
    """Compiled first and second derivatives of ``f``."""

    def __init__(self, f: Expr):
        self.f = f
        self.first = [differentiate(f, v) for v in EVOLUTIONARY_VARS]
        self.second = [differentiate(self.first[i], EVOLUTIONARY_VARS[j]) for i, j in SECOND_INDEX]

    def env(self, base) -> dict[str, float]:
        return dict(zip(EVOLUTIONARY_VARS, (float(x) for x in base[:5])))

    def snapshot(self, base) -> Snapshot:
        env = self.env(base)
        return Snapshot([e.evaluate(env) for e in self.first], [e.evaluate(env) for e in self.second])

    def value(self, base) -> float:
        return float(self.f.evaluate(self.env(base)))


def _profile(profile, default) -> Callable[[float], float]:
    if profile is None:
        return default
    if callable(profile):
        return profile
    e = parse(str(profile), ("R",))
    return lambda R: float(e.evaluate({"R": R}))


def nearest_root(s: Snapshot, mu: float, target: float, node=None) -> float:
    roots = lam_roots(s, mu)
    if not roots:
        raise BranchError(f"complex conic roots for mu={mu:.6g}", node)
    return min(roots, key=lambda r: abs(r - target))


# ---------------------------------------------------------------------------
# generic Goursat march


@dataclass
class _System:
    n: int
    nfields: int
    rates: Callable  # state -> (n, nfields) array, NaN where ungoverned
    prescribe: Callable  # (state, i, R_i, previous state, node) -> state
    governed: np.ndarray  # (n, nfields) bool


def _march(sys: _System, origin: np.ndarray, steps: int, h: float, correctors: int = 2,
           check: Callable | None = None):
    shape = (steps + 1,) * sys.n
    X = np.full(shape + (sys.nfields,), np.nan)
    rates = np.full(shape + (sys.n, sys.nfields), np.nan)
    zero = (0,) * sys.n
    X[zero] = origin
    rates[zero] = sys.rates(origin)
    for node in np.ndindex(shape):
        if node == zero:
            continue
        preds = [k for k in range(sys.n) if node[k] > 0]
        prev = {k: node[:k] + (node[k] - 1,) + node[k + 1:] for k in preds}
        mask = sys.governed[preds]  # which fields each predecessor direction governs
        counts = mask.sum(axis=0)

        def combine(est_rates):
            out = np.zeros(sys.nfields)
            for m, k in enumerate(preds):
                r0 = rates[prev[k]][k]
                step = h * r0 if est_rates is None else 0.5 * h * (r0 + est_rates[k])
                out += np.where(mask[m], X[prev[k]] + np.nan_to_num(step), 0.0)
            with np.errstate(invalid="ignore", divide="ignore"):
                return out / counts

        def fix(state):
            if len(preds) == 1:
                k = preds[0]
                state = sys.prescribe(state, k, node[k] * h, X[prev[k]], node)
            return state

        est = fix(combine(None))
        for _ in range(correctors):
            est = fix(combine(sys.rates(est, node)))
        if np.any(~np.isfinite(est)):
            raise ReductionError("non-finite state", node)
        if check is not None:
            check(est, node)
        X[node] = est
        rates[node] = sys.rates(est, node)
    return X


# ---------------------------------------------------------------------------
# generalized Gibbons-Tsarev system


@dataclass
class GTGrid:
    n: int
    steps: int
    h: float
    f: Expr
    fields: np.ndarray  # shape (steps+1,)*n + (6 + 3n,)
    dispersion: np.ndarray = field(default=None)  # (steps+1,)*n + (n,)
    min_abs_D: np.ndarray = field(default=None)

    def names(self) -> list[str]:
        n = self.n
        return (list(BASE_FIELDS) + [f"mu{i+1}" for i in range(n)]
                + [f"lam{i+1}" for i in range(n)] + [f"A{i+1}" for i in range(n)])

    def get(self, name: str) -> np.ndarray:
        return self.fields[..., self.names().index(name)]

    def dump(self) -> str:
        """Columnar text: R coordinates, fields, dispersion residuals, min |D|."""
        head = [f"R{i+1}" for i in range(self.n)] + self.names() + \
            [f"disp{i+1}" for i in range(self.n)] + ["minD"]
        lines = ["# " + " ".join(head)]
        for node in np.ndindex(self.fields.shape[:-1]):
            vals = [k * self.h for k in node] + list(self.fields[node]) + \
                list(self.dispersion[node]) + [self.min_abs_D[node]]
            lines.append(" ".join(f"{v:.12e}" for v in vals))
        return "\n".join(lines) + "\n"


def _layout(n: int):
    return 6, 6 + n, 6 + 2 * n, 6 + 3 * n  # mu, lam, A offsets and total


def _pair_B(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint, node=None) -> float:
    D = d_value(s, Pi, Pj)
    if abs(D) <= D_FLOOR * d_scale(s, Pi, Pj):
        raise ReductionError(f"degenerate D={D:.3e}", node)
    return (second_weights(Pi.vector, Pj.vector) @ s.second).item() / D


def _gt_system(derivs: Derivatives, n: int, mu_prof, A_prof) -> _System:
    MU, LAM, AA, NF = _layout(n)
    governed = np.ones((n, NF), dtype=bool)
    for i in range(n):
        governed[i, [MU + i, LAM + i, AA + i]] = False

    def rates(X, node=None):
        s = derivs.snapshot(X)
        if abs(delta(s)) <= DELTA_FLOOR * s.scale():
            raise ReductionError("degenerate conic (Delta ~ 0)", node)
        mu, lam, A = X[MU:LAM], X[LAM:AA], X[AA:NF]
        P = [ConicPoint(lam[i], mu[i]) for i in range(n)]
        B = np.zeros((n, n))
        for i, j in itertools.combinations(range(n), 2):
            B[i, j] = B[j, i] = _pair_B(s, P[i], P[j], node)
        out = np.full((n, NF), np.nan)
        for j in range(n):
            out[j, :6] = np.array([1.0, mu[j], mu[j] ** 2, lam[j], lam[j] * mu[j], lam[j] ** 2]) * A[j]
            for i in range(n):
                if i == j:
                    continue
                out[j, MU + i] = (mu[i] - mu[j]) * B[i, j] * A[j]
                out[j, LAM + i] = (lam[i] - lam[j]) * B[i, j] * A[j]
                out[j, AA + i] = -2.0 * B[i, j] * A[i] * A[j]
        return out

    def prescribe(X, i, R, prev, node):
        X = X.copy()
        X[MU + i] = mu_prof[i](R)
        X[AA + i] = A_prof[i](R)
        X[LAM + i] = nearest_root(derivs.snapshot(X), X[MU + i], prev[LAM + i], node)
        return X

    return _System(n, NF, rates, prescribe, governed)


def gt_integrate(f: Expr, n: int, *, base: Sequence[float], mu_profiles: Sequence,
                 A_profiles: Sequence | None = None, steps: int = 50, h: float = 0.01,
                 lam0: Sequence[float] | None = None, project_every: int | None = None,
                 correctors: int = 2) -> GTGrid:
    """March the Goursat problem for an ``n``-component reduction.

    ``base`` gives ``(a, b, c, p, q)`` at the origin; the ``u_33`` slot starts at
    ``f(base)``.  ``mu_profiles[i]`` and ``A_profiles[i]`` (default 1) are the
    free data on axis ``i``.  ``lam0`` selects the conic branch at the origin
    (largest root by default); afterwards the branch is tracked by continuity.
    """
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    derivs = Derivatives(f)
    mu_prof = [_profile(m, None) for m in mu_profiles]
    A_prof = [_profile(A, lambda R: 1.0) for A in (A_profiles or [None] * n)]
    if len(mu_prof) != n or len(A_prof) != n:
        raise ValueError("need one profile per component")
    MU, LAM, AA, NF = _layout(n)
    origin = np.zeros(NF)
    origin[:5] = base
    origin[5] = derivs.value(origin)
    s0 = derivs.snapshot(origin)
    for i in range(n):
        origin[MU + i] = mu_prof[i](0.0)
        origin[AA + i] = A_prof[i](0.0)
        roots = lam_roots(s0, origin[MU + i])
        if not roots:
            raise BranchError(f"complex conic roots at the origin for component {i + 1}")
        origin[LAM + i] = max(roots) if lam0 is None else min(roots, key=lambda r: abs(r - lam0[i]))
    sys = _gt_system(derivs, n, mu_prof, A_prof)

    disp = np.zeros((steps + 1,) * n + (n,))
    dmin = np.zeros((steps + 1,) * n)

    def diagnose(X, node):
        s = derivs.snapshot(X)
        worst = 0.0
        for i in range(n):
            lam, mu = X[LAM + i], X[MU + i]
            res = abs(conic_residual(s, lam, mu)) / (1.0 + lam * lam + mu * mu)
            disp[node][i] = res
            worst = max(worst, res)
        if worst > STEP_REJECT * h * h:
            raise StepRejected(f"dispersion residual {worst:.3e} exceeds {STEP_REJECT:g} h^2", node)
        P = [ConicPoint(X[LAM + i], X[MU + i]) for i in range(n)]
        dmin[node] = min(abs(d_value(s, P[i], P[j])) for i, j in itertools.combinations(range(n), 2))
        if project_every and sum(node) % project_every == 0:
            for i in range(n):
                X[LAM + i] = nearest_root(s, X[MU + i], X[LAM + i], node)

    diagnose(origin, (0,) * n)
    X = _march(sys, origin, steps, h, correctors, diagnose)
    return GTGrid(n, steps, h, f, X, disp, dmin)


# ---------------------------------------------------------------------------
# diagnostics on a grid


def _central(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(arr, -1, axis) - np.roll(arr, 1, axis)) / (2.0 * h)


def _interior(n: int, steps: int):
    return tuple(slice(1, steps) for _ in range(n))


def bisecant_check(g: GTGrid, f: Expr | None = None, flag: float = 1e-2) -> dict:
    """Rank-one test of ``d_i U`` at interior nodes.

    ``U`` is the symmetric matrix ``[[a, b, p], [b, c, q], [p, q, f]]`` with
    ``f`` evaluated from the expression.  The rank measure is ``s2/s1`` of the
    central-difference ``d_i U`` (0 when ``d_i U`` vanishes).
    """
    f = g.f if f is None else f
    derivs = Derivatives(f)
    n, MU, LAM, AA = g.n, *_layout(g.n)[:3]
    F = g.fields
    fvals = np.zeros(F.shape[:-1])
    for node in np.ndindex(fvals.shape):
        fvals[node] = derivs.value(F[node])
    a, b, c, p, q = (F[..., k] for k in range(5))
    U = np.stack([np.stack([a, b, p], -1), np.stack([b, c, q], -1), np.stack([p, q, fvals], -1)], -2)
    inner = _interior(n, g.steps)
    rank = np.zeros(U[inner].shape[:-2] + (n,))
    model = np.zeros_like(rank)
    for i in range(n):
        dU = _central(U, i, g.h)[inner]
        sv = np.linalg.svd(dU, compute_uv=False)
        with np.errstate(invalid="ignore", divide="ignore"):
            rank[..., i] = np.where(sv[..., 0] > 1e-14, sv[..., 1] / sv[..., 0], 0.0)
        mu, lam, A = F[..., MU + i][inner], F[..., LAM + i][inner], F[..., AA + i][inner]
        v = np.stack([np.ones_like(mu), mu, lam], -1)
        rank_one = A[..., None, None] * v[..., :, None] * v[..., None, :]
        num = np.linalg.norm(dU - rank_one, axis=(-2, -1))
        den = np.linalg.norm(dU, axis=(-2, -1))
        with np.errstate(invalid="ignore", divide="ignore"):
            model[..., i] = np.where(den > 1e-14, num / den, num)
    flagged = [tuple(int(k) + 1 for k in idx) for idx in zip(*np.nonzero(rank.max(-1) > flag))]
    return {
        "max_rank_measure": float(rank.max()),
        "max_model_mismatch": float(model.max()),
        "max_F_residual": float(np.abs(F[..., 5] - fvals).max()),
        "flagged_nodes": flagged,
    }


# ---------------------------------------------------------------------------
# reference Gibbons-Tsarev system of dKP (variables a, mu^i)


def dkp_reference(n: int, a0: float, mu_profiles: Sequence, A_profiles: Sequence | None = None,
                  steps: int = 50, h: float = 0.01) -> np.ndarray:
    """Fields ``(a, mu^1..mu^n, A_1..A_n)`` of ``d_j mu^i = d_j a / (mu^j - mu^i)``."""
    mu_prof = [_profile(m, None) for m in mu_profiles]
    A_prof = [_profile(A, lambda R: 1.0) for A in (A_profiles or [None] * n)]
    NF = 1 + 2 * n
    governed = np.ones((n, NF), dtype=bool)
    for i in range(n):
        governed[i, [1 + i, 1 + n + i]] = False

    def rates(X, node=None):
        mu, A = X[1:1 + n], X[1 + n:]
        out = np.full((n, NF), np.nan)
        for j in range(n):
            out[j, 0] = A[j]
            for i in range(n):
                if i != j:
                    d = mu[j] - mu[i]
                    if abs(d) < D_FLOOR:
                        raise ReductionError("coincident mu", node)
                    out[j, 1 + i] = A[j] / d
                    out[j, 1 + n + i] = 2.0 * A[i] * A[j] / (d * d)
        return out

    def prescribe(X, i, R, prev, node):
        X = X.copy()
        X[1 + i] = mu_prof[i](R)
        X[1 + n + i] = A_prof[i](R)
        return X

    origin = np.array([a0] + [m(0.0) for m in mu_prof] + [A(0.0) for A in A_prof])
    return _march(_System(n, NF, rates, prescribe, governed), origin, steps, h)


def dkp_oracle_comparison(steps: int = 40, h: float = 0.01, a0: float = 0.3,
                          mu_profiles=("1 + 0.5*R", "-1 + R")) -> dict:
    """Compare :func:`dkp_reference` with the generalized machinery.

    With ``y`` and ``t`` exchanged the dKP equation reads ``u_33 = u_12 -
    u_11^2 / 2``; its ``lam^i`` is the reference ``mu^i`` and its ``mu^i`` is
    ``a + (lam^i)^2``.  On axis ``i`` the gauge ``A_i = 1`` gives ``a = a0 + R``.
    """
    m = [_profile(p, None) for p in mu_profiles]
    ref = dkp_reference(2, a0, m, steps=steps, h=h)
    f = parse("b - 0.5*a^2")
    gen_mu = [lambda R, k=k: a0 + R + m[k](R) ** 2 for k in range(2)]
    grid = gt_integrate(f, 2, base=(a0, 0.0, 0.0, 0.0, 0.0), mu_profiles=gen_mu,
                        steps=steps, h=h, lam0=[m[0](0.0), m[1](0.0)])
    _, LAM, _, _ = _layout(2)
    return {
        "a": float(np.abs(grid.get("a") - ref[..., 0]).max()),
        "mu": float(np.abs(grid.fields[..., LAM:LAM + 2] - ref[..., 1:3]).max()),
        "A": float(np.abs(grid.fields[..., LAM + 2:LAM + 4] - ref[..., 3:5]).max()),
    }


# ---------------------------------------------------------------------------
# three-component consistency probe


def _flow_rates(derivs: Derivatives, X: np.ndarray, n: int, k: int) -> np.ndarray:
    """Full rate of change along ``R^k`` with ``d_k mu^k = d_k A_k = 0``."""
    MU, LAM, AA, NF = _layout(n)
    sys = _gt_system(derivs, n, [None] * n, [None] * n)
    r = sys.rates(X)[k].copy()
    s = derivs.snapshot(X)
    fa, fb, fc, fp, fq = s.first
    P = ConicPoint(X[LAM + k], X[MU + k])
    r[MU + k] = 0.0
    r[AA + k] = 0.0
    # the conic differentiated along R^k at fixed mu^k
    r[LAM + k] = (P.vector @ s.hessian @ P.vector) * X[AA + k] / (2.0 * P.lam - fp - fq * P.mu)
    return r


def _rk4(derivs, X, n, k, h):
    k1 = _flow_rates(derivs, X, n, k)
    k2 = _flow_rates(derivs, X + 0.5 * h * k1, n, k)
    k3 = _flow_rates(derivs, X + 0.5 * h * k2, n, k)
    k4 = _flow_rates(derivs, X + h * k3, n, k)
    return X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _mu_rate(derivs, X, n, i, j) -> float:
    MU = _layout(n)[0]
    sys = _gt_system(derivs, n, [None] * n, [None] * n)
    return sys.rates(X)[j, MU + i]


def _defects(derivs, X, h) -> np.ndarray:
    out = []
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        dk_dj = (_mu_rate(derivs, _rk4(derivs, X, 3, k, h), 3, i, j)
                 - _mu_rate(derivs, _rk4(derivs, X, 3, k, -h), 3, i, j)) / (2 * h)
        dj_dk = (_mu_rate(derivs, _rk4(derivs, X, 3, j, h), 3, i, k)
                 - _mu_rate(derivs, _rk4(derivs, X, 3, j, -h), 3, i, k)) / (2 * h)
        out.append(dk_dj - dj_dk)
    return np.array(out)


def predicted_defects(f: Expr, base, points: Sequence[ConicPoint], A=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Limit of the cross-derivative defect from the Gibbons-Tsarev residuals."""
    from .integrability import gt_residual

    s = Snapshot.from_expr(f, dict(zip(EVOLUTIONARY_VARS, base)))
    out = []
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        Pi, Pj, Pk = points[i], points[j], points[k]
        rijk = gt_residual(s, Pi, Pj, Pk).value
        rikj = gt_residual(s, Pi, Pk, Pj).value
        out.append(A[j] * A[k] * ((Pi.mu - Pj.mu) * rijk - (Pi.mu - Pk.mu) * rikj))
    return np.array(out)


def _ratio(x: float, y: float) -> float:
    return x / y if y != 0.0 else float("nan")


def seed_points(f: Expr, base: Sequence[float], mus: Sequence[float],
                branches: Sequence[int] | None = None) -> list[ConicPoint]:
    """Conic points at prescribed ``mu``; branch +1 takes the larger root."""
    s = Derivatives(f).snapshot(np.asarray(base, dtype=float))
    out = []
    for i, mu in enumerate(mus):
        roots = lam_roots(s, mu)
        if not roots:
            raise BranchError(f"complex conic roots for mu={mu:.6g}")
        pick = max if (branches is None or branches[i] > 0) else min
        out.append(ConicPoint(pick(roots), float(mu)))
    return out


def gt_consistency3(f: Expr, base: Sequence[float], points: Sequence[ConicPoint],
                    h: float = 0.02, A=(1.0, 1.0, 1.0)) -> dict:
    """Cross-derivative defect of the ``mu`` flows at ``h``, ``h/2``, ``h/4``."""
    derivs = Derivatives(f)
    MU, LAM, AA, NF = _layout(3)
    X = np.zeros(NF)
    X[:5] = base
    X[5] = derivs.value(X)
    for i, P in enumerate(points):
        X[MU + i], X[LAM + i], X[AA + i] = P.mu, P.lam, A[i]
    hs = [h, h / 2, h / 4]
    d = [_defects(derivs, X, hh) for hh in hs]
    pred = predicted_defects(f, base, points, A)
    norms = [float(np.abs(x).max()) for x in d]
    ratios = [_ratio(norms[0], norms[1]), _ratio(norms[1], norms[2])]
    change = [_ratio(float(np.abs(d[0] - d[1]).max()), float(np.abs(d[1] - d[2]).max()))]
    pscale = float(np.abs(pred).max())
    return {
        "h": hs,
        "defects": [x.tolist() for x in d],
        "defect_norms": norms,
        "ratios": ratios,
        "increment_ratio": change[0],
        "predicted": pred.tolist(),
        "relative_to_predicted": float(np.abs(d[-1] - pred).max() / pscale) if pscale > 0 else float("nan"),
    }


# ---------------------------------------------------------------------------
# simple waves (one-component reductions)


@dataclass
class SimpleWave:
    R: np.ndarray  # grid of R(x, y, t)
    fields: dict  # a, b, c, p, q, f on the grid
    residuals: dict  # eight residuals of the quasilinear system
    identity_residual: float
    newton_residual: float
    h: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def simple_wave(f: Expr, mu="R", a="R", psi="R", *, center=(1.0, 0.0, 0.0),
                half_width: float = 0.05, h: float = 0.01, initial=(0.0, 0.0, 0.0, 0.0),
                R_ref: float | None = None, branch: int = 1, R_span: float = 0.5) -> SimpleWave:
    """Simple-wave solution ``x + mu(R) y + lam(R) t = psi(R)``.

    ``initial`` gives ``(b, c, p, q)`` at ``R_ref``; by default ``R_ref`` solves
    the implicit relation at ``center``.  ``branch`` picks the sign of the
    square root in the conic.
    """
    from scipy.optimize import brentq

    derivs = Derivatives(f)
    R_ = ("R",)
    mu_e, a_e, psi_e = (parse(str(x), R_) for x in (mu, a, psi))
    dmu_e, da_e, dpsi_e = (differentiate(e, "R") for e in (mu_e, a_e, psi_e))
    ev = lambda e, R: float(e.evaluate({"R": R}))  # noqa: E731

    def lam_of(R, y):
        st = np.array([ev(a_e, R), *y])
        s = derivs.snapshot(st)
        fa, fb, fc, fp, fq = s.first
        m = ev(mu_e, R)
        beta, gamma = fp + fq * m, fa + fb * m + fc * m * m
        disc = beta * beta + 4 * gamma
        if disc <= 0.0:
            raise BranchError(f"conic roots merge or turn complex at R={R:.6g}")
        return 0.5 * (beta + branch * np.sqrt(disc)), m

    def rhs(R, y):
        lam, m = lam_of(R, y)
        da = ev(da_e, R)
        return [m * da, m * m * da, lam * da, lam * m * da]

    if R_ref is None:
        x0, y0, t0 = center
        if t0 != 0.0:
            raise ValueError("pass R_ref explicitly when the window centre has t != 0")
        R_ref = brentq(lambda R: x0 + ev(mu_e, R) * y0 - ev(psi_e, R), -10.0, 10.0)
    fwd = solve_ivp(rhs, (R_ref, R_ref + R_span), list(initial), method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)
    bwd = solve_ivp(rhs, (R_ref, R_ref - R_span), list(initial), method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)

    def state(R):
        return fwd.sol(R) if R >= R_ref else bwd.sol(R)

    def lam_R(R):
        return lam_of(R, state(R))[0]

    m = int(round(2 * half_width / h)) + 1
    axes = [c + h * (np.arange(m) - (m - 1) / 2) for c in center]
    Xg, Yg, Tg = np.meshgrid(*axes, indexing="ij")
    Rg = np.full(Xg.shape, R_ref)
    worst = 0.0
    for node in np.ndindex(Xg.shape):
        x, y, t = Xg[node], Yg[node], Tg[node]
        R = Rg[node]
        gfun = lambda R: x + ev(mu_e, R) * y + lam_R(R) * t - ev(psi_e, R)  # noqa: E731
        for _ in range(50):
            val = gfun(R)
            eps = 1e-6
            dg = (gfun(R + eps) - gfun(R - eps)) / (2 * eps)
            step = val / dg
            R -= step
            if abs(step) < 1e-14:
                break
        if abs(R - R_ref) > R_span:
            raise ReductionError("Newton left the integrated profile range", node)
        res = abs(gfun(R))
        if res > 1e-12:
            raise ReductionError(f"Newton did not converge (|g|={res:.2e})", node)
        worst = max(worst, res)
        Rg[node] = R
    # fields on the grid
    F = {k: np.zeros(Xg.shape) for k in ("a", "b", "c", "p", "q", "f")}
    ident = 0.0
    for node in np.ndindex(Xg.shape):
        R = Rg[node]
        y = state(R)
        st = np.array([ev(a_e, R), *y])
        for k, v in zip("abcpq", st):
            F[k][node] = v
        F["f"][node] = derivs.value(st)
        # df/dR = grad f . (a', b', c', p', q') against lam^2 a'
        lam, mval = lam_of(R, y)
        da = ev(da_e, R)
        grad = derivs.snapshot(st).first
        dfdR = grad @ (np.array([1.0, mval, mval * mval, lam, lam * mval]) * da)
        ident = max(ident, abs(dfdR - lam * lam * da) / (1.0 + abs(dfdR)))
    d = lambda k, ax: _central(F[k], ax, h)[1:-1, 1:-1, 1:-1]  # noqa: E731
    X_, Y_, T_ = 0, 1, 2
    res = {
        "a_y-b_x": d("a", Y_) - d("b", X_),
        "a_t-p_x": d("a", T_) - d("p", X_),
        "b_y-c_x": d("b", Y_) - d("c", X_),
        "b_t-p_y": d("b", T_) - d("p", Y_),
        "p_y-q_x": d("p", Y_) - d("q", X_),
        "c_t-q_y": d("c", T_) - d("q", Y_),
        "p_t-f_x": d("p", T_) - d("f", X_),
        "q_t-f_y": d("q", T_) - d("f", Y_),
    }
    res = {k: float(np.abs(v).max()) for k, v in res.items()}
    return SimpleWave(Rg, F, res, ident, worst, h)
