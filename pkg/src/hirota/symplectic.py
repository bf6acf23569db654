"""Sp(6) acting on symmetric 3x3 matrices and on equations ``F(U) = 0``.

The group element ``[[A, B], [C, D]]`` acts by ``U -> (A U + B)(C U + D)^-1``.
Its Lie algebra acts by the quadratic vector fields

    delta U = B + A^t U + U A - U C U        (B, C symmetric, A arbitrary)

which gives 6 + 9 + 6 = 21 generators.  Each one rescales the cubic form
``det dU`` by the factor ``2 tr A - 2 tr(C U)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dispersion import Snapshot, _as_rng
from .expr import HESSIAN_VARS, DomainError, Expr, Num, Var, add, differentiate, mul, neg, sub, div
from .integrability import names_from_sym, solve_thirds, sym_from_names
from .jet import Jet, multi_indices

RANK_TOL = 1e-8

# coordinate order of vector-field components
COORDS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _sym_unit(i: int, j: int) -> np.ndarray:
    E = np.zeros((3, 3))
    E[i, j] = E[j, i] = 1.0
    return E


def _unit(i: int, j: int) -> np.ndarray:
    E = np.zeros((3, 3))
    E[i, j] = 1.0
    return E


def _matmul(X, Y):
    """3x3 product working for floats or Jets stored in nested lists."""
    return [[sum(X[i][k] * Y[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


@dataclass(frozen=True)
class Generator:
    """Algebra element ``delta U = B + A^t U + U A - U C U``."""

    name: str
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def matrix_field(self, U):
        """``delta U`` as nested lists; ``U`` may hold floats or Jets."""
        At = self.A.T.tolist()
        A = self.A.tolist()
        UCU = _matmul(_matmul(U, self.C.tolist()), U)
        AtU = _matmul(At, U)
        UA = _matmul(U, A)
        return [[self.B[i, j] + AtU[i][j] + UA[i][j] - UCU[i][j] for j in range(3)] for i in range(3)]

    def field(self, U) -> list:
        """Components on ``(u11, u12, u13, u22, u23, u33)``."""
        M = self.matrix_field(U)
        return [M[i][j] for i, j in COORDS]

    def conformal_factor(self, U) -> float:
        return 2.0 * float(np.trace(self.A)) - 2.0 * float(np.trace(self.C @ np.asarray(U, dtype=float)))

    def __add__(self, other: "Generator") -> "Generator":
        return Generator(f"{self.name}+{other.name}", self.A + other.A, self.B + other.B, self.C + other.C)

    def scaled(self, k: float) -> "Generator":
        return Generator(f"{k}*{self.name}", k * self.A, k * self.B, k * self.C)


def generators() -> list[Generator]:
    """21 generators: 6 translations, 9 linear, 6 quadratic."""
    Z = np.zeros((3, 3))
    out = []
    for i, j in COORDS:
        out.append(Generator(f"X{i+1}{j+1}", Z, _sym_unit(i, j), Z))
    for i in range(3):
        for j in range(3):
            out.append(Generator(f"A{i+1}{j+1}", _unit(i, j), Z, Z))
    for i, j in COORDS:
        out.append(Generator(f"C{i+1}{j+1}", Z, Z, _sym_unit(i, j)))
    return out


def field_matrix(gens: Sequence[Generator], U) -> np.ndarray:
    """21 x 6 array of generator components at ``U``."""
    U = np.asarray(U, dtype=float).tolist()
    return np.array([[float(x) for x in g.field(U)] for g in gens])


def _field_jacobian(g: Generator, U: np.ndarray) -> np.ndarray:
    """6x6 Jacobian of the field at ``U`` (rows: components, cols: coordinates)."""
    jets = [Jet.variable(k, U[i, j], 6, 1) for k, (i, j) in enumerate(COORDS)]
    M = [[None] * 3 for _ in range(3)]
    for k, (i, j) in enumerate(COORDS):
        M[i][j] = M[j][i] = jets[k]
    comps = g.field(M)
    return np.array([c.block(1) if isinstance(c, Jet) else np.zeros(6) for c in comps])


def _vec_to_sym(v) -> np.ndarray:
    M = np.zeros((3, 3))
    for k, (i, j) in enumerate(COORDS):
        M[i, j] = M[j, i] = v[k]
    return M


def conformality_residual(g: Generator, U: np.ndarray, rng, n_vectors: int = 5) -> float:
    """Worst relative defect of ``L_X det dU = k det dU`` over random ``dU``."""
    J = _field_jacobian(g, U)
    k = g.conformal_factor(U)
    worst = 0.0
    for _ in range(n_vectors):
        v = rng.normal(size=6)
        V = _vec_to_sym(v)
        W = _vec_to_sym(J @ v)
        adj = np.linalg.det(V) * np.linalg.inv(V)
        lie = float(np.trace(adj @ W))
        target = k * float(np.linalg.det(V))
        scale = float(np.abs(adj).max() * np.abs(W).max() * 3 + abs(target) + 1e-300)
        worst = max(worst, abs(lie - target) / scale)
    return worst


def bracket_at(g1: Generator, g2: Generator, U: np.ndarray, with_scale: bool = False):
    """Components of the vector-field commutator ``[X1, X2]`` at ``U``."""
    x1 = field_matrix([g1], U)[0]
    x2 = field_matrix([g2], U)[0]
    t1 = _field_jacobian(g2, U) @ x1
    t2 = _field_jacobian(g1, U) @ x2
    if with_scale:
        return t1 - t2, np.abs(t1) + np.abs(t2)
    return t1 - t2


def closure_residual(gens: Sequence[Generator], points: Sequence[np.ndarray]) -> float:
    """Worst relative projection residual of all pairwise brackets onto the span."""
    basis = np.vstack([field_matrix(gens, U).T for U in points])  # (6 * P) x 21
    Q, _ = np.linalg.qr(basis)
    worst = 0.0
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            parts = [bracket_at(gens[a], gens[b], U, True) for U in points]
            v = np.concatenate([p[0] for p in parts])
            # brackets that vanish identically cancel only to roundoff
            n = np.linalg.norm(np.concatenate([p[1] for p in parts]))
            if n == 0.0:
                continue
            worst = max(worst, float(np.linalg.norm(v - Q @ (Q.T @ v)) / n))
    return worst


def span_rank(gens: Sequence[Generator], points: Sequence[np.ndarray]) -> int:
    basis = np.vstack([field_matrix(gens, U).T for U in points])
    sv = np.linalg.svd(basis, compute_uv=False)
    return int(np.sum(sv > RANK_TOL * sv[0]))


# reference generators in closed form, as functions of U
def named_generators() -> dict[str, callable]:
    def X11(U):
        return [1.0, 0, 0, 0, 0, 0]

    def J1(U):
        return [2 * U[0, 0], U[0, 1], U[0, 2], 0, 0, 0]

    def L12(U):
        return [2 * U[0, 1], U[1, 1], U[1, 2], 0, 0, 0]

    def H1(U):
        u11, u12, u13 = U[0, 0], U[0, 1], U[0, 2]
        return [u11 * u11, u11 * u12, u11 * u13, u12 * u12, u12 * u13, u13 * u13]

    def P1(U):
        u11, u12, u13, u22, u23, u33 = (U[i, j] for i, j in COORDS)
        return [2 * u12 * u13, u12 * u23 + u13 * u22, u12 * u33 + u13 * u23,
                2 * u22 * u23, u22 * u33 + u23 * u23, 2 * u23 * u33]

    return {"X11": X11, "J1": J1, "L12": L12, "H1": H1, "P1": P1}


def named_span_residuals(points: Sequence[np.ndarray]) -> dict[str, float]:
    gens = generators()
    basis = np.vstack([field_matrix(gens, U).T for U in points])
    out = {}
    for name, fn in named_generators().items():
        v = np.concatenate([np.asarray(fn(U), dtype=float) for U in points])
        coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
        out[name] = float(np.linalg.norm(basis @ coef - v) / np.linalg.norm(v))
    return out


# ---------------------------------------------------------------------------
# group elements


@dataclass(frozen=True)
class GroupElement:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @classmethod
    def from_matrix(cls, M) -> "GroupElement":
        M = np.asarray(M, dtype=float)
        return cls(M[:3, :3], M[:3, 3:], M[3:, :3], M[3:, 3:])

    @classmethod
    def identity(cls) -> "GroupElement":
        I, Z = np.eye(3), np.zeros((3, 3))
        return cls(I, Z, Z, I)

    @classmethod
    def translation(cls, B) -> "GroupElement":
        I, Z = np.eye(3), np.zeros((3, 3))
        return cls(I, np.asarray(B, dtype=float), Z, I)

    @classmethod
    def linear(cls, L) -> "GroupElement":
        L = np.asarray(L, dtype=float)
        Z = np.zeros((3, 3))
        return cls(L, Z, Z, np.linalg.inv(L).T)

    @classmethod
    def shear(cls, C) -> "GroupElement":
        I, Z = np.eye(3), np.zeros((3, 3))
        return cls(I, Z, np.asarray(C, dtype=float), I)

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement.from_matrix(self.matrix @ other.matrix)

    def inverse(self) -> "GroupElement":
        return GroupElement.from_matrix(np.linalg.inv(self.matrix))

    def invariant_residual(self) -> float:
        A, B, C, D = self.A, self.B, self.C, self.D
        return float(max(np.abs(A.T @ C - C.T @ A).max(), np.abs(B.T @ D - D.T @ B).max(),
                         np.abs(A.T @ D - C.T @ B - np.eye(3)).max()))

    def act(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        den = self.C @ U + self.D
        if abs(np.linalg.det(den)) < 1e-12 * max(1.0, np.abs(den).max() ** 3):
            raise ZeroDivisionError("C U + D is singular at this point")
        out = (self.A @ U + self.B) @ np.linalg.inv(den)
        return 0.5 * (out + out.T)


def random_group_element(rng, scale: float = 0.3) -> GroupElement:
    """Composition of a translation, a linear change and a shear."""
    rng = _as_rng(rng)

    def sym():
        M = rng.normal(scale=scale, size=(3, 3))
        return 0.5 * (M + M.T)

    L = np.eye(3) + rng.normal(scale=scale, size=(3, 3))
    return GroupElement.translation(sym()) @ GroupElement.linear(L) @ GroupElement.shear(sym())


def _mat_exprs(M: np.ndarray, Ut: list[list[Expr]], K: np.ndarray) -> list[list[Expr]]:
    """Entries of ``M Ut + K`` as expressions."""
    out = []
    for i in range(3):
        row = []
        for j in range(3):
            e: Expr = Num(float(K[i, j]))
            for k in range(3):
                if M[i, k] != 0.0:
                    e = add(e, mul(Num(float(M[i, k])), Ut[k][j]))
            row.append(e)
        out.append(row)
    return out


def apply_sp6(F: Expr, g: GroupElement) -> Expr:
    """The equation ``F o phi_g^-1`` in the transformed Hessian variables."""
    h = g.inverse()
    Ut = [[Var(HESSIAN_VARS[_flat(i, j)]) for j in range(3)] for i in range(3)]
    P = _mat_exprs(h.A, Ut, h.B)
    Qm = _mat_exprs(h.C, Ut, h.D)
    # adjugate / determinant of C Ut + D
    cof = [[sub(mul(Qm[(j + 1) % 3][(i + 1) % 3], Qm[(j + 2) % 3][(i + 2) % 3]),
                mul(Qm[(j + 1) % 3][(i + 2) % 3], Qm[(j + 2) % 3][(i + 1) % 3]))
            for j in range(3)] for i in range(3)]
    det = add(add(mul(Qm[0][0], cof[0][0]), mul(Qm[0][1], cof[1][0])), mul(Qm[0][2], cof[2][0]))
    mapping = {}
    for (i, j), name in zip(COORDS, HESSIAN_VARS):
        num: Expr = Num(0.0)
        for k in range(3):
            num = add(num, mul(P[i][k], cof[k][j]))
        mapping[name] = div(num, det)
    return F.substitute(mapping)


def _flat(i: int, j: int) -> int:
    return COORDS.index((min(i, j), max(i, j)))


# ---------------------------------------------------------------------------
# sampling and symmetry dimension


class SamplingError(RuntimeError):
    pass


def _grad(F: Expr):
    return [differentiate(F, v) for v in HESSIAN_VARS]


def project_to_hypersurface(F: Expr, U0: Mapping[str, float], grad=None,
                            max_iter: int = 60) -> dict[str, float]:
    """Newton steps along the gradient until ``F(U) = 0``."""
    grad = grad or _grad(F)
    U = dict(U0)
    for _ in range(max_iter):
        val = F.evaluate(U)
        g = np.array([gi.evaluate(U) for gi in grad], dtype=float)
        n2 = float(g @ g)
        if not math.isfinite(val) or n2 == 0.0 or not math.isfinite(n2):
            break
        if abs(val) < 1e-13 * (1.0 + max(abs(x) for x in U.values())):
            return U
        step = val / n2 * g
        norm = float(np.linalg.norm(step))
        if norm > 0.5:
            step *= 0.5 / norm
        for k, v in enumerate(HESSIAN_VARS):
            U[v] -= step[k]
    raise SamplingError("projection onto the hypersurface did not converge")


def sample_hypersurface_points(F: Expr, n: int, seed=None,
                               box: Mapping[str, Sequence[float]] | None = None) -> list[dict]:
    rng = _as_rng(seed)
    box = box or {}
    grad = _grad(F)
    out = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 50 * n:
            raise SamplingError("could not sample the hypersurface in the configured box")
        U0 = {v: float(rng.uniform(*box.get(v, (-1.0, 1.0)))) for v in HESSIAN_VARS}
        try:
            out.append(project_to_hypersurface(F, U0, grad))
        except (SamplingError, DomainError, ZeroDivisionError, OverflowError):
            continue
    return out


@dataclass(frozen=True)
class RankResult:
    rank: int
    stable: bool
    singular_values: np.ndarray


def numerical_rank(M: np.ndarray, tol: float = RANK_TOL) -> RankResult:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return RankResult(0, True, sv)
    r = int(np.sum(sv > tol * sv[0]))
    lo = int(np.sum(sv > 10 * tol * sv[0]))
    hi = int(np.sum(sv > 0.1 * tol * sv[0]))
    return RankResult(r, lo == r == hi, sv)


def symmetry_matrix(F: Expr, points: Sequence[Mapping[str, float]]) -> np.ndarray:
    grad = _grad(F)
    gens = generators()
    rows = []
    for U in points:
        g = np.array([gi.evaluate(U) for gi in grad], dtype=float)
        fields = field_matrix(gens, sym_from_names(U))
        row = fields @ g
        rows.append(row / np.linalg.norm(row))
    return np.array(rows)


def symmetry_dimension(F: Expr, n_samples: int = 60, seed=None, *,
                       box: Mapping[str, Sequence[float]] | None = None,
                       points: Sequence[Mapping[str, float]] | None = None,
                       return_details: bool = False):
    """Dimension of the subalgebra of the 21 generators tangent to ``F = 0``."""
    if points is None:
        points = sample_hypersurface_points(F, max(n_samples, 60), seed, box)
    res = numerical_rank(symmetry_matrix(F, points))
    r = 21 - res.rank
    return (r, res) if return_details else r


def transport_points(points: Sequence[Mapping[str, float]], g: GroupElement) -> list[dict]:
    return [names_from_sym(g.act(sym_from_names(U))) for U in points]


# ---------------------------------------------------------------------------
# prolongation to the 21-dimensional moduli chart

# jet-point coordinates follow x = (u11, u12, u13, u22, u23), u = u33; the
# evolutionary snapshot order (a, b, c, p, q) = (x1, x2, x4, x3, x5)
SNAPSHOT_FROM_X = (0, 1, 3, 2, 4)


@dataclass(frozen=True)
class JetPoint21:
    x: np.ndarray
    u: float
    u_i: np.ndarray
    u_ij: np.ndarray  # 15 second derivatives, graded-lex in x order

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(5))
        object.__setattr__(self, "u_i", np.asarray(self.u_i, dtype=float).reshape(5))
        object.__setattr__(self, "u_ij", np.asarray(self.u_ij, dtype=float).reshape(15))

    @classmethod
    def from_function(cls, f: Expr, x) -> "JetPoint21":
        """2-jet of ``u = f(x1..x5)`` where ``f`` is written in ``a..q`` names."""
        from .expr import eval_jet
        x = np.asarray(x, dtype=float)
        base = {v: x[SNAPSHOT_FROM_X[k]] for k, v in enumerate("abcpq")}
        jet = eval_jet(f, base, 2).permute(SNAPSHOT_FROM_X)
        return cls(x, jet.value, jet.block(1), jet.block(2))

    @classmethod
    def random(cls, rng) -> "JetPoint21":
        rng = _as_rng(rng)
        return cls(rng.normal(size=5), float(rng.normal()), rng.normal(size=5), rng.normal(size=15))

    def snapshot(self) -> Snapshot:
        jet = Jet(5, 2, np.concatenate([[self.u], self.u_i, self.u_ij]) / _weights(2))
        s = jet.permute(SNAPSHOT_FROM_X)  # x order -> snapshot order (an involution)
        return Snapshot(s.block(1), s.block(2))


def _weights(order: int) -> np.ndarray:
    from .jet import factorial_weight
    return np.array([factorial_weight(m) for m in multi_indices(5, order)], dtype=float)


def solution_jet(jp: JetPoint21, n_triples: int = 60, seed=None) -> Jet:
    """Order-3 jet of ``u(x)`` with thirds from the integrability conditions."""
    s = jp.snapshot()
    sol = solve_thirds(s, n_triples, seed)
    if sol.system_rank < 35:
        raise ArithmeticError(f"third-derivative solve is rank deficient ({sol.system_rank})")
    snap_jet = Jet(5, 3, np.concatenate([[jp.u], s.first, s.second, sol.thirds]) / _weights(3))
    return snap_jet.permute(SNAPSHOT_FROM_X)


def orbit_matrix(jp: JetPoint21, n_triples: int = 60, seed=None) -> np.ndarray:
    """Rows: ``(Q, D_i Q, D_i D_j Q)`` of each generator's characteristic."""
    u = solution_jet(jp, n_triples, seed)
    xs = [Jet.variable(k, jp.x[k], 5, 3) for k in range(5)]
    x1, x2, x3, x4, x5 = xs
    U = [[x1, x2, x3], [x2, x4, x5], [x3, x5, u]]
    du = [u.partial(k) for k in range(5)]
    rows = []
    for g in generators():
        comps = g.field(U)
        xi = [_as_jet(c, 5, 3).truncate(2) for c in comps[:5]]
        eta = _as_jet(comps[5], 5, 3).truncate(2)
        Q = eta
        for k in range(5):
            Q = Q - xi[k] * du[k]
        rows.append(np.concatenate([[Q.value], Q.block(1), Q.block(2)]))
    return np.array(rows)


def _as_jet(c, nvars: int, order: int) -> Jet:
    return c if isinstance(c, Jet) else Jet.constant(float(c), nvars, order)


def prolong_orbit_rank(jp: JetPoint21, n_triples: int = 60, seed=None,
                       return_details: bool = False):
    """Rank of the 21 prolonged generators on the moduli chart at ``jp``."""
    # no row scaling: generators that vanish on the orbit give roundoff rows
    res = numerical_rank(orbit_matrix(jp, n_triples, seed))
    return (res.rank, res) if return_details else res.rank
