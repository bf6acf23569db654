"""Gibbons-Tsarev compatibility test for equations ``u_33 = f(a, b, c, p, q)``.

Along an n-component reduction every derivative ``f_X`` of ``f`` moves as
``d_k f_X = (f_Xa + mu_k f_Xb + mu_k^2 f_Xc + lam_k f_Xp + lam_k mu_k f_Xq) d_k a``
and the characteristic speeds move as ``d_k lam_i = (lam_i - lam_k) B_ik d_k a``.
Requiring ``d_k B_ij = B_ij B_kj + B_ij B_ik - B_kj B_ik`` (with ``d_k a = 1``)
for every triple of conic points gives the integrability conditions.  The
residual is affine in the 35 third derivatives of ``f``: the thirds only
enter through ``d3f(v_i, v_j, v_k) / D_ij``, which is fully symmetric in the
three points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dispersion import (
    ComplexDispersionError,
    ConicPoint,
    DegenerateConicError,
    DegeneratePairError,
    Snapshot,
    _as_rng,
    check_nondegenerate,
    conic_sample,
    d_value,
    n_value,
    pair_data,
    second_weights,
    third_weights,
)
from .expr import (
    EVOLUTIONARY_VARS,
    HESSIAN_VARS,
    DomainError,
    Expr,
    Num,
    Var,
    add,
    differentiate,
    eval_jet,
    mul,
)
from .jet import Jet

INTEGRABLE_TOL = 1e-7
NON_INTEGRABLE_TOL = 1e-3
# pairs with |D| below this fraction of its term scale are resampled
PAIR_FLOOR = 1e-4

# (u11, u12, u22, u13, u23) carry the evolutionary names (a, b, c, p, q)
EVOLUTIONARY_SLOTS = ("u11", "u12", "u22", "u13", "u23")

DEFAULT_L = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 2.0, 1.0))

_DV_DLAM = lambda P: np.array([0.0, 0.0, 0.0, 1.0, P.mu])  # noqa: E731
_DV_DMU = lambda P: np.array([0.0, 1.0, 2.0 * P.mu, 0.0, P.lam])  # noqa: E731


@dataclass(frozen=True)
class TripleResidual:
    value: float
    scale: float
    relative: float


@dataclass(frozen=True)
class ThirdSolve:
    thirds: np.ndarray
    system_rank: int
    lsq_residual: float
    condition_estimate: float
    rows: int = 0


@dataclass
class Verdict:
    status: str
    max_relative_residual: float
    points_tested: int
    diagnostics: list = field(default_factory=list)
    max_thirds_mismatch: float = float("nan")
    reason: str = ""


# ---------------------------------------------------------------------------
# the residual


def _gt_parts(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint, Pk: ConicPoint):
    """Residual without third derivatives, the thirds row and the term scale."""
    fa, fb, fc, fp, fq = s.first
    H = s.hessian
    vi, vj, vk = Pi.vector, Pj.vector, Pk.vector
    pij = pair_data(s, Pi, Pj)
    pik = pair_data(s, Pi, Pk)
    pjk = pair_data(s, Pj, Pk)
    N, D, Bij = pij.N, pij.D, pij.B
    Bik, Bkj = pik.B, pjk.B

    dlam_i, dmu_i = (Pi.lam - Pk.lam) * Bik, (Pi.mu - Pk.mu) * Bik
    dlam_j, dmu_j = (Pj.lam - Pk.lam) * Bkj, (Pj.mu - Pk.mu) * Bkj
    dvi = dlam_i * _DV_DLAM(Pi) + dmu_i * _DV_DMU(Pi)
    dvj = dlam_j * _DV_DLAM(Pj) + dmu_j * _DV_DMU(Pj)

    wi, wj = second_weights(dvi, vj), second_weights(vi, dvj)
    dN_second = (wi @ s.second + wj @ s.second).item()
    dN_abs = float((np.abs(wi) + np.abs(wj)) @ np.abs(s.second))

    w = np.array([2.0, Pi.mu + Pj.mu, 2.0 * Pi.mu * Pj.mu, Pi.lam + Pj.lam,
                  Pi.lam * Pj.mu + Pj.lam * Pi.mu])
    Hvk = H @ vk
    pieces = [
        w * Hvk,
        (-2.0 * Pj.lam + fp + fq * Pj.mu) * dlam_i, (fb + 2.0 * fc * Pj.mu + fq * Pj.lam) * dmu_i,
        (-2.0 * Pi.lam + fp + fq * Pi.mu) * dlam_j, (fb + 2.0 * fc * Pi.mu + fq * Pi.lam) * dmu_j,
    ]
    dD = np.sum(pieces[0]).item() + sum(pieces[1:])
    dD_abs = float(np.abs(w) @ (np.abs(H) @ np.abs(vk))) + sum(abs(x) for x in pieces[1:])

    t1, t2, t3 = Bij * Bkj, Bij * Bik, Bkj * Bik
    r0 = dN_second / D - N * dD / (D * D) - (t1 + t2 - t3)
    row = third_weights(vi, vj, vk) / D
    # magnitudes before cancellation, so the relative residual is honest
    terms = [dN_abs / abs(D), abs(N) * dD_abs / abs(D) ** 2, abs(t1), abs(t2), abs(t3)]
    return r0, row, terms


def gt_residual(s: Snapshot, Pi: ConicPoint, Pj: ConicPoint, Pk: ConicPoint) -> TripleResidual:
    """Residual of the Gibbons-Tsarev consistency condition for one triple."""
    if s.third is None:
        raise ValueError("gt_residual needs a snapshot with third derivatives")
    r0, row, terms = _gt_parts(s, Pi, Pj, Pk)
    third_term = (row @ s.third).item()
    value = r0 + third_term
    scale = max(terms + [float(np.abs(row) @ np.abs(s.third))])
    rel = abs(value) / scale if scale > 0.0 else 0.0
    return TripleResidual(value, scale, rel)


def sample_triples(s: Snapshot, count: int, seed=None, pair_floor: float = PAIR_FLOOR,
                   complex_ok: bool = False) -> list[tuple[ConicPoint, ConicPoint, ConicPoint]]:
    """``count`` triples of conic points whose pairs are all well conditioned."""
    rng = _as_rng(seed)
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 50 * count + 100:
            raise ComplexDispersionError("could not sample well-conditioned conic triples")
        try:
            tri = conic_sample(s, 3, rng, complex_ok=complex_ok)
            for a, b in ((0, 1), (0, 2), (1, 2)):
                pair_data(s, tri[a], tri[b], floor=pair_floor)
        except (DegeneratePairError, ComplexDispersionError):
            continue
        out.append(tuple(tri))
    return out


def conic_branch(s: Snapshot, seed=None, allow_complex: bool = True) -> bool:
    """True when sampling must fall back to complex ``lam`` (no real points)."""
    try:
        sample_triples(s, 12, _as_rng(seed))
        return False
    except ComplexDispersionError:
        if not allow_complex:
            raise
        return True


COND_FALLBACK = 1e4


def solve_thirds(s: Snapshot, n_triples: int = 60, seed=None,
                 complex_ok: bool | None = None) -> ThirdSolve:
    """Least-squares solve of the 35 third derivatives from sampled triples.

    Each ordered choice of the distinguished index gives one affine equation
    whose thirds part is ``d3f(v_i, v_j, v_k)``; rows are normalised to unit
    length.  ``lsq_residual`` is the worst row residual divided by the
    magnitude of the terms that produced that row's right-hand side.
    """
    if n_triples < 12:
        raise ValueError("at least 12 triples are needed for 35 unknowns")
    check_nondegenerate(s)
    rng = _as_rng(seed)
    if complex_ok is None:
        sol = solve_thirds(s, n_triples, rng, conic_branch(s, rng))
        if sol.system_rank < 35 or sol.condition_estimate > COND_FALLBACK:
            # a narrow real window leaves the system ill conditioned; the
            # complex branch over the full mu window is generic
            alt = solve_thirds(s, n_triples, rng, True)
            if (alt.system_rank, -alt.condition_estimate) > (sol.system_rank, -sol.condition_estimate):
                return alt
        return sol
    rows, rhs, scales = [], [], []
    for Pi, Pj, Pk in sample_triples(s, n_triples, rng, complex_ok=complex_ok):
        for a, b, c in ((Pi, Pj, Pk), (Pj, Pk, Pi), (Pk, Pi, Pj)):
            r0, row, terms = _gt_parts(s, a, b, c)
            # multiply through by D_ab so the row is the symmetric d3f weights
            D = d_value(s, a, b)
            full = row * D
            norm = np.linalg.norm(full)
            rows.append(full / norm)
            rhs.append(-r0 * D / norm)
            scales.append(max(terms) * abs(D) / norm)
    A = np.array(rows)
    y = np.array(rhs)
    sc = np.array(scales)
    if np.iscomplexobj(A) or np.iscomplexobj(y):
        # real unknowns: stack real and imaginary parts
        A = np.vstack([A.real, A.imag])
        y = np.concatenate([np.real(y), np.imag(y)])
        sc = np.concatenate([sc, sc])
    x, _, _, sv = np.linalg.lstsq(A, y, rcond=None)
    rank = int(np.sum(sv > 1e-8 * sv[0]))
    resid = float(np.max(np.abs(A @ x - y) / np.maximum(sc, 1e-300)))
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    return ThirdSolve(x, rank, resid, cond, len(rows))


def thirds_mismatch(solved: np.ndarray, s: Snapshot) -> float:
    scale = max(np.max(np.abs(s.third)), np.max(np.abs(s.second)), 1.0)
    return float(np.max(np.abs(solved - s.third)) / scale)


def classify(max_rel: float, tol_int: float = INTEGRABLE_TOL,
             tol_non: float = NON_INTEGRABLE_TOL) -> str:
    if max_rel < tol_int:
        return "integrable"
    if max_rel > tol_non:
        return "not_integrable"
    return "inconclusive"


def snapshot_report(s: Snapshot, n_triples: int = 100, seed=None, solve: bool = True,
                    allow_complex: bool = True) -> dict:
    """Residual statistics and thirds comparison for one exact snapshot."""
    rng = _as_rng(seed)
    check_nondegenerate(s)
    complex_ok = conic_branch(s, rng, allow_complex)
    worst, signed = 0.0, 0.0
    for tri in sample_triples(s, n_triples, rng, complex_ok=complex_ok):
        for a, b, c in (tri, (tri[1], tri[2], tri[0]), (tri[2], tri[0], tri[1])):
            r = gt_residual(s, a, b, c)
            if r.relative > worst:
                worst, signed = r.relative, r.value
    rec = {"max_relative_residual": worst, "worst_value": signed,
           "complex_conic": complex_ok}
    if solve:
        sol = solve_thirds(s, max(60, n_triples // 2), rng)
        rec.update(rank=sol.system_rank, lsq_residual=sol.lsq_residual,
                   condition=sol.condition_estimate,
                   thirds_mismatch=thirds_mismatch(sol.thirds, s))
    return rec


# ---------------------------------------------------------------------------
# base points


def sample_point(box: Mapping[str, Sequence[float]], rng: np.random.Generator,
                 names: Sequence[str]) -> dict[str, float]:
    out = {}
    for v in names:
        lo, hi = box.get(v, (-1.0, 1.0))
        out[v] = float(rng.uniform(lo, hi))
    return out


def _verdict_from(records: list, attempts_failed: list, n_points: int,
                  tol_int: float, tol_non: float) -> Verdict:
    if not records:
        reason = attempts_failed[-1] if attempts_failed else "no base points"
        return Verdict("unsupported", math.nan, 0, [], reason=str(reason))
    worst = max(r["max_relative_residual"] for r in records)
    mism = [r["thirds_mismatch"] for r in records if "thirds_mismatch" in r]
    status = classify(worst, tol_int, tol_non)
    if len(records) < n_points and status == "integrable":
        status = "inconclusive"
    return Verdict(status, worst, len(records), records,
                   max(mism) if mism else math.nan)


def test_integrability(f: Expr, n_points: int = 5, seed=None, *, n_triples: int = 100,
                       box: Mapping[str, Sequence[float]] | None = None,
                       tol_int: float = INTEGRABLE_TOL, tol_non: float = NON_INTEGRABLE_TOL,
                       solve: bool = True) -> Verdict:
    """Pointwise numeric integrability verdict for ``u_33 = f(a, b, c, p, q)``."""
    rng = _as_rng(seed)
    box = box or {}
    records, failures = [], []
    for _ in range(20 * n_points):
        if len(records) >= n_points:
            break
        base = sample_point(box, rng, EVOLUTIONARY_VARS)
        try:
            s = Snapshot.from_expr(f, base)
            rec = snapshot_report(s, n_triples, rng, solve)
        except (DomainError, DegenerateConicError, ComplexDispersionError,
                DegeneratePairError, ZeroDivisionError) as exc:
            failures.append(f"{type(exc).__name__}: {exc}")
            continue
        rec["base"] = base
        records.append(rec)
    return _verdict_from(records, failures, n_points, tol_int, tol_non)


# keep pytest from collecting the public API function as a test
test_integrability.__test__ = False


# ---------------------------------------------------------------------------
# implicit equations F(u11, ..., u33) = 0


class ImplicitFunctionError(ArithmeticError):
    pass


def _scale(values) -> float:
    return 1.0 + max(abs(float(v)) for v in values)


def solve_coordinate(F: Expr, point: Mapping[str, float], index: str = "u33",
                     guess: float | None = None, tol: float = 1e-13,
                     max_iter: int = 60) -> float:
    """Solve ``F = 0`` for one Hessian coordinate with the others fixed."""
    dF = differentiate(F, index)
    env = dict(point)
    guesses = [guess] if guess is not None else []
    guesses += [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 0.1, 3.0, -3.0]
    for x in guesses:
        try:
            for _ in range(max_iter):
                env[index] = x
                val = F.evaluate(env)
                der = dF.evaluate(env)
                if der == 0.0 or not math.isfinite(val) or not math.isfinite(der):
                    break
                step = val / der
                # damped Newton keeps transcendental equations in range
                if abs(step) > 1.0:
                    step = math.copysign(1.0, step)
                x -= step
                if abs(step) < tol * (1.0 + abs(x)):
                    env[index] = x
                    if abs(F.evaluate(env)) < 1e-10 * _scale(env.values()):
                        return x
                    break
        except (DomainError, OverflowError, ZeroDivisionError):
            continue
    raise ImplicitFunctionError(f"could not solve for {index} at {dict(point)}")


def implicit_jet3(F: Expr, base: Mapping[str, float], solved: str = "u33",
                  order: int = 3) -> Jet:
    """Order-3 jet of the solved Hessian coordinate in the other five.

    The free coordinates are ordered as ``(u11, u12, u22, u13, u23)`` when
    ``u33`` is solved (the evolutionary ``a, b, c, p, q`` order); otherwise
    the remaining Hessian names keep their natural order.
    """
    free = EVOLUTIONARY_SLOTS if solved == "u33" else tuple(v for v in HESSIAN_VARS if v != solved)
    scale = _scale(base[v] for v in HESSIAN_VARS)
    env = {v: float(base[v]) for v in HESSIAN_VARS}
    F0 = F.evaluate(env)
    if abs(F0) > 1e-10 * scale:
        raise ImplicitFunctionError(f"base point not on the hypersurface (F={F0:.3e})")
    Fy = differentiate(F, solved).evaluate(env)
    if abs(Fy) <= 1e-6 * scale:
        raise ImplicitFunctionError(f"dF/d{solved} vanishes at the base point")
    jets = {v: Jet.variable(i, env[v], 5, order) for i, v in enumerate(free)}
    y = Jet.constant(env[solved], 5, order)
    for _ in range(order + 2):
        jets[solved] = y
        r = F.evaluate(jets)
        y = y - r / Fy
    jets[solved] = y
    r = F.evaluate(jets)
    if not np.all(np.isfinite(y.coeffs)):
        raise DomainError("non-finite implicit jet", F)
    if np.max(np.abs(r.coeffs)) > 1e-9 * max(scale, float(np.max(np.abs(y.coeffs)))):
        raise ImplicitFunctionError("implicit jet did not converge")
    return y


def sample_hypersurface(F: Expr, box: Mapping[str, Sequence[float]], rng,
                        solved: str = "u33") -> dict[str, float]:
    free = [v for v in HESSIAN_VARS if v != solved]
    pt = sample_point(box, rng, free)
    lo, hi = box.get(solved, (-1.0, 1.0))
    pt[solved] = solve_coordinate(F, pt, solved, guess=0.5 * (lo + hi))
    return pt


def test_integrability_implicit(F: Expr, n_points: int = 5, seed=None, *,
                                n_triples: int = 100,
                                box: Mapping[str, Sequence[float]] | None = None,
                                tol_int: float = INTEGRABLE_TOL,
                                tol_non: float = NON_INTEGRABLE_TOL,
                                solve: bool = True,
                                bases: Sequence[Mapping[str, float]] | None = None) -> Verdict:
    """As :func:`test_integrability` for ``F(U) = 0`` solved locally for ``u33``.

    ``bases`` replaces box sampling with given points on the hypersurface.
    """
    rng = _as_rng(seed)
    box = box or {}
    records, failures = [], []
    given = iter(bases) if bases is not None else None
    for _ in range(30 * n_points):
        if len(records) >= n_points:
            break
        try:
            if given is None:
                base = sample_hypersurface(F, box, rng)
            else:
                base = next(given, None)
                if base is None:
                    break
                base = {v: float(base[v]) for v in HESSIAN_VARS}
            s = Snapshot.from_jet(implicit_jet3(F, base))
            rec = snapshot_report(s, n_triples, rng, solve)
        except (DomainError, DegenerateConicError, ComplexDispersionError,
                DegeneratePairError, ImplicitFunctionError, ZeroDivisionError) as exc:
            failures.append(f"{type(exc).__name__}: {exc}")
            continue
        rec["base"] = base
        records.append(rec)
    return _verdict_from(records, failures, n_points, tol_int, tol_non)


test_integrability_implicit.__test__ = False


def evolutionary_to_implicit(f: Expr) -> Expr:
    """``u33 - f(u11, u12, u22, u13, u23)`` as an expression in Hessian names."""
    mapping = {e: Var(u) for e, u in zip(EVOLUTIONARY_VARS, EVOLUTIONARY_SLOTS)}
    return Var("u33") - f.substitute(mapping)


def hessian_matrix_exprs(names=HESSIAN_VARS) -> list[list[Expr]]:
    u11, u12, u13, u22, u23, u33 = (Var(n) for n in names)
    return [[u11, u12, u13], [u12, u22, u23], [u13, u23, u33]]


def _linear_combo(coeffs: Sequence[tuple[float, Expr]]) -> Expr:
    out: Expr = Num(0.0)
    for c, e in coeffs:
        if c != 0.0:
            out = add(out, mul(Num(float(c)), e))
    return out


def change_variables(F: Expr, L) -> Expr:
    """``F~(U~) = F(L^t U~ L)``: the equation in coordinates ``x~ = L x``."""
    L = np.asarray(L, dtype=float)
    if L.shape != (3, 3) or abs(np.linalg.det(L)) <= 1e-8:
        raise ValueError("L must be an invertible 3x3 matrix")
    Ut = hessian_matrix_exprs()
    mapping = {}
    for (i, j), name in zip(((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)), HESSIAN_VARS):
        terms = [(L[k, i] * L[l, j], Ut[k][l]) for k in range(3) for l in range(3)]
        # merge symmetric duplicates so the tree stays small
        merged: dict[str, float] = {}
        for c, e in terms:
            merged[e.name] = merged.get(e.name, 0.0) + c
        mapping[name] = _linear_combo([(c, Var(n)) for n, c in merged.items()])
    return F.substitute(mapping)


def transform_point(U: Mapping[str, float], L) -> dict[str, float]:
    """Hessian of the same solution in the ``x~ = L x`` coordinates."""
    L = np.asarray(L, dtype=float)
    M = sym_from_names(U)
    Li = np.linalg.inv(L)
    return names_from_sym(Li.T @ M @ Li)


def sym_from_names(U: Mapping[str, float]) -> np.ndarray:
    return np.array([[U["u11"], U["u12"], U["u13"]],
                     [U["u12"], U["u22"], U["u23"]],
                     [U["u13"], U["u23"], U["u33"]]], dtype=float)


def names_from_sym(M) -> dict[str, float]:
    M = np.asarray(M, dtype=float)
    return {"u11": M[0, 0], "u12": M[0, 1], "u13": M[0, 2],
            "u22": M[1, 1], "u23": M[1, 2], "u33": M[2, 2]}


# ---------------------------------------------------------------------------
# closed-form condition suites


SUITE_VARS = {
    "s31": frozenset("ac"),
    "s32": frozenset("abc"),
    "s33": frozenset("pq"),
    "s34": frozenset("abp"),
}


def _suite_s31(d):
    fa, fc = d("a"), d("c")
    faa, fac, fcc = d("aa"), d("ac"), d("cc")
    return [
        ("f_aaa", d("aaa"), faa * (fac / fc + faa / fa)),
        ("f_aac", d("aac"), faa * (fcc / fc + fac / fa)),
        # mirror image of f_aac under a <-> c
        ("f_acc", d("acc"), fcc * (fac / fc + faa / fa)),
        ("f_ccc", d("ccc"), fcc * (fcc / fc + fac / fa)),
        ("f_aa f_cc", faa * fcc, fac * fac),
    ]


def _suite_s32(d):
    fa, fb, fc = d("a"), d("b"), d("c")
    faa, fab, fac, fbb, fbc, fcc = d("aa"), d("ab"), d("ac"), d("bb"), d("bc"), d("cc")
    den = fb * fb - 4.0 * fa * fc
    ka = (fb * fab - 2 * fc * faa - 2 * fa * fac) / den
    kb = (fb * fbb - 2 * fc * fab - 2 * fa * fbc) / den
    kc = (fb * fbc - 2 * fc * fac - 2 * fa * fcc) / den
    return [
        ("f_aa f_bb", faa * fbb, fab * fab),
        ("f_aa f_cc", faa * fcc, fac * fac),
        ("f_bb f_cc", fbb * fcc, fbc * fbc),
        ("f_aa f_bc", faa * fbc, fab * fac),
        ("f_ab f_cc", fab * fcc, fac * fbc),
        ("f_ab f_bc", fab * fbc, fac * fbb),
        ("f_aaa", d("aaa"), 2 * faa * ka),
        ("f_aab", d("aab"), 2 * fab * ka),
        ("f_aac", d("aac"), 2 * fac * ka),
        ("f_abb", d("abb"), 2 * fab * kb),
        ("f_acc", d("acc"), 2 * fac * kc),
        ("f_abc", d("abc"), 2 * fab * kc),
        ("f_bbb", d("bbb"), 2 * fbb * kb),
        ("f_bbc", d("bbc"), 2 * fbc * kb),
        ("f_bcc", d("bcc"), 2 * fbc * kc),
        ("f_ccc", d("ccc"), 2 * fcc * kc),
    ]


def _suite_s33(d):
    fp, fq = d("p"), d("q")
    fpp, fpq, fqq = d("pp"), d("pq"), d("qq")
    return [
        ("f_ppp", d("ppp"), fpp * (fpq / fq + fpp / fp)),
        ("f_ppq", d("ppq"), fpp * (fqq / fq + fpq / fp)),
        ("f_pqq", d("pqq"), fqq * (fpq / fq + fpp / fp)),
        ("f_qqq", d("qqq"), fqq * (fqq / fq + fpq / fp)),
    ]


def _suite_s34(d):
    fa, fb, fp = d("a"), d("b"), d("p")
    faa, fab, fap, fbb, fbp, fpp = d("aa"), d("ab"), d("ap"), d("bb"), d("bp"), d("pp")
    k = 2.0 / (fb * fb)
    return [
        ("f_bbb", d("bbb"), 2 * fbb ** 2 / fb),
        ("f_abb", d("abb"), 2 * fab * fbb / fb),
        ("f_pbb", d("bbp"), 2 * fbp * fbb / fb),
        ("f_aab", d("aab"), 2 * fab ** 2 / fb),
        ("f_apb", d("abp"), 2 * fab * fbp / fb),
        ("f_ppb", d("bpp"), 2 * fbp ** 2 / fb),
        ("f_ppp", d("ppp"), k * (fp * fbp ** 2 + fbp * (fb * fpp + 2 * fab) - fbb * (fp * fpp + 2 * fap))),
        ("f_app", d("app"), k * (fa * fbp ** 2 + fab * (fb * fpp + fab) - fbb * (fa * fpp + faa))),
        ("f_aap", d("aap"), k * (fbb * (fp * faa - 2 * fa * fap) - fab * (fp * fab - 2 * fb * fap)
                                 - fbp * (fb * faa - 2 * fa * fab))),
        ("f_aaa", d("aaa"), k * ((fa + fp ** 2) * fab ** 2 + fa ** 2 * fbp ** 2
                                 + fb ** 2 * (fap ** 2 - faa * fpp) - fpp * fbb * fa ** 2
                                 + fab * fb * (faa + 2 * (fa * fpp - fp * fap))
                                 + 2 * fbp * (fp * (fb * faa - fa * fab) - fa * fb * fap)
                                 - fbb * ((fa + fp ** 2) * faa - 2 * fa * fp * fap))),
    ]


_SUITES = {"s31": _suite_s31, "s32": _suite_s32, "s33": _suite_s33, "s34": _suite_s34}


def applicable_suites(f: Expr) -> list[str]:
    used = f.variables()
    return [name for name, allowed in SUITE_VARS.items() if used <= allowed]


def condition_suite(f: Expr, suite: str, base: Mapping[str, float]) -> list[tuple[str, float]]:
    """Named relative residuals (lhs - rhs) of a closed-form condition system."""
    if suite not in _SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    extra = f.variables() - SUITE_VARS[suite]
    if extra:
        raise ValueError(f"suite {suite} does not allow variables {sorted(extra)}")
    point = {v: float(base.get(v, 0.0)) for v in EVOLUTIONARY_VARS}
    jet = eval_jet(f, point, 3, EVOLUTIONARY_VARS)
    pos = {v: i for i, v in enumerate(EVOLUTIONARY_VARS)}

    def d(name: str) -> float:
        return jet.derivative(tuple(pos[ch] for ch in name))

    out = []
    with np.errstate(all="raise"):
        try:
            rows = _SUITES[suite](d)
        except (ZeroDivisionError, FloatingPointError) as exc:
            raise DomainError(f"suite {suite} denominator vanishes at {point}: {exc}") from None
    for name, lhs, rhs in rows:
        scale = max(abs(lhs), abs(rhs))
        out.append((name, 0.0 if scale < 1e-14 else abs(lhs - rhs) / scale))
    return out
