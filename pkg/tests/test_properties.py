"""Property-based checks of the algebraic invariants with Hypothesis."""

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from hirota.dispersion import (
    ConicPoint,
    Snapshot,
    conic_residual,
    d_scale,
    d_value,
    delta,
    lam_roots,
    u_identity_residual,
)
from hirota.expr import EVOLUTIONARY_VARS, eval_jet, parse
from hirota.jet import Jet
from hirota.mongeampere import MACoeffs, quartic, shift
from hirota.symplectic import generators, random_group_element

finite = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=0.2, max_value=2.0)
vec5 = st.lists(finite, min_size=5, max_size=5)

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def expressions(draw, depth=3):
    """Random expressions in a, b, c that are defined everywhere."""
    if depth == 0 or draw(st.booleans()):
        return draw(st.sampled_from(["a", "b", "c", "0.5", "2", "1.25"]))
    kind = draw(st.sampled_from(["+", "-", "*", "exp", "sin", "ln", "neg", "sq"]))
    x = draw(expressions(depth=depth - 1))
    if kind in "+-*":
        y = draw(expressions(depth=depth - 1))
        return f"({x} {kind} {y})"
    if kind == "ln":
        return f"ln(1 + ({x})^2)"
    if kind == "neg":
        return f"-({x})"
    if kind == "sq":
        return f"({x})^2"
    return f"{kind}(0.3*({x}))"


@SETTINGS
@given(expressions(), st.lists(positive, min_size=3, max_size=3))
def test_render_parse_roundtrip(text, vals):
    env = dict(zip("abc", vals))
    e = parse(text)
    assert parse(e.render()).evaluate(env) == pytest.approx(e.evaluate(env), rel=1e-12, abs=1e-12)


@SETTINGS
@given(expressions(), st.lists(positive, min_size=3, max_size=3), st.sampled_from("abc"))
def test_jet_first_derivative_matches_symbolic(text, vals, var):
    e = parse(text)
    base = dict(zip(EVOLUTIONARY_VARS, vals + [0.0, 0.0]))
    jet = eval_jet(e, base, 2)
    k = EVOLUTIONARY_VARS.index(var)
    assert jet.derivative((k,)) == pytest.approx(e.diff(var).evaluate(base), rel=1e-10, abs=1e-10)


@SETTINGS
@given(st.lists(finite, min_size=2, max_size=2), st.lists(finite, min_size=3, max_size=3))
def test_jet_ring_laws(point, coefs):
    x, y = (Jet.variable(i, v, 2, 3) for i, v in enumerate(point))
    p, q, r = (x * c0 + y + c1 for c0, c1 in zip(coefs, coefs[1:] + coefs[:1]))
    assert np.allclose(((p * q) * r).coeffs, (p * (q * r)).coeffs)
    assert np.allclose((p * (q + r)).coeffs, (p * q + p * r).coeffs)


@SETTINGS
@given(vec5, st.floats(min_value=-1.5, max_value=1.5))
def test_lam_roots_satisfy_conic(first, mu):
    s = Snapshot(first, np.zeros(15))
    for lam in lam_roots(s, mu):
        assert abs(conic_residual(s, lam, mu)) <= 1e-9 * (1 + lam * lam + sum(abs(f) for f in first) * (1 + mu * mu))


@SETTINGS
@given(vec5, st.lists(finite, min_size=15, max_size=15),
       st.floats(min_value=-1.5, max_value=1.5), st.floats(min_value=-1.5, max_value=1.5))
def test_u_identity_property(first, second, m1, m2):
    s = Snapshot(first, second)
    assume(abs(delta(s)) > 0.1 and abs(m1 - m2) > 0.1)
    r1, r2 = lam_roots(s, m1), lam_roots(s, m2)
    assume(r1 and r2)
    P, Q = ConicPoint(r1[0], m1), ConicPoint(r2[0], m2)
    assume(abs(d_value(s, P, Q)) > 1e-3 * d_scale(s, P, Q))
    assert u_identity_residual(s, P, Q) < 1e-8


@SETTINGS
@given(st.lists(finite, min_size=14, max_size=14), st.floats(min_value=0.25, max_value=4.0))
def test_quartic_homogeneous(v, t):
    c = MACoeffs.from_vector(v)
    q = quartic(c)
    assert quartic(c * t) == pytest.approx(t ** 4 * q, rel=1e-10, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.lists(finite, min_size=14, max_size=14), st.lists(finite, min_size=6, max_size=6))
def test_quartic_shift_invariant(v, s):
    c = MACoeffs.from_vector(v)
    S = np.array([[s[0], s[1], s[2]], [s[1], s[3], s[4]], [s[2], s[4], s[5]]])
    scale = max(1.0, np.abs(shift(c, S).vector).max()) ** 4
    assert abs(quartic(shift(c, S)) - quartic(c)) < 1e-8 * scale


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_group_elements_preserve_symplectic_form(seed):
    g = random_group_element(np.random.default_rng(seed))
    assert g.invariant_residual() < 1e-10
    assert np.allclose((g @ g.inverse()).matrix, np.eye(6), atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=20), st.lists(finite, min_size=6, max_size=6))
def test_generator_fields_are_symmetric_matrices(index, u):
    U = np.array([[u[0], u[1], u[2]], [u[1], u[3], u[4]], [u[2], u[4], u[5]]])
    M = np.asarray(generators()[index].matrix_field(U), dtype=float)
    assert np.allclose(M, M.T)
