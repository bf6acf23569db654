import numpy as np
import pytest

from hirota.expr import HESSIAN_VARS
from hirota.mongeampere import (
    HESS_ONE,
    HESS_TRACE,
    MACoeffs,
    coeffs_from_function,
    eliminate_minors,
    heavenly_travelling_wave,
    ma_expr,
    ma_value,
    quartic,
    random_coeffs,
    random_linear,
    reduced_on_slice,
    reduced_quartic,
    shift,
    slice_ratio,
)


def test_vector_roundtrip():
    c = random_coeffs(0)
    assert MACoeffs.from_vector(c.vector) == c
    with pytest.raises(ValueError):
        MACoeffs.from_vector(range(13))
    with pytest.raises(ValueError):
        MACoeffs(eps=float("nan"))


def test_expression_matches_value():
    rng = np.random.default_rng(1)
    c = random_coeffs(rng)
    e = ma_expr(c)
    for _ in range(5):
        M = rng.normal(size=(3, 3))
        U = M + M.T
        env = dict(zip(HESSIAN_VARS, [U[0, 0], U[0, 1], U[0, 2], U[1, 1], U[1, 2], U[2, 2]]))
        assert e.evaluate(env) == pytest.approx(ma_value(c, U), rel=1e-12, abs=1e-12)


def test_coefficients_recovered():
    c = random_coeffs(2)
    assert np.allclose(coeffs_from_function(lambda U: ma_value(c, U)).vector, c.vector, atol=1e-10)


def test_linear_equations_are_linearizable():
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert quartic(random_linear(rng)) == 0.0


def test_heavenly_reduction():
    rng = np.random.default_rng(4)
    for a, g in rng.normal(size=(20, 2)):
        c, q = heavenly_travelling_wave(a, g)
        assert q == 0.0 and not c.is_degenerate
    assert heavenly_travelling_wave(0.0, 0.0)[0].is_degenerate


def test_hessian_equations():
    assert reduced_quartic(HESS_ONE) == 1.0
    assert reduced_quartic(HESS_TRACE) == -4.0
    assert quartic(HESS_ONE) != 0.0 and quartic(HESS_TRACE) != 0.0


def test_homogeneity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        c, t = random_coeffs(rng), rng.uniform(0.3, 3.0)
        assert quartic(c * t) == pytest.approx(t ** 4 * quartic(c), rel=1e-10)


def test_slice_normalisation():
    mean, spread = slice_ratio(30, 6)
    assert mean == pytest.approx(1.0, abs=1e-10) and spread < 1e-10


def test_quartic_invariant_under_shifts():
    rng = np.random.default_rng(7)
    c = random_coeffs(rng)
    S = rng.normal(size=(3, 3))
    assert quartic(shift(c, S)) == pytest.approx(quartic(c), rel=1e-8)


def test_eliminate_minors():
    c = random_coeffs(8)
    red, _ = eliminate_minors(c)
    assert np.abs(red.vector[1:7]).max() < 1e-10
    assert reduced_on_slice(red) == pytest.approx(quartic(c), rel=1e-8)
    with pytest.raises(ValueError):
        eliminate_minors(MACoeffs(s=(1, 1, 1)))
