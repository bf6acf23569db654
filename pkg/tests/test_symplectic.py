import numpy as np
import pytest

from hirota.expr import HESSIAN_VARS, parse
from hirota.integrability import names_from_sym, sym_from_names
from hirota.symplectic import (
    GroupElement,
    JetPoint21,
    apply_sp6,
    closure_residual,
    conformality_residual,
    field_matrix,
    generators,
    numerical_rank,
    named_span_residuals,
    prolong_orbit_rank,
    random_group_element,
    sample_hypersurface_points,
    span_rank,
    symmetry_dimension,
    transport_points,
)


def sym(rng):
    M = rng.normal(size=(3, 3))
    return M + M.T


@pytest.fixture(scope="module")
def points():
    rng = np.random.default_rng(0)
    return [sym(rng) for _ in range(5)]


def test_generator_count_and_span(points):
    gens = generators()
    assert len(gens) == 21
    assert field_matrix(gens, points[0]).shape == (21, 6)
    assert span_rank(gens, points) == 21


def test_conformal_and_closed(points):
    gens = generators()
    rng = np.random.default_rng(1)
    assert max(conformality_residual(g, U, rng) for g in gens for U in points[:2]) < 1e-8
    assert closure_residual(gens, points) < 1e-9


def test_named_generators_lie_in_span(points):
    assert max(named_span_residuals(points).values()) < 1e-10


def test_field_of_translation_is_constant(points):
    g = generators()[0]
    assert np.allclose(field_matrix([g], points[0]), field_matrix([g], points[1]))


def test_group_element_invariants_and_inverse():
    rng = np.random.default_rng(2)
    g = random_group_element(rng)
    assert g.invariant_residual() < 1e-12
    h = g @ g.inverse()
    assert np.allclose(h.matrix, np.eye(6), atol=1e-12)


def test_group_action_composes():
    rng = np.random.default_rng(3)
    g, h = random_group_element(rng), random_group_element(rng)
    U = 0.3 * sym(rng)
    assert np.allclose((g @ h).act(U), g.act(h.act(U)), atol=1e-10)


def test_linear_element_acts_by_congruence():
    L = np.array([[1.0, 0.2, 0.0], [0.0, 2.0, 0.0], [0.3, 0.0, 1.0]])
    U = np.diag([1.0, 2.0, 3.0])
    out = GroupElement.linear(L).act(U)
    assert np.allclose(out, out.T)
    assert np.allclose(GroupElement.translation(U).act(np.zeros((3, 3))), U)


def test_apply_sp6_transports_the_hypersurface():
    F = parse("u11*u22 - u12^2 - u33", HESSIAN_VARS)
    rng = np.random.default_rng(4)
    g = random_group_element(rng)
    G = apply_sp6(F, g)
    pts = sample_hypersurface_points(F, 5, 0)
    for U in transport_points(pts, g):
        assert abs(G.evaluate(U)) < 1e-9


def test_numerical_rank_flags_instability():
    M = np.diag([1.0, 1.0, 1e-8])
    assert not numerical_rank(M).stable
    assert numerical_rank(np.diag([1.0, 1.0, 1e-15])).rank == 2


@pytest.mark.parametrize("text, dim", [
    ("u33 - u11 - u22", 9),
    ("u11*u22*u33 + 2*u12*u13*u23 - u11*u23^2 - u22*u13^2 - u33*u12^2 - 1", 8),
])
def test_symmetry_dimension(text, dim):
    assert symmetry_dimension(parse(text, HESSIAN_VARS), seed=1) == dim


def test_symmetry_dimension_needs_points_on_the_hypersurface():
    F = parse("u33 - u11 - u22", HESSIAN_VARS)
    pts = sample_hypersurface_points(F, 60, 3)
    assert symmetry_dimension(F, points=pts) == 9
    assert all(abs(F.evaluate(U)) < 1e-10 for U in pts)
    assert sym_from_names(names_from_sym(np.eye(3))).trace() == 3


def test_orbit_rank_generic_and_wave():
    rng = np.random.default_rng(5)
    assert prolong_orbit_rank(JetPoint21.random(rng), 60, 0) == 21
    jp = JetPoint21.from_function(parse("a + c"), [0.3, 0.5, 0.2, 0.7, 0.4])
    assert prolong_orbit_rank(jp, 60, 0) == 12


def test_jet_point_snapshot_roundtrip():
    f = parse("ln(a + c) + b*q")
    x = np.array([0.4, 0.1, 0.3, 0.6, 0.2])
    jp = JetPoint21.from_function(f, x)
    s = jp.snapshot()
    # x order is (a, b, p, c, q)
    assert s.first[0] == pytest.approx(1 / (0.4 + 0.6))
    assert s.first[4] == pytest.approx(0.1)
