import numpy as np
import pytest

from hirota.dispersion import Snapshot, conic_sample
from hirota.expr import HESSIAN_VARS, parse
from hirota.integrability import (
    applicable_suites,
    change_variables,
    classify,
    condition_suite,
    evolutionary_to_implicit,
    gt_residual,
    implicit_jet3,
    sample_triples,
    solve_coordinate,
    solve_thirds,
    test_integrability,
    test_integrability_implicit,
    thirds_mismatch,
    transform_point,
)

BASE = {"a": 0.6, "b": 0.3, "c": 0.9, "p": 0.2, "q": -0.1}


def snapshot(text, base=BASE):
    return Snapshot.from_expr(parse(text), base)


@pytest.mark.parametrize("text", ["b + c^2", "ln(a + c)", "a + c", "ln(exp(a) + exp(c))"])
def test_residual_vanishes_on_integrable(text):
    s = snapshot(text)
    for tri in sample_triples(s, 30, 0):
        assert gt_residual(s, *tri).relative < 1e-9


def test_residual_nonzero_on_hessian_equation():
    s = snapshot("a*c - b^2")
    worst = max(gt_residual(s, *tri).relative for tri in sample_triples(s, 30, 0))
    assert worst > 1e-3


def test_residual_needs_thirds():
    s = snapshot("b + c^2").with_third(None)
    P = conic_sample(s, 3, 0)
    with pytest.raises(ValueError):
        gt_residual(s, *P)


@pytest.mark.parametrize("text", ["b + c^2", "ln(a + c)", "b + (p + 2*a)^2/4 + exp(-a)"])
def test_solved_thirds_match_exact(text):
    s = snapshot(text)
    sol = solve_thirds(s, 60, 3)
    assert sol.system_rank == 35
    assert thirds_mismatch(sol.thirds, s) < 1e-7


def test_solve_thirds_needs_enough_triples():
    with pytest.raises(ValueError):
        solve_thirds(snapshot("b + c^2"), 5)


def test_classify_thresholds():
    assert classify(1e-9) == "integrable"
    assert classify(0.5) == "not_integrable"
    assert classify(1e-5) == "inconclusive"


def test_verdicts():
    assert test_integrability(parse("b + c^2"), 3, 1).status == "integrable"
    assert test_integrability(parse("a*c - b^2"), 3, 1, solve=False).status == "not_integrable"


def test_verdict_is_deterministic():
    a = test_integrability(parse("ln(a + c)"), 3, 11)
    b = test_integrability(parse("ln(a + c)"), 3, 11)
    assert a.max_relative_residual == b.max_relative_residual


def test_degenerate_equation_is_unsupported():
    assert test_integrability(parse("p*q"), 2, 0, solve=False).status == "unsupported"


def test_implicit_jet_reproduces_explicit():
    f = parse("ln(a + c) + b*q")
    F = evolutionary_to_implicit(f)
    pt = {"u11": BASE["a"], "u12": BASE["b"], "u22": BASE["c"], "u13": BASE["p"], "u23": BASE["q"]}
    pt["u33"] = solve_coordinate(F, pt)
    jet = implicit_jet3(F, pt)
    s = snapshot("ln(a + c) + b*q")
    assert np.allclose(jet.block(1), s.first, atol=1e-12)
    assert np.allclose(jet.block(3), s.third, atol=1e-10)


def test_implicit_verdict_for_dkp_in_xt_form():
    F = parse("u13 - 0.5*u11^2 - u22", HESSIAN_VARS)
    L = [[1, 0, 0], [0, 1, 0], [1, 2, 1]]
    v = test_integrability_implicit(change_variables(F, L), 3, 2)
    assert v.status == "integrable"


def test_change_of_variables_maps_points():
    rng = np.random.default_rng(5)
    F = parse("u11*u22 - u12^2 + exp(u13) - u33*u23", HESSIAN_VARS)
    L = np.eye(3) + 0.4 * rng.normal(size=(3, 3))
    G = change_variables(F, L)
    for _ in range(5):
        U = dict(zip(HESSIAN_VARS, rng.normal(size=6)))
        assert G.evaluate(transform_point(U, L)) == pytest.approx(F.evaluate(U), rel=1e-12, abs=1e-12)


def test_change_of_variables_rejects_singular():
    with pytest.raises(ValueError):
        change_variables(parse("u11", HESSIAN_VARS), np.zeros((3, 3)))


def test_applicable_suites():
    assert applicable_suites(parse("ln(a + c)")) == ["s31", "s32"]
    assert applicable_suites(parse("b + p^2")) == ["s34"]
    assert applicable_suites(parse("a*q")) == []


@pytest.mark.parametrize("text, suite", [
    ("ln(a + c)", "s31"), ("b + c^2", "s32"), ("a + c + 2*ln(cosh(b))", "s32"),
    ("b + (p + 2*a)^2/4 + exp(-a)", "s34"), ("p*q", "s33"),
])
def test_suites_vanish_on_integrable(text, suite):
    res = condition_suite(parse(text), suite, BASE)
    assert max(abs(r) for _, r in res) < 1e-10


def test_s34_has_ten_relations():
    assert len(condition_suite(parse("b + p^2 + exp(a)"), "s34", BASE)) == 10


@pytest.mark.parametrize("text, suite", [("a*c", "s31"), ("a*c - b^2", "s32"), ("b + p^2 + a^3", "s34"),
                                         ("p^3 + q + p*q", "s33")])
def test_suites_detect_non_integrable(text, suite):
    res = condition_suite(parse(text), suite, BASE)
    assert max(abs(r) for _, r in res) > 1e-3


def test_suite_rejects_extra_variables():
    with pytest.raises(ValueError):
        condition_suite(parse("a + q"), "s31", BASE)
