import numpy as np
import pytest

from hirota.dispersion import conic_sample, random_snapshot
from hirota.expr import parse
from hirota.geometry import (
    apolarity_residuals,
    cubic_C,
    cubic_expanded,
    flat_model_checks,
    geometry_report,
    metric_Q,
    tangent_variety_point,
)


@pytest.fixture
def snaps():
    rng = np.random.default_rng(0)
    return [random_snapshot(rng) for _ in range(20)], rng


def test_cubic_matches_expanded_form(snaps):
    ss, rng = snaps
    for s in ss:
        C = cubic_C(s.first)
        v = rng.normal(size=5)
        assert C(v) == pytest.approx(cubic_expanded(s.first, v), rel=1e-12, abs=1e-12)


def test_cubic_is_symmetric(snaps):
    ss, _ = snaps
    T = cubic_C(ss[0].first).tensor
    assert np.allclose(T, T.transpose(1, 0, 2))
    assert np.allclose(T, T.transpose(2, 1, 0))


def test_cubic_vanishes_on_the_curve_and_metric_on_tangents(snaps):
    ss, rng = snaps
    for s in ss:
        C, Q = cubic_C(s.first), metric_Q(s.first)
        for P in conic_sample(s, 3, rng):
            assert abs(C(P.vector)) < 1e-10 * (1 + np.abs(P.vector).max() ** 3)
            w = tangent_variety_point(s.first, P, 0.7)
            assert abs(Q(w)) < 1e-10 * np.abs(Q.matrix).max() * (1 + np.abs(w).max() ** 2)


def test_apolarity_on_random_draws(snaps):
    ss, _ = snaps
    for s in ss:
        r = apolarity_residuals(s.first)
        assert r["det_residual"] < 1e-8
        assert r["apolarity"] < 1e-7 and r["quartic_relation"] < 1e-7


def test_wave_metric_determinant_is_exact():
    assert metric_Q([1.0, 0.0, 1.0, 0.0, 0.0]).det == pytest.approx(768.0, rel=1e-12)


def test_flat_model():
    r = flat_model_checks()
    assert r["hankel_on_curve"] < 1e-12 and r["quadric_on_tangents"] < 1e-12


def test_report_per_point():
    recs = geometry_report(parse("ln(a + c)"), [{"a": 0.5, "c": 0.7}, {"a": 1.0, "b": 0.2, "c": 0.3}], 0)
    assert len(recs) == 2
    assert all(r["cubic_on_curve"] < 1e-10 and r["metric_on_tangents"] < 1e-10 for r in recs)
