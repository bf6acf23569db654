import numpy as np
import pytest

from hirota.dispersion import (
    ComplexDispersionError,
    ConicPoint,
    DegenerateConicError,
    DegeneratePairError,
    Snapshot,
    check_nondegenerate,
    conic_residual,
    conic_sample,
    d_value,
    delta,
    lam_roots,
    on_conic,
    pair_data,
    random_snapshot,
    real_mu_intervals,
    second_weights,
    third_weights,
    u_identity_residual,
)
from hirota.expr import parse


def snap(first, second=None):
    return Snapshot(first, np.zeros(15) if second is None else second)


def test_wave_delta():
    # u33 = u11 + u22
    assert delta(snap([1, 0, 1, 0, 0])) == -4.0


def test_weights_contract_the_symmetric_tensors():
    rng = np.random.default_rng(0)
    s = random_snapshot(rng, with_third=True)
    u, v, w = rng.normal(size=(3, 5))
    assert third_weights(u, v, w) @ s.third == pytest.approx(
        np.einsum("ijk,i,j,k", s.tensor3, u, v, w))
    assert second_weights(u, v) @ s.second == pytest.approx(u @ s.hessian @ v)


def test_lam_roots_lie_on_conic():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = random_snapshot(rng)
        mu = rng.uniform(-2, 2)
        for lam in lam_roots(s, mu):
            assert conic_residual(s, lam, mu) == pytest.approx(0.0, abs=1e-10 * (1 + lam * lam))


def test_lam_roots_empty_when_complex():
    # lam^2 = -1 - mu^2 never has real roots
    assert lam_roots(snap([-1, 0, -1, 0, 0]), 0.3) == ()


def test_conic_sample_is_seeded_and_separated():
    s = snap([1, 0.3, 1, 0.2, 0.1])
    a = conic_sample(s, 4, 7)
    b = conic_sample(s, 4, 7)
    assert a == b
    mus = sorted(P.mu for P in a)
    assert min(np.diff(mus)) > 0.05
    assert all(on_conic(s, P) for P in a)


def test_real_intervals_cover_the_sampled_mu():
    rng = np.random.default_rng(2)
    s = random_snapshot(rng)
    iv = real_mu_intervals(s)
    for P in conic_sample(s, 5, rng):
        assert any(lo - 1e-12 <= P.mu <= hi + 1e-12 for lo, hi in iv)


def test_elliptic_conic_raises_complex():
    s = snap([-1, 0, -1, 0, 0])
    assert real_mu_intervals(s) == []
    with pytest.raises(ComplexDispersionError):
        conic_sample(s, 3, 0)
    assert len(conic_sample(s, 3, 0, complex_ok=True)) == 3


def test_degenerate_conic_detected():
    # f = p q has delta = 0
    s = Snapshot.from_expr(parse("p*q"), dict(a=0, b=0, c=0, p=0.5, q=0.3), with_third=False)
    with pytest.raises(DegenerateConicError):
        check_nondegenerate(s)


def test_pair_checks():
    s = snap([1, 0.3, 1, 0.2, 0.1])
    P = conic_sample(s, 1, 0)[0]
    with pytest.raises(ValueError):
        pair_data(s, P, ConicPoint(P.lam + 1.0, P.mu))
    with pytest.raises(DegeneratePairError):
        u_identity_residual(s, P, P)


def test_d_value_symmetric():
    rng = np.random.default_rng(3)
    s = random_snapshot(rng)
    P, Q = conic_sample(s, 2, rng)
    assert d_value(s, P, Q) == pytest.approx(d_value(s, Q, P))


def test_u_identity_holds_on_random_pairs():
    rng = np.random.default_rng(4)
    for _ in range(100):
        s = random_snapshot(rng)
        P, Q = conic_sample(s, 2, rng)
        assert u_identity_residual(s, P, Q) < 1e-8
