import io

import numpy as np
import pytest

from hirota.expr import parse
from hirota.reductions import (
    Derivatives,
    bisecant_check,
    dkp_oracle_comparison,
    gt_consistency3,
    gt_integrate,
    seed_points,
    simple_wave,
)

DKP = parse("b + c^2")
BASE = (0.0, 0.0, 2.0, 0.0, 0.0)
MU = ("0.5 + 0.2*R", "-0.5 - 0.1*R")


@pytest.fixture(scope="module")
def grid():
    return gt_integrate(DKP, 2, base=BASE, mu_profiles=MU, steps=20, h=0.01)


def test_derivatives_snapshot():
    d = Derivatives(DKP)
    X = np.array([0.0, 0.0, 2.0, 0.0, 0.0, 4.0])
    s = d.snapshot(X)
    assert s.first.tolist() == [0.0, 1.0, 4.0, 0.0, 0.0]
    assert d.value(X) == 4.0


def test_grid_shape_and_axis_data(grid):
    assert grid.fields.shape == (21, 21, 6 + 6)
    R = np.arange(21) * 0.01
    assert np.allclose(grid.get("mu1")[:, 0], 0.5 + 0.2 * R)
    assert np.allclose(grid.get("mu2")[0, :], -0.5 - 0.1 * R)
    assert np.allclose(grid.get("A1")[:, 0], 1.0)


def test_grid_stays_on_conic_and_rank_one(grid):
    assert np.abs(grid.dispersion).max() < 1e-5
    diag = bisecant_check(grid, DKP)
    assert diag["max_rank_measure"] < 1e-4
    assert diag["max_F_residual"] < 1e-4
    assert not diag["flagged_nodes"]


def test_dump_is_loadable(grid):
    text = grid.dump()
    header = text.splitlines()[0].split()[1:]
    data = np.loadtxt(io.StringIO(text))
    assert data.shape == (21 * 21, len(header))
    assert header[:2] == ["R1", "R2"] and header[-1] == "minD"
    assert data[-1, 0] == pytest.approx(0.2)


def test_second_order_convergence():
    disp = []
    for h, steps in ((0.02, 10), (0.01, 20)):
        g = gt_integrate(DKP, 2, base=BASE, mu_profiles=MU, steps=steps, h=h)
        disp.append(np.abs(g.dispersion).max())
    assert 3.0 < disp[0] / disp[1] < 5.0


def test_invalid_component_count():
    with pytest.raises(ValueError):
        gt_integrate(DKP, 4, base=BASE, mu_profiles=MU * 2)


def test_dkp_oracle_agrees_and_converges():
    coarse = dkp_oracle_comparison(steps=40, h=0.01)
    fine = dkp_oracle_comparison(steps=80, h=0.005)
    assert max(coarse.values()) < 1e-3
    for key in coarse:
        assert fine[key] < coarse[key] / 2.5


def test_consistency_defect_vanishes_for_linear():
    f = parse("a + c")
    pts = seed_points(f, (0, 0, 0, 0, 0), (-0.5, 0.2, 0.9))
    res = gt_consistency3(f, (0, 0, 0, 0, 0), pts)
    assert max(res["defect_norms"]) < 1e-12


def test_consistency_defect_tracks_prediction_for_hessian():
    f = parse("a*c - b^2")
    base = (1.0, 0.2, 0.8, 0.0, 0.0)
    res = gt_consistency3(f, base, seed_points(f, base, (0.4, -0.6, 1.3)))
    assert res["relative_to_predicted"] < 0.05


def test_simple_wave_constant_profiles():
    w = simple_wave(DKP, mu="0.3", a="0.5", psi="R", center=(1.0, 0.0, 0.0), h=0.02)
    assert w.max_residual < 1e-10
    assert w.identity_residual < 1e-9


def test_simple_wave_needs_reference_off_the_t0_slice():
    with pytest.raises(ValueError):
        simple_wave(DKP, center=(1.0, 0.0, 0.5))
