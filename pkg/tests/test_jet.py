import math

import numpy as np
import pytest

from hirota.jet import Jet, JetError, factorial_weight, multi_indices


def test_index_order_is_graded_lex():
    idx = multi_indices(5, 3)
    assert len(idx) == 56
    assert idx[0] == () and list(idx[1:6]) == [(0,), (1,), (2,), (3,), (4,)]
    third = [m for m in idx if len(m) == 3]
    assert third[:5] == [(0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 0, 3), (0, 0, 4)]
    assert third[-1] == (4, 4, 4)


def test_factorial_weight():
    assert factorial_weight((0, 0, 1)) == 2
    assert factorial_weight((2, 2, 2)) == 6
    assert factorial_weight(()) == 1


def _var(i, v, n=2):
    return Jet.variable(i, v, n, 3)


def test_product_rule():
    x, y = _var(0, 0.5), _var(1, 2.0)
    f = x * x * y
    assert f.value == pytest.approx(0.5)
    assert f.derivative((0,)) == pytest.approx(2 * 0.5 * 2.0)
    assert f.derivative((0, 0, 1)) == pytest.approx(2.0)
    assert f.derivative((0, 0, 0)) == 0.0


@pytest.mark.parametrize("name, fn, d1, d2, d3", [
    ("exp", math.exp, math.exp, math.exp, math.exp),
    ("ln", math.log, lambda t: 1 / t, lambda t: -1 / t ** 2, lambda t: 2 / t ** 3),
    ("sin", math.sin, math.cos, lambda t: -math.sin(t), lambda t: -math.cos(t)),
    ("sqrt", math.sqrt, lambda t: 0.5 * t ** -0.5, lambda t: -0.25 * t ** -1.5,
     lambda t: 0.375 * t ** -2.5),
    ("tanh", math.tanh, lambda t: 1 - math.tanh(t) ** 2,
     lambda t: -2 * math.tanh(t) * (1 - math.tanh(t) ** 2),
     lambda t: (1 - math.tanh(t) ** 2) * (6 * math.tanh(t) ** 2 - 2)),
])
def test_elementary_functions(name, fn, d1, d2, d3):
    t = 0.7
    j = _var(0, t, 1).compose(name)
    assert j.value == pytest.approx(fn(t))
    assert j.derivative((0,)) == pytest.approx(d1(t))
    assert j.derivative((0, 0)) == pytest.approx(d2(t))
    assert j.derivative((0, 0, 0)) == pytest.approx(d3(t))


def test_division_and_powers():
    x = _var(0, 1.5, 1)
    inv = 1.0 / x
    assert inv.derivative((0, 0, 0)) == pytest.approx(-6 / 1.5 ** 4)
    assert x.pow_int(3).derivative((0, 0)) == pytest.approx(6 * 1.5)
    assert x.pow_real(0.5).derivative((0,)) == pytest.approx(0.5 / math.sqrt(1.5))


def test_domain_errors():
    with pytest.raises(JetError):
        _var(0, -1.0, 1).compose("ln")
    with pytest.raises(JetError):
        _var(0, 0.0, 1) / _var(0, 0.0, 1)


def test_partial_lowers_order():
    x, y = _var(0, 0.3), _var(1, -0.4)
    f = (x * y).compose("exp")
    g = f.partial(1)
    assert g.order == 2
    assert g.derivative((0,)) == pytest.approx(f.derivative((0, 1)))


def test_permute_swaps_variables():
    x, y = _var(0, 0.3), _var(1, -0.4)
    f = x * x * y
    g = f.permute((1, 0))
    assert g.derivative((1, 1, 0)) == pytest.approx(f.derivative((0, 0, 1)))


def test_block_matches_derivatives():
    rng = np.random.default_rng(1)
    x = [Jet.variable(i, v, 3, 3) for i, v in enumerate(rng.uniform(0.2, 0.9, size=3))]
    f = (x[0] * x[1] + x[2]).compose("sin")
    b = f.block(2)
    assert b[1] == pytest.approx(f.derivative((0, 1)))
    assert len(f.block(3)) == 10
