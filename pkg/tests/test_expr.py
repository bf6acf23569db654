import math

import numpy as np
import pytest

from hirota.expr import (
    DomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
    differentiate,
    eval_jet,
    parse,
)

XY = ("x", "y")


@pytest.mark.parametrize("text, value", [
    ("1 + 2*3", 7.0),
    ("2^3^2", 512.0),
    ("-2^2", -4.0),
    ("(1 + 2)*3", 9.0),
    ("3/4", 0.75),
    ("2e-3*1000", 2.0),
    ("x^3/4", 2.0),
    ("exp(0) + ln(1) + sqrt(4)", 3.0),
    ("cosh(0) - sinh(0) + tanh(0)", 1.0),
])
def test_precedence_and_values(text, value):
    assert parse(text, XY).evaluate({"x": 2.0, "y": 1.0}) == pytest.approx(value)


def test_rational_literal_is_folded():
    assert parse("3/4", ()).render() == "0.75"


@pytest.mark.parametrize("text, exc", [
    ("a +", ExprSyntaxError),
    ("", ExprSyntaxError),
    ("(a", ExprSyntaxError),
    ("a b", ExprSyntaxError),
    ("zz", UnknownIdentifierError),
    ("foo(a)", UnknownIdentifierError),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse(text)


def test_error_position_points_at_token():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("a + zz")
    assert "position 4" in str(info.value)


def test_domain_errors_on_floats_and_nan_on_arrays():
    e = parse("ln(a)")
    with pytest.raises(DomainError):
        e.evaluate({"a": -1.0})
    out = e.evaluate({"a": np.array([1.0, -1.0])})
    assert out[0] == 0.0 and math.isnan(out[1])


def test_render_roundtrip():
    rng = np.random.default_rng(0)
    for text in ["a*c - b^2", "exp(-a) + (p + 2*a)^2/4", "ln(cosh(a + c))/(1 + q^2)",
                 "-(a - b)^3", "a - (b - c)", "a/(b*c)"]:
        e = parse(text)
        again = parse(e.render())
        for _ in range(5):
            pt = dict(zip("abcpq", rng.uniform(0.2, 1.0, size=5)))
            assert again.evaluate(pt) == pytest.approx(e.evaluate(pt), rel=1e-14)


def _fd(e, pt, v, h=1e-6):
    up, dn = dict(pt), dict(pt)
    up[v] += h
    dn[v] -= h
    return (e.evaluate(up) - e.evaluate(dn)) / (2 * h)


@pytest.mark.parametrize("text", [
    "a*c - b^2", "exp(a*b)*sin(c)", "ln(a + c)", "sqrt(a)*tan(b)", "a^b",
    "cot(a + 1) + coth(b + 1)", "1/(a + p*q)", "(a + b)^(1/3)",
])
def test_derivatives_against_central_differences(text):
    e = parse(text)
    pt = {"a": 0.7, "b": 0.4, "c": 0.9, "p": 0.3, "q": 0.2}
    for v in "abcpq":
        assert differentiate(e, v).evaluate(pt) == pytest.approx(_fd(e, pt, v), rel=1e-7, abs=1e-9)


def test_known_closed_forms():
    assert str(differentiate(parse("exp(a*b)"), "a")) == "exp(a * b) * b"
    assert differentiate(parse("a^3"), "a").evaluate({"a": 2.0}) == 12.0
    assert differentiate(parse("b"), "a").evaluate({}) == 0.0


def test_eval_jet_matches_repeated_differentiation():
    e = parse("exp(a)*ln(b + c) + p^2*q")
    pt = {"a": 0.1, "b": 0.8, "c": 0.5, "p": 0.3, "q": -0.2}
    jet = eval_jet(e, pt, 3)
    for alpha in [(0,), (0, 1), (1, 2), (0, 0, 1), (3, 3, 4), (1, 1, 2)]:
        d = e
        for k in alpha:
            d = differentiate(d, "abcpq"[k])
        assert jet.derivative(alpha) == pytest.approx(d.evaluate(pt), rel=1e-12, abs=1e-14)
