"""Exact univariate integration over the supported pattern class."""

import random

import pytest

from graded_darboux import (chart, coord, gdiv, integrate_univariate, one,
                            parse_expr, partial, NonIntegrable)
from graded_darboux.grexpr.integrate import antiderivative


@pytest.fixture
def yy():
    return chart(("y1", 0, 1), ("y2", 0, -1))


def test_polynomial(yy):
    f = integrate_univariate(parse_expr("y2^2", yy), "y1", 0, "y1")
    assert f == parse_expr("y1*y2^2", yy)


def test_sine_pattern(yy):
    f = integrate_univariate(parse_expr("y2*sin(y1*y2)", yy), "y1", 0, "y1")
    assert f == parse_expr("1 - cos(y1*y2)", yy)
    # differentiate back
    assert partial(f, "y1") == parse_expr("y2*sin(y1*y2)", yy)


def test_logarithmic(yy):
    f = integrate_univariate(gdiv(one(yy), coord(yy, "y1")), "y1", 1, "y1")
    assert f == parse_expr("log(y1)", yy)


def test_negative_powers(yy):
    f = integrate_univariate(gdiv(one(yy), parse_expr("y1^2", yy)), "y1", 1, "y1")
    assert f == parse_expr("1 - 1/y1", yy)


def test_by_parts_chain(yy):
    g = parse_expr("y1^2*cos(3*y1)", yy)
    F = antiderivative(g, "y1")
    assert partial(F, "y1") == g


def test_exp_with_coefficient_argument(yy):
    g = parse_expr("y2*exp(y1*y2)", yy)
    f = integrate_univariate(g, "y1", 0, "y1")
    assert f == parse_expr("exp(y1*y2) - 1", yy)


def test_odd_coefficients_pass_through():
    c = chart(("y1", 0, 1), ("t1", 1, 1), ("t2", 1, 1))
    f = integrate_univariate(parse_expr("t1*t2", c), "y1", 0, "y1")
    assert f == parse_expr("y1*t1*t2", c)


def test_unsupported_patterns_raise(yy):
    with pytest.raises(NonIntegrable):
        antiderivative(parse_expr("sin(y1^2)", yy), "y1")
    with pytest.raises(NonIntegrable):
        antiderivative(parse_expr("sin(y1)*cos(y1)", yy), "y1")
    with pytest.raises(NonIntegrable):
        antiderivative(gdiv(one(yy), one(yy) + coord(yy, "y1")), "y1")
    with pytest.raises(NonIntegrable):
        antiderivative(parse_expr("log(y1)", yy), "y1")


def test_odd_variable_rejected():
    c = chart(("y1", 0, 1), ("t1", 1, 1))
    with pytest.raises(NonIntegrable):
        integrate_univariate(coord(c, "t1"), "t1", 0, 1)


def test_inverts_partial_random(yy):
    rng = random.Random(7)
    pats = ["y2^2", "y1*y2", "y1^2", "sin(2*y1)", "y1*cos(y1*y2)",
            "y2^2*sinh(y1)", "exp(3*y1)*y2", "cosh(y1*y2)*y1^2"]
    for _ in range(60):
        text = " + ".join(rng.sample(pats, rng.randint(1, 3)))
        g = parse_expr(text, yy)
        F = antiderivative(g, "y1")
        assert partial(F, "y1") == g, text
