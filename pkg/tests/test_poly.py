from fractions import Fraction

import numpy as np
import pytest

from carnot_heat.poly import Polynomial

x = Polynomial.variable(0)
y = Polynomial.variable(1)


def test_constructors_drop_zero_terms():
    p = x - x
    assert p.is_zero
    assert Polynomial.constant(0).is_zero
    assert not Polynomial.constant(Fraction(1, 3)).is_zero


def test_exact_arithmetic():
    p = (x + y) ** 2
    q = x**2 + 2 * x * y + y**2
    assert p == q
    assert (p - q).is_zero
    r = Fraction(1, 2) * x - Fraction(1, 2) * x
    assert r.is_zero


def test_partial_derivative():
    p = x**3 * y + Fraction(1, 2) * y**2
    assert p.partial(0) == 3 * x**2 * y
    assert p.partial(1) == x**3 + y
    assert p.partial(5).is_zero


def test_substitution_is_exact():
    p = x**2 + y
    # x -> x + y, y -> 1/3
    q = p.subs({0: x + y, 1: Fraction(1, 3)})
    assert q == (x + y) ** 2 + Fraction(1, 3)


def test_evaluate_rational_and_float():
    p = Fraction(1, 3) * x**2 * y
    exact = p.evaluate({0: Fraction(3), 1: Fraction(2)})
    assert exact == Fraction(6)
    approx = p.evaluate({0: 3.0, 1: 2.0})
    assert approx == pytest.approx(6.0)


def test_evaluate_on_arrays():
    p = x * y - 2 * x
    xs = np.linspace(-1, 1, 5)
    ys = np.linspace(0, 2, 5)
    vals = p.evaluate({0: xs, 1: ys})
    assert np.allclose(vals, xs * ys - 2 * xs)


def test_weighted_degrees():
    p = x**2 + x * y
    w = {0: 1, 1: 2}.__getitem__
    assert p.weighted_degrees(w) == {2, 3}


def test_float_coefficients_rejected():
    with pytest.raises(TypeError):
        x * 0.5


def test_format_round_readable():
    p = Fraction(-1, 2) * x * y + x**2
    text = p.format(lambda i: f"v{i + 1}")
    assert "v1^2" in text and "-1/2" in text
