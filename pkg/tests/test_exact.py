import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gavflow.errors import SingularReversionError
from gavflow.exact import (
    BivariateSeries,
    ExactScalar,
    TrigPolynomial,
    TrigSeries,
    UnivariateSeries,
    dumps,
    from_json,
    loads,
    sin_cos_monomial,
    to_json,
)

fractions = st.builds(Fraction, st.integers(-99, 99), st.integers(1, 50))
units = st.builds(Fraction, st.integers(1, 99), st.integers(1, 50))
scalars = st.builds(ExactScalar, fractions, fractions)
nonzero = scalars.filter(lambda s: not s.is_zero())


def _sym(s: ExactScalar) -> sp.Expr:
    return sp.Rational(s.a.numerator, s.a.denominator) + sp.Rational(s.b.numerator, s.b.denominator) * sp.sqrt(2)


# ---------------------------------------------------------------- scalars


@given(scalars, scalars, scalars)
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a and a * b == b * a


@given(nonzero)
def test_inverse(a):
    assert a * a.inverse() == ExactScalar(1)
    assert a.norm() == (a * a.conjugate()).rational()


@given(scalars, scalars)
def test_product_matches_sympy(a, b):
    assert sp.simplify(_sym(a * b) - _sym(a) * _sym(b)) == 0


@given(scalars)
def test_sign_matches_sympy(a):
    assert a.sign() == int(sp.sign(_sym(a)))


@given(scalars)
def test_float_is_correctly_rounded(a):
    exact = sp.N(_sym(a), 60)
    assert float(a) == float(exact)


def test_float_survives_cancellation():
    # 99/70 is a convergent of sqrt 2: the value is about -7.2e-5
    x = ExactScalar(Fraction(99, 70), -1)
    assert float(x) == float(sp.N(sp.Rational(99, 70) - sp.sqrt(2), 50))


def test_sqrt_closed_forms():
    assert ExactScalar(Fraction(9, 4)).sqrt() == ExactScalar(Fraction(3, 2))
    assert ExactScalar(Fraction(1, 2)).sqrt() == ExactScalar(0, Fraction(1, 2))
    with pytest.raises(ValueError):
        ExactScalar(3).sqrt()
    with pytest.raises(ValueError):
        ExactScalar(1, 1).sqrt()


def test_immutable_and_hashable():
    x = ExactScalar(1, 2)
    with pytest.raises(AttributeError):
        x.a = Fraction(3)
    assert {x: 1}[ExactScalar(1, 2)] == 1


def test_str_forms():
    assert str(ExactScalar(Fraction(-5, 256))) == "-5/256"
    assert str(ExactScalar(0, Fraction(1, 2))) == "1/2*sqrt2"
    assert str(ExactScalar(1, -2)) == "1 - 2*sqrt2"


# ---------------------------------------------------------------- univariate series


series_lists = st.lists(fractions, min_size=2, max_size=7)


def _useries(values, order=None) -> UnivariateSeries:
    return UnivariateSeries.from_list([ExactScalar(v) for v in values], order)


@given(units, series_lists)
def test_reciprocal(lead, rest):
    s = _useries([lead] + rest)
    assert s * s.reciprocal() == UnivariateSeries.constant(1, s.order)


@given(units, series_lists)
def test_revert_is_two_sided_inverse(lead, rest):
    s = _useries([0, lead] + rest)
    g = s.revert()
    t = UnivariateSeries.variable(s.order)
    assert s.compose(g).truncate(s.order) == t
    assert g.compose(s).truncate(s.order) == t


def test_revert_rejects_singular():
    with pytest.raises(SingularReversionError):
        _useries([0, 0, 1, 1]).revert()
    with pytest.raises(SingularReversionError):
        _useries([1, 1, 1]).revert()


def test_compose_matches_sympy():
    t = sp.symbols("t")
    outer = _useries([1, 2, Fraction(-1, 3), 5, 0, 7])
    inner = _useries([0, 1, Fraction(1, 2), -2, 1, 0])
    got = outer.compose(inner).truncate(6)
    inner_expr = sum(_sym(w) * t**j for j, w in inner.coeffs.items())
    expr = sum(_sym(v) * inner_expr**k for k, v in outer.coeffs.items())
    poly = sp.Poly(sp.series(expr, t, 0, 6).removeO(), t)
    for k in range(6):
        want = poly.coeff_monomial(t**k)
        assert got.coefficient(k) == ExactScalar(Fraction(int(sp.numer(want)), int(sp.denom(want))))


@given(series_lists)
@settings(max_examples=50)
def test_sqrt_squares_back(rest):
    s = _useries([Fraction(4)] + rest)
    r = s.sqrt()
    assert r * r == s


def test_truncation_is_tracked():
    s = _useries([1, 2, 3], order=3)
    with pytest.raises(IndexError):
        s.coefficient(3)
    assert (s * s).order == 3


# ---------------------------------------------------------------- bivariate series


def test_bivariate_derivatives_and_evaluation():
    x, y = BivariateSeries.x(5), BivariateSeries.y(5)
    p = x * x * y + y * y * 3 + x
    assert p.dx() == (x * y * 2 + 1).truncate(4)
    assert p.dy() == (x * x + y * 6).truncate(4)
    assert p(0.5, -2.0) == pytest.approx(0.25 * -2 + 12 + 0.5)
    assert p.truncate(3) == BivariateSeries({(0, 2): 3, (1, 0): 1}, 3)


def test_bivariate_substitution_matches_direct_power():
    x, y = BivariateSeries.x(6), BivariateSeries.y(6)
    inner = x + y * y
    outer = UnivariateSeries.from_list([ExactScalar(v) for v in (1, 1, 1, 1, 1, 1)])
    direct = 1 + inner + inner**2 + inner**3 + inner**4 + inner**5
    assert inner.substitute_into(outer) == direct.truncate(inner.substitute_into(outer).order)


# ---------------------------------------------------------------- trigonometric polynomials


trig_coeffs = st.dictionaries(st.integers(0, 4), fractions, max_size=4)
trig_polys = st.builds(
    lambda c, s: TrigPolynomial(c, {k + 1: v for k, v in s.items()}), trig_coeffs, trig_coeffs
)


@given(trig_polys, trig_polys)
@settings(max_examples=60)
def test_trig_product_matches_pointwise(p, q):
    th = np.linspace(0, 2 * math.pi, 13)
    assert np.allclose((p * q)(th), p(th) * q(th), atol=1e-9)


@given(trig_polys)
@settings(max_examples=60)
def test_trig_average_and_derivative(p):
    th = np.linspace(0, 2 * math.pi, 257)[:-1]
    assert float(p.average()) == pytest.approx(np.mean(p(th)), abs=1e-9)
    h = 1e-6
    fd = (p(th + h) - p(th - h)) / (2 * h)
    assert np.allclose(p.derivative()(th), fd, atol=1e-5)


def test_sin_cos_monomial_reduction():
    # sin^2 cos^2 = 1/8 - cos(4 theta)/8
    assert sin_cos_monomial(2, 2) == TrigPolynomial({0: Fraction(1, 8), 4: Fraction(-1, 8)})
    assert sin_cos_monomial(3, 0) == TrigPolynomial(sin={1: Fraction(3, 4), 3: Fraction(-1, 4)})


def test_trig_series_apply_matches_pointwise():
    s = TrigSeries({1: TrigPolynomial.sin_theta(), 2: TrigPolynomial({0: 1, 2: 1})}, 5)
    outer = UnivariateSeries.from_list([ExactScalar(v) for v in (1, -1, Fraction(1, 2), 3, 1)])
    applied = s.apply(outer)
    th, mu = 0.7, 1e-2
    inner = s(th, mu)
    want = 1 - inner + inner**2 / 2 + 3 * inner**3 + inner**4
    assert applied(th, mu) == pytest.approx(want, rel=1e-9)


# ---------------------------------------------------------------- serialization


@given(series_lists)
def test_json_round_trip_univariate(values):
    s = _useries(values)
    assert loads(dumps(s)) == s


def test_json_round_trip_mixed():
    x, y = BivariateSeries.x(4), BivariateSeries.y(4)
    b = x * ExactScalar(Fraction(1, 3), 2) + y * y
    p = TrigPolynomial({0: ExactScalar(0, Fraction(-5, 256))}, {3: Fraction(7, 2)})
    ts = TrigSeries({0: p, 2: p * p}, 4)
    for obj in (b, p, ts):
        assert from_json(to_json(obj)) == obj
        assert dumps(loads(dumps(obj))) == dumps(obj)


def test_json_rejects_decimal_strings():
    with pytest.raises(ValueError):
        loads('{"kind": "univariate", "order": 2, "monomials": [{"k": 0, "a": "0.5", "b": "0/1"}]}')
