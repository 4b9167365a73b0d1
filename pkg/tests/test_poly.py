from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmodlab.errors import ParseError
from cmodlab.poly import Poly, format_poly, parse_matrix, parse_poly, parse_vector

V = ("t", "x")


def test_parse_basic():
    f = parse_poly("x^2 - 4x + 2*t", V)
    assert f.coefficient((0, 2)) == 1
    assert f.coefficient((0, 1)) == -4
    assert f.coefficient((1, 0)) == 2
    assert f.linear_part() == {"t": 2, "x": -4}
    assert f.degree() == 2


def test_parse_rationals_and_powers():
    f = parse_poly("(x + 1/3)^2", V)
    assert f.constant_term() == Fraction(1, 9)
    assert f.coefficient((0, 1)) == Fraction(2, 3)


@pytest.mark.parametrize("bad", ["", "x +", "y", "x^-1", "x**t", "sin(x)", "2.5*x"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_poly(bad, V)


def test_format_roundtrip_examples():
    for text in ["0", "1", "-x", "x^2 - 4*x", "2*t + x^3 - 7", "1/2*t*x"]:
        f = parse_poly(text, V)
        assert parse_poly(format_poly(f), V) == f


def test_vector_and_matrix():
    v = parse_vector("(t, -4 + x)", V)
    assert len(v) == 2 and v[1].constant_term() == -4
    m = parse_matrix("[[1, 0], [t, x^2]]", V)
    assert m[1][1] == parse_poly("x^2", V)


def test_subs_and_truncate():
    f = parse_poly("t^3 + x*t + 1", V)
    g = f.subs({"t": parse_poly("2*x", V)}, V)
    assert g == parse_poly("8*x^3 + 2*x^2 + 1", V)
    assert f.truncate(2) == parse_poly("x*t + 1", V)
    assert f.used_vars() == {"t", "x"}


def test_with_vars_rejects_used_variable():
    with pytest.raises(ValueError):
        parse_poly("x", V).with_vars(("t",))


coeffs = st.integers(-9, 9)
monos = st.tuples(st.integers(0, 3), st.integers(0, 3))
polys = st.dictionaries(monos, coeffs, max_size=6).map(lambda d: Poly(V, d))


@settings(max_examples=80, deadline=None)
@given(polys, polys, polys)
def test_ring_axioms(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a
    assert a - a == Poly(V)


@settings(max_examples=80, deadline=None)
@given(polys)
def test_format_parse_roundtrip(f):
    assert parse_poly(format_poly(f), V) == f


@settings(max_examples=50, deadline=None)
@given(polys, st.integers(-3, 3), st.integers(-3, 3))
def test_evaluate_is_ring_map(f, a, b):
    vals = {"t": Fraction(a), "x": Fraction(b)}
    g = f * f + f
    fv = f.evaluate(vals, Fraction(1))
    assert g.evaluate(vals, Fraction(1)) == fv * fv + fv
