"""Expression parsing and canonical printing."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdvvkit.algebra import Poly
from wdvvkit.exprlang import ParseError, format_polynomial, parse

fractions_st = st.fractions(min_value=-9, max_value=9, max_denominator=12)


def polys(n_vars=3):
    exponent = st.tuples(
        *[st.integers(min_value=0, max_value=5) for _ in range(n_vars)]
    )
    return st.dictionaries(exponent, fractions_st, max_size=6).map(
        lambda d: Poly(n_vars, d)
    )


@settings(max_examples=120, deadline=None)
@given(polys())
def test_roundtrip(p):
    assert parse(format_polynomial(p), 3) == p


@settings(max_examples=60, deadline=None)
@given(polys())
def test_printing_idempotent(p):
    s = format_polynomial(p)
    assert format_polynomial(parse(s, 3)) == s


@settings(max_examples=40, deadline=None)
@given(polys(n_vars=1), polys(n_vars=1))
def test_parse_respects_arithmetic(a, b):
    sa, sb = format_polynomial(a), format_polynomial(b)
    assert parse(f"({sa}) + ({sb})", 1) == a + b
    assert parse(f"({sa}) * ({sb})", 1) == a * b
    assert parse(f"-({sa})", 1) == -a


def test_specific_forms():
    u1 = Poly.variable(3, 1)
    u2 = Poly.variable(3, 2)
    assert parse("u1^2 - 2/3*u2", 3) == u1 * u1 - Fraction(2, 3) * u2
    assert parse("  u1   +\tu2 ", 3) == u1 + u2
    assert parse("(u1+u2)^2", 3) == u1 * u1 + 2 * u1 * u2 + u2 * u2
    assert parse("u1*(u2 + 1)", 3) == u1 * u2 + u1
    assert parse("2^3", 3) == Poly.constant(3, 8)
    assert parse("-u1^2", 3) == -(u1 * u1)
    assert parse("1/2*u1^2", 3) == Fraction(1, 2) * u1 * u1
    assert parse("0", 3).is_zero()


def test_canonical_order_degree_first():
    assert format_polynomial(parse("u2 + u1^2", 3)) == "u1^2 + u2"
    assert format_polynomial(parse("1 + u3 + u3^2", 3)) == "u3^2 + u3 + 1"
    assert format_polynomial(Poly.zero(3)) == "0"


def test_rejections():
    for text in ["u4", "u0", "u1 +", "* u1", "u1 ** 2", "1.5", "foo", "", "u1 u2", "(u1", "u1)"]:
        with pytest.raises(ParseError):
            parse(text, 3)


def test_error_carries_position():
    with pytest.raises(ParseError) as ei:
        parse("u1 + u4", 3)
    assert "u4" in str(ei.value)
    assert "position" in str(ei.value)


def test_variable_count_boundary():
    assert parse("u8", 8) == Poly.variable(8, 8)
    with pytest.raises(ParseError):
        parse("u9", 8)
