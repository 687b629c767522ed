from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from averaging_jets.ring import (NonLinearError, ONE, PI, ParamName, ParamPoly, ParseError, ZERO, collect_linear,
                                 parse_poly, specialize_pi, var)

NAMES = ["a110", "b101", "alpha", "A3", "gamma"]


@st.composite
def polys(draw, max_terms=4):
    p = ZERO
    for _ in range(draw(st.integers(0, max_terms))):
        c = Fraction(draw(st.integers(-9, 9)), draw(st.integers(1, 5)))
        m = ParamPoly.monomial({n: draw(st.integers(0, 2)) for n in draw(st.sets(st.sampled_from(NAMES), max_size=2))},
                               c)
        if draw(st.booleans()):
            m = m * PI
        p = p + m
    return p


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p - p == ZERO
    assert p * ONE == p


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), st.integers(-3, 3))
def test_substitution_is_a_homomorphism(p, q, v):
    b = {"alpha": Fraction(v, 2), "a110": var("b101") + 1}
    assert (p * q).substitute(b) == p.substitute(b) * q.substitute(b)
    assert (p + q).substitute(b) == p.substitute(b) + q.substitute(b)


@settings(max_examples=40, deadline=None)
@given(polys())
def test_print_parse_roundtrip(p):
    assert parse_poly(str(p)) == p


def test_parse_basics():
    p = parse_poly("pi/8*(2*a120 - a110) + alpha^2")
    assert p == PI * Fraction(1, 4) * var("a120") - PI / 8 * var("a110") + var("alpha") ** 2
    assert parse_poly("pi^-1*pi") == ONE
    with pytest.raises(ParseError):
        parse_poly("a110 +* 3")
    with pytest.raises(ParseError):
        parse_poly("(a110")


def test_pi_laurent_and_specialization():
    p = PI ** 2 * var("alpha") / PI ** 3
    assert p.pi_content() == (-1, -1)
    assert specialize_pi(p, Fraction(22, 7)) == var("alpha") * Fraction(7, 22)
    with pytest.raises(ValueError):
        (var("alpha") * PI).substitute({"pi": 3})


def test_collect_linear():
    p = parse_poly("2*pi*a110 + alpha*b101 + 3*a110*alpha + 5")
    co, rem = collect_linear(p, ["a110", "b101"])
    assert co["a110"] == parse_poly("2*pi + 3*alpha")
    assert co["b101"] == var("alpha")
    assert rem == parse_poly("5")
    with pytest.raises(NonLinearError):
        collect_linear(parse_poly("a110^2"), ["a110"])
    with pytest.raises(NonLinearError):
        collect_linear(parse_poly("a110*b101"), ["a110", "b101"])


def test_exact_division():
    d = parse_poly("alpha + 3*gamma")
    q = parse_poly("pi*alpha - gamma^2")
    assert (d * q).divexact(d) == q
    with pytest.raises(ArithmeticError):
        q.divexact(d)


def test_param_names():
    n = ParamName("a130")
    assert (n.kind, n.slot, n.order, n.k, n.l) == ("perturbation", "a", 1, 3, 0)
    assert ParamName("A12").kind == "auxiliary"
    assert ParamName("alpha").kind == "family"
    assert ParamName("pi").kind == "transcendental_pi"
    assert sorted(map(ParamName, ["b101", "a110", "alpha", "A2", "pi"]))[0].name == "pi"


def test_float_evaluation():
    assert abs(parse_poly("pi*alpha/2").to_float({"alpha": 2.0}) - 3.141592653589793) < 1e-15
