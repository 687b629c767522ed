import math
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from averaging_jets.ring import PI, ParamPoly, var, ZERO
from averaging_jets.trig import QuasiTrigPoly, RSeries, antiderivative, eval_2pi, series_compose, trig_dot, trig_mul


@st.composite
def qtps(draw, max_p=2, max_k=3):
    u = QuasiTrigPoly()
    for _ in range(draw(st.integers(0, 4))):
        c = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 3)))
        k = draw(st.integers(0, max_k))
        p = draw(st.integers(0, max_p))
        base = QuasiTrigPoly.cos(k, c) if draw(st.booleans()) or k == 0 else QuasiTrigPoly.sin(k, c)
        u = u + trig_mul(base, QuasiTrigPoly.theta(p)) if p else u + base
    return u


def test_product_to_sum():
    c, s = QuasiTrigPoly.cos(), QuasiTrigPoly.sin()
    assert trig_mul(c, c) == QuasiTrigPoly.constant(Fraction(1, 2)) + QuasiTrigPoly.cos(2, Fraction(1, 2))
    assert trig_mul(s, c) == QuasiTrigPoly.sin(2, Fraction(1, 2))
    assert trig_mul(c, c) + trig_mul(s, s) == QuasiTrigPoly.constant(1)


@settings(max_examples=50, deadline=None)
@given(qtps(), qtps(), st.floats(0.1, 6.0))
def test_mul_matches_floats(u, v, th):
    assert abs(trig_mul(u, v).to_float(th) - u.to_float(th) * v.to_float(th)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(qtps())
def test_antiderivative_roundtrip(u):
    U = antiderivative(u)
    assert U.derivative() == u
    assert U.eval_zero().is_zero()


@settings(max_examples=30, deadline=None)
@given(qtps(), qtps())
def test_trig_dot_is_sum_of_products(u, v):
    assert trig_dot([(u, v), (v, v)]) == trig_mul(u, v) + trig_mul(v, v)


def test_eval_2pi_exact():
    # int_0^{2pi} cos^2 = pi, int_0^{2pi} theta = 2 pi^2
    assert eval_2pi(antiderivative(trig_mul(QuasiTrigPoly.cos(), QuasiTrigPoly.cos()))) == PI
    assert eval_2pi(QuasiTrigPoly.theta(1)) == 2 * PI
    assert eval_2pi(antiderivative(QuasiTrigPoly.theta(1))) == 2 * PI ** 2
    assert eval_2pi(antiderivative(QuasiTrigPoly.sin(3, 7))).is_zero()


def test_symbolic_coefficients():
    u = QuasiTrigPoly.cos(1, var("alpha")) + QuasiTrigPoly.constant(var("a110"))
    assert eval_2pi(antiderivative(u)) == 2 * PI * var("a110")
    assert u.substitute({"alpha": 0}) == QuasiTrigPoly.constant(var("a110"))


def test_series_compose_and_inverse():
    one = QuasiTrigPoly.constant(1)
    c = QuasiTrigPoly.cos()
    # (1 + r cos)^-1 = 1 - r cos + r^2 cos^2 - ...
    g = RSeries([QuasiTrigPoly(), c], 4).geometric_inverse()
    assert g[2] == trig_mul(c, c)
    assert g[3] == -trig_mul(c, trig_mul(c, c))
    # F(r) = r^2 composed with L(r) = r + r^2 cos
    F = RSeries([QuasiTrigPoly(), QuasiTrigPoly(), one], 4)
    L = RSeries([QuasiTrigPoly(), one, c], 4)
    comp = series_compose(F, L)
    assert comp[2] == one and comp[3] == c.scale(2) and comp[4] == trig_mul(c, c)
    th, r = 0.7, 0.01
    assert abs(g.to_float(th, r) - 1 / (1 + r * math.cos(th))) < 1e-9
