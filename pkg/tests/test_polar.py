import math
import random

import pytest

from averaging_jets.numeric import first_integral_drift
from averaging_jets.polar import (DegenerateLinearPart, PerturbedSystem, PlanarPoly, catalog, catalog_names,
                                  generic_perturbation, parse_system, to_polar)
from averaging_jets.ring import PI, parse_poly
from averaging_jets.trig import QuasiTrigPoly, antiderivative, eval_2pi, trig_mul

FAMILY = {"alpha": 0.3, "beta": -0.2, "gamma": 0.5, "delta": 0.7}
c, s = QuasiTrigPoly.cos(), QuasiTrigPoly.sin()


def linear_center():
    return PerturbedSystem("lin", PlanarPoly.parse("-y"), PlanarPoly.parse("x"))


def test_linear_center_has_zero_F0():
    pf = to_polar(linear_center(), 6)
    assert all(not pf.F0[k] for k in range(7))


def test_lv_leading_data():
    pf = to_polar(catalog("LV"), 5)
    cs = trig_mul(c, s)
    assert pf.f0[0] == trig_mul(cs, s - c)
    assert pf.g0[0] == trig_mul(cs, c + s)


def test_lv_first_order_r1_average():
    pf = to_polar(generic_perturbation(catalog("LV"), 1), 3)
    assert eval_2pi(antiderivative(pf.F1[1])) == PI * parse_poly("a110 + b101")


@pytest.mark.parametrize("name", ["LV", "H", "CR1", "S1", "S2", "S3", "S4"])
def test_F0_starts_at_r2(name):
    pf = to_polar(catalog(name), 6)
    assert not pf.F0[0] and not pf.F0[1]


def test_catalog_entries():
    lv = catalog("LV")
    assert lv.P == PlanarPoly.parse("-y*(1+x)") and lv.Q == PlanarPoly.parse("x*(1+y)")
    s2 = catalog("S2")
    assert s2.P == PlanarPoly.parse("-y+x^2") and s2.Q == PlanarPoly.parse("x*(1+y)")
    cr = catalog("CR1", {"alpha": 0})
    assert cr.P == PlanarPoly.parse("-y*(1-2*x^2)") and cr.Q == PlanarPoly.parse("x+2*x*y^2")
    assert "9*x**2 + (3 + 4*y)**2*y**2" in catalog("S4").H
    assert set(catalog_names()) == {"LV", "H", "CR1", "S1", "S2", "S3", "S4"}
    with pytest.raises(KeyError):
        catalog("S5")
    with pytest.raises(KeyError):
        catalog("LV", {"alpha": 1})


def test_generic_perturbation_sizes():
    # five monomials x, y, x^2, xy, y^2 per component
    assert len(generic_perturbation(catalog("LV"), 1).perturbation_parameters()) == 10
    cr = generic_perturbation(catalog("CR1"), 1, 3).perturbation_parameters()
    assert len(cr) == 18 and {"a130", "b121"} <= set(cr)
    lin = generic_perturbation(catalog("LV"), 1, 1)
    assert len(lin.perturbation_parameters()) == 4
    assert lin.perturbation(1)[0].degree() == 1


def test_degenerate_linear_part():
    with pytest.raises(DegenerateLinearPart):
        PerturbedSystem("bad", PlanarPoly.parse("-2*y"), PlanarPoly.parse("x"))
    with pytest.raises(DegenerateLinearPart):
        PerturbedSystem("bad", PlanarPoly.parse("-y + 1"), PlanarPoly.parse("x"))


def test_order_cap():
    with pytest.raises(ValueError):
        to_polar(catalog("LV"), 18)
    assert to_polar(catalog("LV"), 18, cap=20).order == 18


def _direct_drdtheta(sys_, vals, eps, th, r):
    f = sys_.field_numeric(vals, eps)
    x, y = r * math.cos(th), r * math.sin(th)
    u, v = f(x, y)
    return (math.cos(th) * u + math.sin(th) * v) / ((math.cos(th) * v - math.sin(th) * u) / r)


@pytest.mark.parametrize("name", ["LV", "H", "CR1", "S4"])
def test_polar_series_matches_direct_evaluation(name):
    rng = random.Random(3)
    sys_ = generic_perturbation(generic_perturbation(catalog(name), 1), 2)
    vals = dict(FAMILY)
    vals.update({p: rng.randint(-4, 4) / 3 for p in sys_.perturbation_parameters()})
    j = 8
    pf = to_polar(sys_, j)
    eps = 1e-3
    for _ in range(10):
        th, r = rng.uniform(0, 2 * math.pi), rng.uniform(0.01, 0.05)
        series = sum(F.to_float(th, r, vals) * eps ** i for i, F in enumerate((pf.F0, pf.F1, pf.F2)))
        direct = _direct_drdtheta(sys_, vals, eps, th, r)
        # truncation in r plus the O(eps^3) tail
        assert abs(series - direct) <= 50 * r ** (j + 1) + 50 * eps ** 3 * r


@pytest.mark.parametrize("name", ["LV", "H", "CR1", "S1", "S2", "S3", "S4"])
def test_first_integral_is_conserved(name):
    sys_ = catalog(name)
    vals = {k: v for k, v in FAMILY.items() if k in sys_.params}
    assert first_integral_drift(sys_, vals, 0.1, rtol=1e-12, atol=1e-14) <= 1e-9


def test_parse_system_roundtrip_and_errors():
    text = """# a custom center
name = mine
degree = 2
params = [alpha]
P = -y + alpha*x^2
Q = x
P1 = a110*x
H = x**2 + y**2
"""
    s = parse_system(text)
    assert s.name == "mine" and s.params == ("alpha",)
    assert s.perturbation(1)[0] == PlanarPoly.parse("a110*x")
    with pytest.raises(ValueError, match="line 2"):
        parse_system("P = -y\nQ = x + beta*x^2\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_system("P = -y + 1\nQ = x\n")
    with pytest.raises(ValueError, match="line 3"):
        parse_system("P = -y\nQ = x\ndegree = 3\n")
    with pytest.raises(ValueError, match="missing"):
        parse_system("P = -y\n")
