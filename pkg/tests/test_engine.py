import random

import pytest

from averaging_jets.engine import MissingPerturbation, averaging_jet
from averaging_jets.numeric import NumericBinding, displacement
from averaging_jets.polar import PlanarPoly, catalog, catalog_names, conditions, generic_perturbation
from averaging_jets.ring import NonLinearError, collect_linear, parse_poly


def _first(name, degree=None):
    return generic_perturbation(catalog(name), 1, degree)


@pytest.mark.parametrize("name", ["LV", "S1", "S2", "S3", "S4"])
def test_unperturbed_flow_closes(name):
    # y_0(2 pi, r) = r exactly for a center
    _, flows = averaging_jet(_first(name), 1, 5, return_flows=True)
    vals = flows[0].at_2pi()
    assert vals[0] == parse_poly("1")
    assert all(v.is_zero() for v in vals[1:])


def test_lv_leading_coefficients():
    J = averaging_jet(_first("LV"), 1, 3)
    assert J[1] == parse_poly("pi*(a110 + b101)")
    # only a110 = 1: the second coefficient does not vanish, and eps*M1 matches
    # the integrated return map (see test_numeric) only with it included
    only = {p: (1 if p == "a110" else 0) for p in J.parameters() if p != "pi"}
    assert J.substitute(only)[2] == parse_poly("pi/3")


@pytest.mark.parametrize("name", ["LV", "S4", "H", "CR1"])
def test_first_order_linear_in_perturbation(name):
    s = _first(name)
    J = averaging_jet(s, 1, 5)
    params = s.perturbation_parameters(1)
    for c in J.coeffs:
        try:
            _, rem = collect_linear(c, params)
        except NonLinearError:
            pytest.fail(f"{name}: coefficient not linear in the perturbation")
        assert rem.is_zero()


def test_zero_perturbation_gives_zero_jet():
    s = catalog("LV").with_perturbation(1, PlanarPoly(), PlanarPoly())
    assert averaging_jet(s, 1, 7).is_zero()
    s = s.with_perturbation(2, PlanarPoly(), PlanarPoly())
    assert averaging_jet(s, 2, 7).is_zero()


def test_second_order_needs_first_order_data():
    s = generic_perturbation(catalog("LV"), 2)
    with pytest.raises(MissingPerturbation):
        averaging_jet(s, 2, 5)


def test_bad_orders():
    s = _first("LV")
    with pytest.raises(ValueError):
        averaging_jet(s, 3, 5)
    with pytest.raises(ValueError):
        averaging_jet(s, 1, 0)
    with pytest.raises(ValueError):
        averaging_jet(s, 1, 19, cap=17)


def test_s4_reference_coefficients():
    s = _first("S4")
    J = averaging_jet(s, 1, 5).substitute({"a110": parse_poly("-b101")})
    assert J[3] == parse_poly("pi*(9*a111 - 12*b102 - 40*b101 - 30*b120)/9")
    assert J[5] == parse_poly("40*pi*(21*a111 - 48*b102 - 40*b101 - 60*b120)/81")


@pytest.mark.parametrize("name", catalog_names())
def test_conditions_kill_even_and_odd_coefficients(name):
    s = _first(name)
    J = averaging_jet(s, 1, 7).substitute(conditions(s))
    assert J.is_zero()


def test_numeric_shadow_first_order():
    s = _first("LV")
    rng = random.Random(3)
    vals = {p: rng.uniform(-1, 1) for p in s.perturbation_parameters()}
    J = averaging_jet(s, 1, 9)
    eps, r = 1e-6, 0.05
    d, err = displacement(s, NumericBinding(vals, eps, 1e-13, 1e-18), r)
    pred = eps * J.evaluate(r, vals)
    assert abs(d - pred) < 1e-3 * abs(pred)


def test_numeric_shadow_second_order_under_conditions():
    s = generic_perturbation(generic_perturbation(catalog("LV"), 1), 2)
    s = s.substitute(conditions(s))
    rng = random.Random(5)
    vals = {p: rng.uniform(-1, 1) for p in s.perturbation_parameters()}
    J = averaging_jet(s, 2, 9)
    eps, r = 1e-3, 0.05
    d, err = displacement(s, NumericBinding(vals, eps, 1e-13, 1e-18), r)
    pred = eps * eps * J.evaluate(r, vals) / 2
    assert abs(d - pred) < 2e-2 * abs(pred)


def test_jet_serialization_roundtrip():
    J = averaging_jet(_first("LV"), 1, 3)
    d = J.to_dict()
    assert d["i"] == 1 and d["j"] == 3
    assert [parse_poly(c["poly"]) for c in d["coefficients"]] == list(J.coeffs)
    assert J.truncate(1).j == 1
