"""Second-order parameter points with prescribed small-amplitude limit cycles.

The recipe: impose the first-order vanishing conditions, rewrite the
second-order jet in auxiliary parameters ``A_k``, then choose the ``A_k`` so
that ``M_2^[j](r) / r`` has simple roots at the requested radii.  Every
perturbation parameter not pinned down by an ``A_k`` is set to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .engine import Jet, averaging_jet
from .polar import PerturbedSystem, catalog, conditions, generic_perturbation
from .ring import ParamName, parse_poly
from .solver import ReparamResult, reparametrize

__all__ = ["CycleConstruction", "second_order_setup", "construct_cycles", "predicted_radii"]

# (k, A-name, solved parameter) and auxiliary first-order rewrites per system
_SETUPS = {
    "LV": dict(
        j=7,
        targets=[(1, "A1", "a210"), (3, "A2", "b202")],
        rewrites={"b102": "A3 - b120 + b101", "b110": "-2*(A4 - b111 - a111 - a120 - b102) - a101"},
        fixed={"A3": Fraction(1, 10), "A4": Fraction(10)},
        free=["A1", "A2"],
        radii=(0.15, 0.3),
        # A4 - A3 carried by a111 keeps the third-order remainder small
        point={"a111": Fraction(99, 10)},
        scale=0.1,
    ),
    "S4": dict(
        j=7,
        targets=[(1, "A1", "a210"), (3, "A2", "b202"), (5, "A3", "b201")],
        rewrites={},
        fixed={"A1": Fraction(1)},
        free=["A2", "A3"],
        # the period annulus of S4 meets the section in 0 < x < 3/16
        radii=(0.05, 0.1),
        point={},
        scale=0.1,
    ),
}


@dataclass
class CycleConstruction:
    system: PerturbedSystem
    values: dict  # float perturbation parameters for the numeric layer
    exact: dict  # exact A-values and derived parameters
    jet: Jet  # M_2^[j] specialized to the point
    radii: list  # requested radii
    predicted: list  # positive roots of the specialized jet
    scale: float = 1.0  # effective epsilon is scale * eps

    def predicted_displacement(self, r: float, eps: float) -> float:
        e = eps * self.scale
        return e * e * self.jet.evaluate(r) / 2


def second_order_setup(name: str) -> tuple[PerturbedSystem, ReparamResult]:
    """Catalog system with generic quadratic Z_1, Z_2, first-order conditions and A-reparametrization."""
    if name not in _SETUPS:
        raise KeyError(f"no cycle construction for {name!r}; available: {', '.join(_SETUPS)}")
    cfg = _SETUPS[name]
    s = generic_perturbation(generic_perturbation(catalog(name), 1, 2), 2, 2)
    s = s.substitute(conditions(s))
    jet = averaging_jet(s, 2, cfg["j"])
    rewrites = {k: parse_poly(v) for k, v in cfg["rewrites"].items()}
    return s, reparametrize(jet, cfg["targets"], rewrites)


def predicted_radii(jet: Jet, pi_value: float = np.pi, upper: float = 1.0) -> list:
    """Positive real roots below ``upper`` of a fully specialized jet polynomial."""
    coeffs = [c.to_float({"pi": pi_value}) if not c.is_zero() else 0.0 for c in jet.coeffs]
    # highest degree first, dropping the common factor r
    poly = np.array(coeffs[::-1], dtype=float)
    roots = np.roots(np.trim_zeros(poly, "f"))
    out = sorted(float(z.real) for z in roots if abs(z.imag) < 1e-9 and 0 < z.real < upper)
    return out


def construct_cycles(name: str, radii: Sequence[float] | None = None, scale: float | None = None,
                     fixed: Mapping | None = None, point: Mapping | None = None) -> CycleConstruction:
    """Parameter point whose second-order jet vanishes at ``radii``.

    The jet is linear in the free A's once the fixed ones are set, so the
    root conditions form a small linear system; it is solved in floating point
    after fixing pi numerically.
    """
    point_override = point
    system, rep = second_order_setup(name)
    cfg = _SETUPS[name]
    radii = cfg["radii"] if radii is None else tuple(radii)
    scale = cfg["scale"] if scale is None else scale
    if point_override is None and fixed is None:
        point_override = cfg["point"]
    fixed = {k: Fraction(v) for k, v in (cfg["fixed"] if fixed is None else fixed).items()}
    base = rep.jet.substitute({k: v for k, v in fixed.items()})
    free = cfg["free"]
    if len(radii) != len(free):
        raise ValueError(f"{name} construction places exactly {len(free)} roots")
    pi_val = float(np.pi)
    rows, rhs = [], []
    for r in radii:
        row = []
        const = 0.0
        for k, c in enumerate(base.coeffs, 1):
            if c.is_zero():
                continue
            # c = c0 + sum_A cA * A
            c0 = c.substitute({a: 0 for a in free})
            const += c0.to_float({"pi": pi_val}) * r ** k
        for a in free:
            coef = 0.0
            for k, c in enumerate(base.coeffs, 1):
                if c.is_zero():
                    continue
                coef += c.diff(a).to_float({"pi": pi_val}) * r ** k
            row.append(coef)
        rows.append(row)
        rhs.append(-const)
    sol = np.linalg.solve(np.array(rows), np.array(rhs))
    avals = dict({k: float(v) for k, v in fixed.items()}, **{a: float(x) for a, x in zip(free, sol)})
    jet = rep.jet.substitute({k: Fraction(v) for k, v in avals.items()})
    values: dict = {}
    params = system.perturbation_parameters()
    # derived parameters from the reparametrization, everything else zero
    zero_rest = {p: 0 for p in params}
    point = dict(zero_rest)
    point.update({k: Fraction(v) for k, v in (point_override or {}).items()})
    point.update({k: Fraction(v) for k, v in avals.items()})
    derived = {}
    for name_, expr in rep.substitution.bindings.items():
        derived[name_] = expr.substitute({k: v for k, v in point.items() if k != name_})
    for p in params:
        v = derived[p].to_float({"pi": pi_val}) if p in derived else float(point[p])
        # Z_1 -> s Z_1, Z_2 -> s^2 Z_2 is the same as eps -> s eps
        values[p] = v * scale ** ParamName(p).order
    return CycleConstruction(system, values, dict(avals), jet, list(radii), predicted_radii(jet), scale)
