"""Floating-point checks: return maps, epsilon scaling, line integrals, cycle counts.

Orbits are integrated in Cartesian coordinates with DOP853 and an extra state
``phi`` that accumulates the polar angle.  The first return to the section
``{y = 0, x > 0}`` is the terminal event ``phi = 2 pi``, so spurious crossings
of the x-axis can never be mistaken for a return.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy
from scipy.integrate import solve_ivp

from .polar import PerturbedSystem

__all__ = [
    "NumericBinding",
    "NonReturn",
    "IntegrationFailure",
    "return_map",
    "displacement",
    "DisplacementProfile",
    "displacement_profile",
    "OrderFit",
    "epsilon_order_check",
    "melnikov_line_integral",
    "melnikov_factor",
    "first_integral_drift",
    "check_integrating_factor",
    "CycleCount",
    "count_cycles",
]

_EPS = np.finfo(float).eps


class NonReturn(RuntimeError):
    pass


class IntegrationFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class NumericBinding:
    """Float parameter point, epsilon and integrator tolerances."""

    values: Mapping[str, float] = field(default_factory=dict)
    eps: float = 0.0
    rtol: float = 1e-12
    atol: float = 1e-14
    max_time: float = 200.0

    def __post_init__(self):
        if self.rtol < 100 * _EPS or self.atol <= 0:
            raise ValueError("tolerances must be at least 100 machine epsilons")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")

    def tightened(self, factor: float = 0.1) -> "NumericBinding":
        return NumericBinding(self.values, self.eps, max(self.rtol * factor, 100 * _EPS),
                              max(self.atol * factor, 1e-300), self.max_time)

    def with_eps(self, eps: float) -> "NumericBinding":
        return NumericBinding(self.values, eps, self.rtol, self.atol, self.max_time)


def _values(binding: NumericBinding, system: PerturbedSystem) -> dict:
    vals = {k: float(v) for k, v in binding.values.items()}
    for k, v in system.family.items():
        vals.setdefault(k, v.to_float())
    return vals


def _augmented(system: PerturbedSystem, binding: NumericBinding, sign: float = 1.0):
    f = system.field_numeric(_values(binding, system), binding.eps)

    def rhs(t, z):
        x, y = z[0], z[1]
        u, v = f(x, y)
        rr = x * x + y * y
        return [sign * u, sign * v, sign * (x * v - y * u) / rr]

    return rhs


def _full_turn(system, binding, x0, y0, sign=1.0, extra=None):
    rhs = _augmented(system, binding, sign)
    if extra is not None:
        base = rhs

        def rhs(t, z):
            return base(t, z[:3]) + [extra(z[0], z[1])]

    def turn(t, z):
        return abs(z[2]) - 2 * math.pi

    turn.terminal = True
    turn.direction = 1
    z0 = [x0, y0, 0.0] + ([0.0] if extra is not None else [])
    sol = solve_ivp(rhs, (0.0, binding.max_time), z0, method="DOP853", rtol=binding.rtol,
                    atol=binding.atol, events=turn, dense_output=False)
    if sol.status == -1:
        raise IntegrationFailure(f"integration failed from ({x0}, {y0}): {sol.message}")
    if not sol.t_events[0].size:
        raise NonReturn(f"no return to the section from ({x0}, {y0}) within t = {binding.max_time}")
    return sol.t_events[0][0], sol.y_events[0][0]


def return_map(system: PerturbedSystem, binding: NumericBinding, r0: float) -> float:
    """Abscissa of the first return of the orbit through ``(r0, 0)`` to ``{y=0, x>0}``."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    _, z = _full_turn(system, binding, r0, 0.0)
    if z[0] <= 0:
        raise NonReturn("returned to the wrong half-axis")
    return float(math.hypot(z[0], z[1]))


def backward_return(system: PerturbedSystem, binding: NumericBinding, r1: float) -> float:
    """Inverse of :func:`return_map` (integrates the reversed field)."""
    _, z = _full_turn(system, binding, r1, 0.0, sign=-1.0)
    return float(math.hypot(z[0], z[1]))


def displacement(system: PerturbedSystem, binding: NumericBinding, r0: float) -> tuple[float, float]:
    """``(d, err)``; ``err`` compares against a 10x tighter integration."""
    d1 = return_map(system, binding, r0) - r0
    d2 = return_map(system, binding.tightened(0.1), r0) - r0
    err = abs(d1 - d2) + 10 * _EPS * r0
    return d2, err


@dataclass
class DisplacementProfile:
    r: list
    d: list
    err: list
    flags: list
    binding: NumericBinding | None = None

    def to_csv(self, path_or_buf=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "d", "err", "flag"])
        for row in zip(self.r, self.d, self.err, self.flags):
            w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), row[3]])
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w") as fh:
                    fh.write(text)
        return text

    def sign_changes(self) -> list[tuple[int, int]]:
        out = []
        for i in range(len(self.r) - 1):
            if self.flags[i] == "ok" and self.flags[i + 1] == "ok" and self.d[i] * self.d[i + 1] < 0:
                out.append((i, i + 1))
        return out


def displacement_profile(system: PerturbedSystem, binding: NumericBinding, r_grid: Sequence[float]) -> DisplacementProfile:
    """Displacements on a strictly increasing grid, stopping at the first non-return."""
    grid = [float(r) for r in r_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("r-grid must be strictly increasing")
    rs, ds, es, fl = [], [], [], []
    for r in grid:
        try:
            d, e = displacement(system, binding, r)
        except (NonReturn, IntegrationFailure):
            break
        rs.append(r)
        ds.append(d)
        es.append(e)
        fl.append("ok" if abs(d) > e else "uncertain")
    return DisplacementProfile(rs, ds, es, fl, binding)


# -- epsilon scaling ------------------------------------------------------------

@dataclass
class OrderFit:
    radii: list
    slopes: list  # None where inconclusive
    residuals: list  # per radius, per eps
    expected: float

    @property
    def conclusive(self) -> list:
        return [s for s in self.slopes if s is not None]

    @property
    def slope(self) -> float | None:
        c = self.conclusive
        return float(np.median(c)) if c else None

    def agrees(self, tol: float) -> bool:
        s = self.slope
        return s is not None and abs(s - self.expected) <= tol


def epsilon_order_check(system: PerturbedSystem, values: Mapping[str, float], eps_list: Sequence[float],
                        r_grid: Sequence[float], predict: Callable[[float, float], float],
                        expected: float, rtol: float = 1e-13, atol: float = 1e-16) -> OrderFit:
    """Fit ``log |d - predict(r, eps)|`` against ``log eps`` at each radius.

    A residual below five times the integration error estimate makes that
    radius inconclusive (slope ``None``).
    """
    slopes, resid = [], []
    for r in r_grid:
        xs, ys, ok = [], [], True
        row = []
        for eps in eps_list:
            b = NumericBinding(values, eps, rtol, atol)
            d, err = displacement(system, b, r)
            res = abs(d - predict(r, eps))
            row.append(res)
            if res <= 5 * err:
                ok = False
            xs.append(math.log(eps))
            ys.append(math.log(max(res, 1e-300)))
        resid.append(row)
        slopes.append(float(np.polyfit(xs, ys, 1)[0]) if ok else None)
    return OrderFit(list(r_grid), slopes, resid, expected)


def fit_slope(eps_list: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of log residual versus log eps."""
    return float(np.polyfit(np.log(eps_list), np.log(np.abs(residuals)), 1)[0])


# -- line integrals -------------------------------------------------------------

_X, _Y = sympy.symbols("x y")


def _expr_fn(text: str, values: Mapping[str, float], derivative: str | None = None):
    names = {n: sympy.Symbol(n) for n in re.findall(r"[A-Za-z_][A-Za-z_0-9]*", text)}
    names.update({"x": _X, "y": _Y, "log": sympy.log, "ln": sympy.log, "exp": sympy.exp, "sqrt": sympy.sqrt})
    expr = sympy.sympify(text, locals=names)
    if derivative:
        expr = sympy.diff(expr, {"x": _X, "y": _Y}[derivative])
    subs = {s: values[s.name] for s in expr.free_symbols if s.name in values}
    expr = expr.subs(subs)
    left = {s.name for s in expr.free_symbols} - {"x", "y"}
    if left:
        raise ValueError(f"unbound parameters {sorted(left)} in {text!r}")
    return sympy.lambdify((_X, _Y), expr, "math")


def melnikov_line_integral(system: PerturbedSystem, values: Mapping[str, float], r: float,
                           rtol: float = 1e-12, atol: float = 1e-14, closure_tol: float = 1e-8) -> float:
    """``integral over Gamma(r) of (Q_1 dx - P_1 dy) / R`` along the unperturbed flow.

    Gamma(r) is traversed counterclockwise, starting and ending at ``(r, 0)``.
    """
    if system.R is None:
        raise ValueError(f"{system.name} has no integrating factor")
    pert = system.perturbation(1)
    if pert is None:
        return 0.0
    b = NumericBinding(values, 0.0, rtol, atol)
    vals = _values(b, system)
    Rf = _expr_fn(system.R, vals)
    P1 = pert[0].numeric(vals)
    Q1 = pert[1].numeric(vals)
    f0 = system.field_numeric(vals, 0.0)

    def integrand(x, y):
        u, v = f0(x, y)
        p1 = sum(c * x ** i * y ** j for c, i, j in P1)
        q1 = sum(c * x ** i * y ** j for c, i, j in Q1)
        R = Rf(x, y)
        if abs(R) < 1e-14:
            raise IntegrationFailure("integrating factor vanishes on the orbit")
        return (q1 * u - p1 * v) / R

    base = system.without_perturbations()
    _, z = _full_turn(base, b, r, 0.0, extra=integrand)
    if abs(z[0] - r) > closure_tol * max(1.0, r):
        raise NonReturn(f"orbit through ({r}, 0) does not close: returned to {z[0]}")
    return float(z[3])


def melnikov_factor(system: PerturbedSystem, values: Mapping[str, float], r: float) -> float:
    """``-H_x(r, 0)``: the line integral equals this factor times the first-order displacement coefficient."""
    if system.H is None:
        raise ValueError(f"{system.name} has no first integral")
    vals = _values(NumericBinding(values), system)
    return -float(_expr_fn(system.H, vals, "x")(r, 0.0))


def first_integral_drift(system: PerturbedSystem, values: Mapping[str, float], r: float,
                         rtol: float = 1e-12, atol: float = 1e-14) -> float:
    """Relative change of H over one unperturbed period from ``(r, 0)``."""
    vals = _values(NumericBinding(values), system)
    H = _expr_fn(system.H, vals)
    b = NumericBinding(values, 0.0, rtol, atol)
    _, z = _full_turn(system.without_perturbations(), b, r, 0.0)
    h0 = H(r, 0.0)
    return abs(H(z[0], z[1]) - h0) / max(abs(h0), 1e-300)


def check_integrating_factor(system: PerturbedSystem, values: Mapping[str, float] | None = None,
                             samples: int = 20, radius: float = 0.2, seed: int = 0) -> float:
    """Max deviation of ``R * (-H_y, H_x)`` from the unperturbed field at random points."""
    vals = _values(NumericBinding(values or {}), system)
    Hx = _expr_fn(system.H, vals, "x")
    Hy = _expr_fn(system.H, vals, "y")
    R = _expr_fn(system.R, vals)
    f = system.field_numeric(vals, 0.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x, y = rng.uniform(-radius, radius, 2)
        u, v = f(x, y)
        ru = -R(x, y) * Hy(x, y)
        rv = R(x, y) * Hx(x, y)
        worst = max(worst, abs(u - ru), abs(v - rv))
    return worst


# -- cycle counting -------------------------------------------------------------

@dataclass
class CycleCount:
    count: int
    radii: list
    uncertain: list  # brackets whose sign change is not certified

    def to_dict(self) -> dict:
        return {"count": self.count, "radii": list(self.radii), "uncertain": [list(b) for b in self.uncertain]}


def count_cycles(profile: DisplacementProfile, system: PerturbedSystem | None = None,
                 refine_tol: float = 1e-6) -> CycleCount:
    """Certified sign changes of a displacement profile.

    A change between grid points ``i`` and ``i+1`` counts when both values
    exceed their error bars and the jump exceeds twice the combined error
    (a crude simple-zero certificate).  With ``system`` given, each root is
    refined by bisection on the displacement map.
    """
    radii, uncertain = [], []
    n = len(profile.r)
    for i in range(n - 1):
        d0, d1 = profile.d[i], profile.d[i + 1]
        e0, e1 = profile.err[i], profile.err[i + 1]
        if d0 * d1 >= 0:
            continue
        bracket = (profile.r[i], profile.r[i + 1])
        certified = abs(d0) > e0 and abs(d1) > e1 and abs(d1 - d0) > 2 * (e0 + e1)
        if not certified:
            uncertain.append(bracket)
            continue
        if system is not None and profile.binding is not None:
            radii.append(_bisect(system, profile.binding, bracket, d0, refine_tol))
        else:
            a, b = bracket
            radii.append(a - d0 * (b - a) / (d1 - d0))
    return CycleCount(len(radii), radii, uncertain)


def _bisect(system, binding, bracket, d_lo, tol):
    a, b = bracket
    s_lo = math.copysign(1.0, d_lo)
    while b - a > tol:
        m = 0.5 * (a + b)
        dm = return_map(system, binding, m) - m
        if math.copysign(1.0, dm) == s_lo:
            a = m
        else:
            b = m
    return 0.5 * (a + b)
