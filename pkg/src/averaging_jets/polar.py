"""Planar polynomial systems, their polar reduction and the built-in catalog.

A :class:`PerturbedSystem` holds an unperturbed center ``Z = (P, Q)`` with
linear part ``(-y, x)`` and optional perturbations ``Z_1``, ``Z_2``.
:func:`to_polar` expands ``dr/dtheta = F_0 + eps F_1 + eps^2 F_2`` in ``r`` up to
a requested order, inverting the angular denominator with a truncated
geometric series.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Mapping

from .ring import ONE, ParamName, ParamPoly, ZERO, parse_poly, perturbation_name, var, _decode, _encode, _index
from .trig import QuasiTrigPoly, RSeries

__all__ = [
    "PlanarPoly",
    "PerturbedSystem",
    "PolarForm",
    "to_polar",
    "catalog",
    "catalog_names",
    "generic_perturbation",
    "parse_system",
    "DegenerateLinearPart",
    "CATALOG_CONDITIONS",
    "conditions",
]

DEFAULT_ORDER_CAP = 17


class DegenerateLinearPart(ValueError):
    """The unperturbed field is not normalised to linear part (-y, x)."""


class PlanarPoly:
    """Polynomial in ``x, y`` with ParamPoly coefficients: ``{(i, j): coeff}``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[tuple[int, int], object] | None = None):
        out = {}
        for (i, j), c in (coeffs or {}).items():
            c = ParamPoly.coerce(c)
            if c:
                out[(i, j)] = out.get((i, j), ZERO) + c
        self.coeffs = {k: v for k, v in out.items() if v}

    @staticmethod
    def parse(text: str, names=None) -> "PlanarPoly":
        """Parse a polynomial in ``x`` and ``y`` written in the ring grammar."""
        allowed = None if names is None else set(names) | {"x", "y"}
        p = parse_poly(text, allowed)
        ix, iy = _index("x"), _index("y")
        out: dict = {}
        for key, c in p.terms.items():
            ex = _decode(key)
            i = ex.pop(ix, 0)
            j = ex.pop(iy, 0)
            rest = ParamPoly._raw({_encode(ex): c})
            out[(i, j)] = out.get((i, j), ZERO) + rest
        return PlanarPoly(out)

    def degree(self) -> int:
        return max((i + j for i, j in self.coeffs), default=-1)

    def homogeneous(self, d: int) -> dict:
        return {(i, j): c for (i, j), c in self.coeffs.items() if i + j == d}

    def __add__(self, other: "PlanarPoly") -> "PlanarPoly":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, ZERO) + c
        return PlanarPoly(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "PlanarPoly":
        return PlanarPoly({k: v * c for k, v in self.coeffs.items()})

    def substitute(self, bindings: Mapping) -> "PlanarPoly":
        return PlanarPoly({k: v.substitute(bindings) for k, v in self.coeffs.items()})

    def parameters(self) -> list[str]:
        names: set[str] = set()
        for c in self.coeffs.values():
            names.update(c.variables())
        return sorted(names)

    def numeric(self, values: Mapping[str, float]) -> list[tuple[float, int, int]]:
        """Float coefficient list ``[(c, i, j)]`` for fast evaluation."""
        return [(c.to_float(values), i, j) for (i, j), c in sorted(self.coeffs.items())]

    def __eq__(self, other):
        return isinstance(other, PlanarPoly) and self.coeffs == other.coeffs

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for (i, j), c in sorted(self.coeffs.items(), key=lambda kv: (kv[0][0] + kv[0][1], -kv[0][0])):
            mono = "*".join(
                [s for s in (("x" if i == 1 else f"x^{i}") if i else "", ("y" if j == 1 else f"y^{j}") if j else "") if s]
            )
            cs = str(c)
            if not mono:
                parts.append(f"({cs})")
            elif cs == "1":
                parts.append(mono)
            else:
                parts.append(f"({cs})*{mono}")
        return " + ".join(parts)

    __repr__ = __str__


@dataclass(frozen=True)
class PerturbedSystem:
    """Unperturbed center plus optional first/second order perturbations.

    ``H`` and ``R`` are optional expression strings (first integral and
    integrating factor) used only by numeric code; symbolic jets never touch
    them.  ``family`` records the family-parameter bindings already applied.
    """

    name: str
    P: PlanarPoly
    Q: PlanarPoly
    perturbations: dict = field(default_factory=dict)  # order -> (P_i, Q_i)
    H: str | None = None
    R: str | None = None
    family: dict = field(default_factory=dict)
    params: tuple = ()
    definitions: dict = field(default_factory=dict)

    def __post_init__(self):
        P1, Q1 = self.P.homogeneous(1), self.Q.homogeneous(1)
        ok = (P1 == {(0, 1): -ONE}) and (Q1 == {(1, 0): ONE})
        if not ok or self.P.homogeneous(0) or self.Q.homogeneous(0):
            raise DegenerateLinearPart(
                f"{self.name}: linear part must be exactly (-y, x), got P1={P1}, Q1={Q1}"
            )
        for i, (Pi, Qi) in self.perturbations.items():
            if Pi.homogeneous(0) or Qi.homogeneous(0):
                raise ValueError(f"perturbation of order {i} has a constant term")

    @property
    def degree(self) -> int:
        return max(self.P.degree(), self.Q.degree())

    def perturbation(self, i: int):
        return self.perturbations.get(i)

    def with_perturbation(self, i: int, Pi: PlanarPoly, Qi: PlanarPoly) -> "PerturbedSystem":
        pert = dict(self.perturbations)
        pert[i] = (Pi, Qi)
        return replace(self, perturbations=pert)

    def without_perturbations(self) -> "PerturbedSystem":
        return replace(self, perturbations={})

    def substitute(self, bindings: Mapping) -> "PerturbedSystem":
        """Apply parameter bindings to every polynomial (family or perturbative)."""
        bindings = {str(k): ParamPoly.coerce(v) for k, v in bindings.items()}
        pert = {i: (Pi.substitute(bindings), Qi.substitute(bindings)) for i, (Pi, Qi) in self.perturbations.items()}
        fam = dict(self.family)
        for k, v in bindings.items():
            if k in self.params:
                fam[k] = v
        return replace(
            self,
            P=self.P.substitute(bindings),
            Q=self.Q.substitute(bindings),
            perturbations=pert,
            family=fam,
            definitions={k: v.substitute(bindings) for k, v in self.definitions.items()},
        )

    def parameters(self) -> list[str]:
        names = set(self.P.parameters()) | set(self.Q.parameters())
        for Pi, Qi in self.perturbations.values():
            names |= set(Pi.parameters()) | set(Qi.parameters())
        return sorted(names)

    def perturbation_parameters(self, order: int | None = None) -> list[str]:
        names = set()
        for i, (Pi, Qi) in self.perturbations.items():
            if order is None or i == order:
                names |= set(Pi.parameters()) | set(Qi.parameters())
        return sorted((n for n in names if ParamName(n).kind == "perturbation"), key=lambda n: ParamName(n).sort_key())

    def field_numeric(self, values: Mapping[str, float], eps: float = 0.0):
        """Return ``f(x, y) -> (xdot, ydot)`` for the float parameter point."""
        missing = [n for n in self.parameters() if n != "pi" and n not in values]
        if missing:
            raise ValueError(f"{self.name}: no value for {', '.join(missing)}")
        P = self.P.numeric(values)
        Q = self.Q.numeric(values)
        extra = []
        for i, (Pi, Qi) in sorted(self.perturbations.items()):
            if eps:
                w = eps ** i
                extra.append(([(c * w, a, b) for c, a, b in Pi.numeric(values)],
                              [(c * w, a, b) for c, a, b in Qi.numeric(values)]))
        Pt = P + [t for e in extra for t in e[0]]
        Qt = Q + [t for e in extra for t in e[1]]
        Pt = [t for t in Pt if t[0] != 0.0]
        Qt = [t for t in Qt if t[0] != 0.0]

        def f(x, y):
            u = 0.0
            for c, a, b in Pt:
                u += c * x ** a * y ** b
            v = 0.0
            for c, a, b in Qt:
                v += c * x ** a * y ** b
            return u, v

        return f

    def __str__(self):
        lines = [f"system {self.name}", f"  xdot = {self.P}", f"  ydot = {self.Q}"]
        for i, (Pi, Qi) in sorted(self.perturbations.items()):
            lines.append(f"  P{i} = {Pi}")
            lines.append(f"  Q{i} = {Qi}")
        if self.H:
            lines.append(f"  H = {self.H}")
        if self.R:
            lines.append(f"  R = {self.R}")
        return "\n".join(lines)


@dataclass(frozen=True)
class PolarForm:
    """Polar right-hand sides as r-series truncated at ``order``.

    ``f0`` and ``g0`` are the numerator/denominator data of F_0 (r-series of
    order ``order - 2`` and ``order - 1``); ``eta`` holds the denominator powers
    of F_1 and F_2, kept as metadata only.
    """

    F0: RSeries
    F1: RSeries
    F2: RSeries
    f0: RSeries
    g0: RSeries
    order: int
    eta: tuple = (2, 3)


def _polar_part(Px: PlanarPoly, Qy: PlanarPoly, dmin: int, dmax: int):
    """Radial numerator c*P + s*Q and angular numerator c*Q - s*P by r-degree."""
    c = QuasiTrigPoly.cos(1)
    s = QuasiTrigPoly.sin(1)
    N, D = {}, {}
    for d in range(dmin, dmax + 1):
        Pd, Qd = Px.homogeneous(d), Qy.homogeneous(d)
        if not Pd and not Qd:
            continue
        Pt = sum((QuasiTrigPoly.cos_sin_monomial(i, j).scale(v) for (i, j), v in Pd.items()), QuasiTrigPoly())
        Qt = sum((QuasiTrigPoly.cos_sin_monomial(i, j).scale(v) for (i, j), v in Qd.items()), QuasiTrigPoly())
        N[d] = c * Pt + s * Qt
        D[d] = c * Qt - s * Pt
    return N, D


def to_polar(system: PerturbedSystem, order: int, cap: int = DEFAULT_ORDER_CAP) -> PolarForm:
    """Expand the polar right-hand sides of ``system`` up to ``r**order``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > cap:
        raise ValueError(f"order {order} exceeds the configured cap {cap}")
    j = order
    N0, D0 = _polar_part(system.P, system.Q, 2, system.degree)
    # dr/dtheta = N / (1 + w) with w = sum_{d>=2} D0_d r^{d-1} + eps D1/r + eps^2 D2/r
    n0 = RSeries([N0.get(k, QuasiTrigPoly()) for k in range(j + 1)], j)
    w0 = RSeries([D0.get(k + 1, QuasiTrigPoly()) for k in range(j + 1)], j)
    V = w0.geometric_inverse()
    V2 = V * V
    F0 = n0 * V
    zero = RSeries.zero(j)
    series = {}
    for i in (1, 2):
        pert = system.perturbation(i)
        if pert is None:
            series[i] = (zero, zero)
            continue
        dmax = max(pert[0].degree(), pert[1].degree(), 1)
        Ni, Di = _polar_part(pert[0], pert[1], 1, dmax)
        series[i] = (
            RSeries([Ni.get(k, QuasiTrigPoly()) for k in range(j + 1)], j),
            RSeries([Di.get(k + 1, QuasiTrigPoly()) for k in range(j + 1)], j),
        )
    n1, w1 = series[1]
    n2, w2 = series[2]
    F1 = n1 * V - (n0 * w1) * V2
    V3 = V2 * V
    F2 = n2 * V - (n1 * w1 + n0 * w2) * V2 + (n0 * (w1 * w1)) * V3
    f0 = RSeries([N0.get(k + 2, QuasiTrigPoly()) for k in range(max(j - 1, 1))], max(j - 2, 0))
    g0 = RSeries([D0.get(k + 2, QuasiTrigPoly()) for k in range(j)], j - 1)
    return PolarForm(F0=F0, F1=F1, F2=F2, f0=f0, g0=g0, order=j)


# -- catalog ------------------------------------------------------------------

_CATALOG = {
    "LV": dict(
        P="-y*(1+x)",
        Q="x*(1+y)",
        H="x + y - log((x+1)*(y+1))",
        R="(x+1)*(y+1)",
        params=(),
    ),
    "H": dict(
        P="-y - alpha/2*x^2 - beta*x*y - 3*gamma/2*y^2",
        Q="x + 3*delta/2*x^2 + alpha*x*y + beta/2*y^2",
        H="(x**2 + y**2 + delta*x**3 + alpha*x**2*y + beta*x*y**2 + gamma*y**3)/2",
        R="1",
        params=("alpha", "beta", "gamma", "delta"),
        definitions={
            "d": "alpha^3*beta - alpha*beta^3 + 6*alpha^2*beta*gamma - 2*beta^3*gamma + 9*alpha*beta*gamma^2"
                 " + 2*alpha^3*delta - 6*alpha*beta^2*delta + 9*alpha^2*gamma*delta - 9*beta^2*gamma*delta"
                 " - 27*gamma^3*delta - 9*alpha*beta*delta^2 + 27*gamma*delta^3",
        },
    ),
    "CR1": dict(
        P="-y*(1 - 2*alpha*x - 2*x^2)",
        Q="x + alpha*(y^2 - x^2) + 2*x*y^2",
        H="(x**2 + y**2)/(1 - 2*x*(alpha + x))",
        R="(1 - 2*x*(alpha + x))**2/2",
        params=("alpha",),
    ),
    "S1": dict(
        P="-y + x^2 - y^2",
        Q="x*(1 + 2*y)",
        H="(x**2 + y**2)/(1 + 2*y)",
        R="(1 + 2*y)**2/2",
        params=(),
    ),
    "S2": dict(
        P="-y + x^2",
        Q="x*(1 + y)",
        H="(x**2 + y**2)/(1 + y)**2",
        R="(1 + y)**3/2",
        params=(),
    ),
    "S3": dict(
        P="-y - 4/3*x^2",
        Q="x*(1 - 16/3*y)",
        H="(16*x**4 - 24*x**2*y + 9*x**2 + 9*y**2)/(3 - 16*y)",
        R="(16*y - 3)**2/(6*(32*x**2 - 24*y + 9))",
        params=(),
    ),
    "S4": dict(
        P="-y + 16/3*x^2 - 4/3*y^2",
        Q="x*(1 + 8/3*y)",
        H="(9*x**2 + (3 + 4*y)**2*y**2)/(3 + 8*y)**4",
        R="(3 + 8*y)**5/54",
        params=(),
    ),
}

# Vanishing conditions for the first-order function, as binding strings.
CATALOG_CONDITIONS = {
    "LV": {"a110": "-b101", "a102": "-b102 - a120 - b120"},
    "H": {"a110": "-b101", "a111": "-2*b102", "b111": "-2*a120"},
    "CR1": {
        "a110": "-b101",
        "a130": "b121",
        "a112": "-alpha*(a120 + a102) + 2*(alpha^2 + 1)*b101 - b121",
        "b103": "-alpha*(a120 + a102) + 2*(alpha^2 + 1)*b101 - b121",
    },
    "S1": {"a110": "-(b102 + b120)/2", "b101": "(b102 + b120)/2"},
    "S2": {"a110": "-b101", "b102": "a111", "b120": "0"},
    "S3": {"a110": "(3*b102 + 4*b120)/16", "b101": "-(3*b102 + 4*b120)/16", "a111": "-b102/2"},
    "S4": {"a110": "-b101", "a111": "8*b101 + 4*b120", "b102": "8/3*b101 + 1/2*b120"},
}


def conditions(system: PerturbedSystem) -> dict:
    """First-order vanishing conditions of a catalog system, family bindings applied."""
    if system.name not in CATALOG_CONDITIONS:
        raise KeyError(f"no stored conditions for {system.name!r}")
    fam = dict(system.family)
    return {k: parse_poly(v).substitute(fam) for k, v in CATALOG_CONDITIONS[system.name].items()}


def catalog_names() -> list[str]:
    return list(_CATALOG)


def catalog(name: str, bindings: Mapping | None = None) -> PerturbedSystem:
    """Built-in unperturbed center ``name`` with optional family bindings.

    Unbound family parameters stay symbolic.
    """
    key = {"HAM": "H", "CR": "CR1"}.get(name.upper(), name)
    if key not in _CATALOG:
        raise KeyError(f"unknown catalog system {name!r}; known: {', '.join(_CATALOG)}")
    spec = _CATALOG[key]
    sys_ = PerturbedSystem(
        name=key,
        P=PlanarPoly.parse(spec["P"]),
        Q=PlanarPoly.parse(spec["Q"]),
        H=spec["H"],
        R=spec["R"],
        params=spec["params"],
        definitions={k: parse_poly(v) for k, v in spec.get("definitions", {}).items()},
    )
    if bindings:
        unknown = set(map(str, bindings)) - set(spec["params"])
        if unknown:
            raise KeyError(f"{key} has no family parameter(s) {sorted(unknown)}")
        sys_ = sys_.substitute(bindings)
    return sys_


def generic_perturbation(system: PerturbedSystem, order: int, degree: int | None = None) -> PerturbedSystem:
    """Attach ``P_i = sum a_{ikl} x^k y^l``, ``Q_i = sum b_{ikl} x^k y^l`` (1 <= k+l <= n)."""
    if order not in (1, 2):
        raise ValueError("perturbation order must be 1 or 2")
    n = system.degree if degree is None else degree
    Pi, Qi = {}, {}
    for tot in range(1, n + 1):
        for k in range(tot, -1, -1):
            l = tot - k
            Pi[(k, l)] = var(perturbation_name("a", order, k, l))
            Qi[(k, l)] = var(perturbation_name("b", order, k, l))
    return system.with_perturbation(order, PlanarPoly(Pi), PlanarPoly(Qi))


# -- system-definition files --------------------------------------------------

_LINE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(.+?)\s*$")


def parse_system(text: str, name: str = "custom") -> PerturbedSystem:
    """Parse the ``key = value`` system-definition format.

    Recognised keys: ``degree``, ``P``, ``Q``, ``P1``, ``Q1``, ``P2``, ``Q2``,
    ``H``, ``R``, ``params`` (``[alpha, beta]``) and ``name``.  Lines starting
    with ``#`` are comments.  Errors carry the offending line number.
    """
    fields: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = m.groups()
        if key not in ("degree", "P", "Q", "P1", "Q1", "P2", "Q2", "H", "R", "params", "name"):
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        fields[key] = (lineno, val)
    for req in ("P", "Q"):
        if req not in fields:
            raise ValueError(f"missing required key {req!r}")
    params: tuple = ()
    if "params" in fields:
        lineno, val = fields["params"]
        inner = val.strip()
        if not (inner.startswith("[") and inner.endswith("]")):
            raise ValueError(f"line {lineno}: params must be a bracketed list")
        params = tuple(p.strip() for p in inner[1:-1].split(",") if p.strip())

    def poly(key, allow_pert):
        lineno, val = fields[key]
        try:
            p = PlanarPoly.parse(val)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        for n in p.parameters():
            kind = ParamName(n).kind
            if n in params or (allow_pert and kind == "perturbation"):
                continue
            raise ValueError(f"line {lineno}: undeclared parameter {n!r} in {key}")
        return p

    P, Q = poly("P", False), poly("Q", False)
    if "degree" in fields:
        lineno, val = fields["degree"]
        if int(val) != max(P.degree(), Q.degree()):
            raise ValueError(f"line {lineno}: declared degree {val} does not match P, Q")
    if "name" in fields:
        name = fields["name"][1]
    try:
        sys_ = PerturbedSystem(
            name=name, P=P, Q=Q,
            H=fields["H"][1] if "H" in fields else None,
            R=fields["R"][1] if "R" in fields else None,
            params=params,
        )
    except DegenerateLinearPart as exc:
        raise ValueError(f"line {fields['P'][0]}: {exc}") from exc
    for i in (1, 2):
        if f"P{i}" in fields or f"Q{i}" in fields:
            Pi = poly(f"P{i}", True) if f"P{i}" in fields else PlanarPoly()
            Qi = poly(f"Q{i}", True) if f"Q{i}" in fields else PlanarPoly()
            sys_ = sys_.with_perturbation(i, Pi, Qi)
    return sys_
