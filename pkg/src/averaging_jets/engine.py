"""Flow jets of the polar equation and the averaging-function jets.

Writing the flow of ``dr/dtheta = F_0 + eps F_1 + eps^2 F_2`` as
``L_0 + eps L_1 + eps^2 L_2`` and expanding each ``L_i`` in powers of the
initial radius, every coefficient ``l_{i,k}(theta)`` satisfies a linear ODE
whose right-hand side only involves lower ``k``.  Each step is therefore one
antiderivative of a quasi-trigonometric polynomial.  The jet coefficients are
``m_{i,k} = l_{i,k}(2 pi)``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Mapping

from .polar import DEFAULT_ORDER_CAP, PerturbedSystem, PolarForm, to_polar
from .ring import ParamPoly, ZERO
from .trig import QuasiTrigPoly, RSeries, antiderivative, eval_2pi, trig_dot

__all__ = ["FlowJet", "Jet", "flow_jet_0", "flow_jet_1", "flow_jet_2", "averaging_jet", "MissingPerturbation"]

log = logging.getLogger(__name__)


class MissingPerturbation(ValueError):
    pass


@dataclass(frozen=True)
class FlowJet:
    """Coefficient functions ``l_{i,1..j}`` of one flow order."""

    order: int
    coeffs: tuple  # l_{i,k} for k = 1..j

    @property
    def j(self) -> int:
        return len(self.coeffs)

    def l(self, k: int) -> QuasiTrigPoly:
        return self.coeffs[k - 1]

    def series(self) -> RSeries:
        return RSeries([QuasiTrigPoly()] + list(self.coeffs), self.j)

    def at_2pi(self) -> list[ParamPoly]:
        return [eval_2pi(c) for c in self.coeffs]


@dataclass(frozen=True)
class Jet:
    """``M_i^[j](r) = sum_k m_{i,k} r^k`` with exact ParamPoly coefficients."""

    order: int
    coeffs: tuple  # m_{i,k} for k = 1..j
    system: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def j(self) -> int:
        return len(self.coeffs)

    def m(self, k: int) -> ParamPoly:
        return self.coeffs[k - 1]

    def __getitem__(self, k: int) -> ParamPoly:
        return self.m(k)

    def substitute(self, bindings: Mapping) -> "Jet":
        return Jet(self.order, tuple(c.substitute(bindings) for c in self.coeffs), self.system, dict(self.meta))

    def truncate(self, j: int) -> "Jet":
        return Jet(self.order, self.coeffs[:j], self.system, dict(self.meta))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def parameters(self) -> list[str]:
        names: set = set()
        for c in self.coeffs:
            names.update(c.variables())
        return sorted(names)

    def evaluate(self, r: float, values: Mapping[str, float] | None = None) -> float:
        """Float value of the jet polynomial at radius ``r``."""
        return sum(c.to_float(values) * r ** k for k, c in enumerate(self.coeffs, 1) if not c.is_zero())

    def polynomial(self, values: Mapping | None = None) -> list:
        """Exact coefficient list after substituting numeric values."""
        return [c.substitute(values or {}) for c in self.coeffs]

    def to_dict(self) -> dict:
        return {"i": self.order, "j": self.j,
                "coefficients": [{"k": k, "poly": str(c)} for k, c in enumerate(self.coeffs, 1)]}

    def __str__(self):
        return "\n".join(f"m{self.order},{k} = {c}" for k, c in enumerate(self.coeffs, 1))


# -- composition helpers ------------------------------------------------------

class _Powers:
    """Coefficients ``[r^k] L_0^n``, filled as the ``l_{0,k}`` become known."""

    def __init__(self, j: int):
        self.j = j
        self.tab = {(0, 0): QuasiTrigPoly.constant(1)}
        self.l = {}

    def get(self, n: int, k: int) -> QuasiTrigPoly | None:
        if n == 0:
            return self.tab[(0, 0)] if k == 0 else None
        if k < n:
            return None
        return self.tab.get((n, k))

    def fill(self, k: int):
        """Compute ``[r^k] L_0^n`` for ``n >= 2`` (needs ``l_{0,m}``, ``m <= k - 1``)."""
        for n in range(2, k + 1):
            pairs = []
            for m in range(1, k - n + 2):
                prev = self.get(n - 1, k - m)
                if prev is not None and self.l[m]:
                    pairs.append((self.l[m], prev))
            self.tab[(n, k)] = trig_dot(pairs)

    def set_l(self, k: int, lk: QuasiTrigPoly):
        self.l[k] = lk
        self.tab[(1, k)] = lk


def _composed(F: RSeries, pw: _Powers, k: int, deriv: int = 0) -> QuasiTrigPoly:
    """``[r^k]`` of ``(d/dr)^deriv F`` evaluated at ``r = L_0``."""
    pairs = []
    for n in range(deriv, min(F.order, k + deriv) + 1):
        c = F.coeffs[n]
        if not c:
            continue
        p = pw.get(n - deriv, k)
        if p is None:
            continue
        f = 1
        for t in range(deriv):
            f *= n - t
        pairs.append((c.scale(f) if f != 1 else c, p))
    return trig_dot(pairs)


def _stats(tag: str, k: int, lk: QuasiTrigPoly, t0: float):
    if log.isEnabledFor(logging.INFO):
        n_params = sum(len(d) for d in lk._d.values())
        log.info("%s k=%d basis=%d terms=%d theta^%d %.2fs", tag, k, len(lk._d), n_params,
                 lk.theta_degree() if lk._d else 0, time.perf_counter() - t0)


# -- recursions ---------------------------------------------------------------

def flow_jet_0(polar: PolarForm, j: int, _powers: _Powers | None = None) -> FlowJet:
    """``l_{0,1} = 1`` and ``l_{0,k}' = [r^k] F_0(theta, L_0)`` for ``k >= 2``."""
    _check_order(polar, j)
    pw = _powers if _powers is not None else _Powers(j)
    pw.set_l(1, QuasiTrigPoly.constant(1))
    for k in range(2, j + 1):
        t0 = time.perf_counter()
        pw.fill(k)
        rhs = _composed(polar.F0, pw, k)
        pw.set_l(k, antiderivative(rhs))
        _stats("l0", k, pw.l[k], t0)
    return FlowJet(0, tuple(pw.l[k] for k in range(1, j + 1)))


def _powers_for(L0: FlowJet, j: int) -> _Powers:
    pw = _Powers(j)
    for k in range(1, j + 1):
        pw.set_l(k, L0.l(k))
        pw.fill(k)
    return pw


def _derivative_series(polar: PolarForm, pw: _Powers, F: RSeries, deriv: int, upto: int) -> list:
    return [_composed(F, pw, k, deriv) for k in range(upto + 1)]


def flow_jet_1(polar: PolarForm, L0: FlowJet, j: int, _powers: _Powers | None = None) -> FlowJet:
    """``l_{1,k}' = [r^k] (F_1(L_0) + dF_0/dr(L_0) L_1)``, ``l_{1,k}(0) = 0``."""
    _check_order(polar, j)
    pw = _powers if _powers is not None else _powers_for(L0, j)
    G0 = _derivative_series(polar, pw, polar.F0, 1, j - 1)
    out = []
    for k in range(1, j + 1):
        t0 = time.perf_counter()
        pairs = [(G0[a], out[k - a - 1]) for a in range(1, k) if G0[a] and out[k - a - 1]]
        rhs = _composed(polar.F1, pw, k) + trig_dot(pairs)
        out.append(antiderivative(rhs))
        _stats("l1", k, out[-1], t0)
    return FlowJet(1, tuple(out))


def flow_jet_2(polar: PolarForm, L0: FlowJet, L1: FlowJet, j: int, _powers: _Powers | None = None) -> FlowJet:
    """Second-order flow coefficients in the averaging normalization.

    The returned ``l_{2,k}`` solve ``y_2' = 2 F_2(L_0) + B L_1 + dF_0/dr(L_0) y_2``
    with ``B = 2 dF_1/dr(L_0) + d^2F_0/dr^2(L_0) L_1``, so the flow is
    ``L_0 + eps L_1 + eps^2 y_2 / 2 + O(eps^3)``.
    """
    _check_order(polar, j)
    pw = _powers if _powers is not None else _powers_for(L0, j)
    G0 = _derivative_series(polar, pw, polar.F0, 1, j - 1)
    dF1 = _derivative_series(polar, pw, polar.F1, 1, j - 1)
    d2F0 = _derivative_series(polar, pw, polar.F0, 2, j - 2)
    l1 = [None] + list(L1.coeffs)
    # B_c for c = 0..j-1
    B = []
    for c in range(j):
        pairs = [(d2F0[a], l1[c - a]) for a in range(0, c) if d2F0[a] and l1[c - a]]
        B.append(dF1[c].scale(2) + trig_dot(pairs))
    out = []
    for k in range(1, j + 1):
        t0 = time.perf_counter()
        pairs = [(B[k - b], l1[b]) for b in range(1, k + 1) if B[k - b] and l1[b]]
        pairs += [(G0[a], out[k - a - 1]) for a in range(1, k) if G0[a] and out[k - a - 1]]
        rhs = _composed(polar.F2, pw, k).scale(2) + trig_dot(pairs)
        out.append(antiderivative(rhs))
        _stats("l2", k, out[-1], t0)
    return FlowJet(2, tuple(out))


def _check_order(polar: PolarForm, j: int):
    if j < 1:
        raise ValueError("jet order must be >= 1")
    if j > polar.order:
        raise ValueError(f"polar form has order {polar.order} < requested {j}")


def averaging_jet(system: PerturbedSystem, i: int, j: int, cap: int = DEFAULT_ORDER_CAP,
                  return_flows: bool = False):
    """Jet ``M_i^[j]`` of the i-th order averaging function of ``system``.

    The displacement of the return map is ``eps M_1 + eps^2 M_2 / 2 + O(eps^3)``.
    For ``i = 2`` the first-order perturbation must be attached (possibly zero)
    and is used exactly as given: apply first-order vanishing conditions to the
    system beforehand.
    """
    if i not in (1, 2):
        raise ValueError("averaging order must be 1 or 2")
    if i == 2 and system.perturbation(1) is None:
        raise MissingPerturbation("second-order jet requested without first-order perturbation data")
    t0 = time.perf_counter()
    polar = to_polar(system, j, cap=cap)
    pw = _Powers(j)
    L0 = flow_jet_0(polar, j, pw)
    # the table filled during L0 already holds every [r^k] L_0^n with k <= j
    L1 = flow_jet_1(polar, L0, j, pw)
    flows = [L0, L1]
    if i == 2:
        flows.append(flow_jet_2(polar, L0, L1, j, pw))
    target = flows[i]
    jet = Jet(i, tuple(target.at_2pi()), system.name,
              {"seconds": time.perf_counter() - t0, "family": {k: str(v) for k, v in system.family.items()}})
    log.info("jet %s i=%d j=%d done in %.2fs", system.name, i, j, jet.meta["seconds"])
    if return_flows:
        return jet, flows
    return jet
