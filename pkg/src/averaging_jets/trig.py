"""Quasi-trigonometric polynomials in theta and truncated power series in r.

A :class:`QuasiTrigPoly` is a finite sum ``sum_p theta**p * f_p(theta)`` where
each ``f_p`` is a Fourier polynomial in the basis ``{1, cos k theta, sin k
theta}`` with :class:`~averaging_jets.ring.ParamPoly` coefficients.  The class
is closed under products (product-to-sum re-expansion), differentiation and
antidifferentiation, and it can be evaluated exactly at ``theta = 0`` and
``theta = 2 pi`` with ``pi`` kept symbolic.

Storage is flat: one packed integer per basis element
``(p << 16) | (k << 1) | kind`` (``kind`` 0 = cos, 1 = sin) mapping to the raw
coefficient dictionary of a ParamPoly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from gmpy2 import mpq

from .ring import ONE_KEY, PI_BIAS, ParamPoly, ZERO, _as_mpq, substitute

__all__ = ["QuasiTrigPoly", "FourierPoly", "RSeries", "trig_mul", "antiderivative", "eval_2pi",
           "series_compose", "series_d_dr", "trig_dot"]

_PSHIFT = 16
_KMASK = 0x7FFF

COS, SIN = 0, 1


def _tkey(p: int, k: int, kind: int) -> int:
    return (p << _PSHIFT) | (k << 1) | kind


def _untkey(t: int):
    return t >> _PSHIFT, (t >> 1) & _KMASK, t & 1


def _add_into(acc: dict, t: int, d: dict, sign=1):
    tgt = acc.get(t)
    if tgt is None:
        tgt = acc[t] = {}
    get = tgt.get
    if sign == 1:
        for m, c in d.items():
            tgt[m] = get(m, 0) + c
    else:
        for m, c in d.items():
            tgt[m] = get(m, 0) + sign * c


def _clean(acc: dict) -> dict:
    out = {}
    for t, d in acc.items():
        dd = {m: c for m, c in d.items() if c}
        if dd:
            out[t] = dd
    return out


class QuasiTrigPoly:
    """Immutable quasi-trigonometric polynomial with ParamPoly coefficients."""

    __slots__ = ("_d",)

    def __init__(self, entries: Mapping | None = None):
        # entries: {(p, k, 'cos'|'sin'): coefficient}
        acc: dict = {}
        for (p, k, kind), c in (entries or {}).items():
            kd = COS if kind in ("cos", COS) else SIN
            if k < 0:
                raise ValueError("harmonic index must be non-negative")
            if k == 0 and kd == SIN:
                continue
            c = ParamPoly.coerce(c)
            if c:
                _add_into(acc, _tkey(p, k, kd), c.terms)
        self._d = _clean(acc)

    @classmethod
    def _raw(cls, d: dict) -> "QuasiTrigPoly":
        q = object.__new__(cls)
        q._d = d
        return q

    # -- constructors ------------------------------------------------------
    @staticmethod
    def constant(c) -> "QuasiTrigPoly":
        c = ParamPoly.coerce(c)
        return QuasiTrigPoly._raw({_tkey(0, 0, COS): dict(c.terms)} if c else {})

    @staticmethod
    def cos(k: int = 1, coeff=1) -> "QuasiTrigPoly":
        return QuasiTrigPoly({(0, k, "cos"): coeff})

    @staticmethod
    def sin(k: int = 1, coeff=1) -> "QuasiTrigPoly":
        return QuasiTrigPoly({(0, k, "sin"): coeff})

    @staticmethod
    def theta(p: int = 1, coeff=1) -> "QuasiTrigPoly":
        return QuasiTrigPoly({(p, 0, "cos"): coeff})

    @staticmethod
    def cos_sin_monomial(a: int, b: int) -> "QuasiTrigPoly":
        """``cos(theta)**a * sin(theta)**b`` in the Fourier basis."""
        return QuasiTrigPoly._raw(_cs_monomial(a, b))

    # -- protocol ----------------------------------------------------------
    def entries(self):
        """Yield ``((p, k, 'cos'|'sin'), ParamPoly)`` in canonical order."""
        for t in sorted(self._d):
            p, k, kind = _untkey(t)
            yield (p, k, "sin" if kind else "cos"), ParamPoly._raw(dict(self._d[t]))

    def coefficient(self, p: int, k: int, kind: str = "cos") -> ParamPoly:
        d = self._d.get(_tkey(p, k, SIN if kind == "sin" else COS))
        return ParamPoly._raw(dict(d)) if d else ZERO

    def layers(self) -> dict[int, "QuasiTrigPoly"]:
        """Split into ``{p: Fourier polynomial}`` with value ``sum theta**p * layer_p``."""
        out: dict[int, dict] = {}
        for t, d in self._d.items():
            p = t >> _PSHIFT
            out.setdefault(p, {})[t & ((1 << _PSHIFT) - 1)] = d
        return {p: QuasiTrigPoly._raw(d) for p, d in sorted(out.items())}

    def theta_degree(self) -> int:
        return max((t >> _PSHIFT for t in self._d), default=-1)

    def max_harmonic(self) -> int:
        return max(((t >> 1) & _KMASK for t in self._d), default=-1)

    def n_terms(self) -> int:
        return sum(len(d) for d in self._d.values())

    def is_zero(self) -> bool:
        return not self._d

    def __bool__(self):
        return bool(self._d)

    def __eq__(self, other):
        if not isinstance(other, QuasiTrigPoly):
            return NotImplemented
        return self._d == other._d

    def __hash__(self):
        return hash(frozenset((t, frozenset(d.items())) for t, d in self._d.items()))

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = _coerce_q(other)
        acc = {t: dict(d) for t, d in self._d.items()}
        for t, d in other._d.items():
            _add_into(acc, t, d)
        return QuasiTrigPoly._raw(_clean(acc))

    __radd__ = __add__

    def __neg__(self):
        return QuasiTrigPoly._raw({t: {m: -c for m, c in d.items()} for t, d in self._d.items()})

    def __sub__(self, other):
        return self + (-_coerce_q(other))

    def __rsub__(self, other):
        return _coerce_q(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, QuasiTrigPoly):
            return trig_mul(self, other)
        if isinstance(other, ParamPoly):
            return self.scale(other)
        return self.scale(ParamPoly.coerce(other))

    __rmul__ = __mul__

    def scale(self, c) -> "QuasiTrigPoly":
        c = ParamPoly.coerce(c)
        if not c:
            return QuasiTrigPoly._raw({})
        if c.is_constant():
            v = c.terms[ONE_KEY]
            return QuasiTrigPoly._raw({t: {m: x * v for m, x in d.items()} for t, d in self._d.items()})
        ct = c.terms
        out = {}
        for t, d in self._d.items():
            prod = {}
            get = prod.get
            for m1, c1 in d.items():
                for m2, c2 in ct.items():
                    m = m1 + m2 - PI_BIAS
                    prod[m] = get(m, 0) + c1 * c2
            prod = {m: x for m, x in prod.items() if x}
            if prod:
                out[t] = prod
        return QuasiTrigPoly._raw(out)

    def derivative(self) -> "QuasiTrigPoly":
        acc: dict = {}
        for t, d in self._d.items():
            p, k, kind = _untkey(t)
            if p:
                _add_into(acc, _tkey(p - 1, k, kind), d, p)
            if k:
                if kind == COS:
                    _add_into(acc, _tkey(p, k, SIN), d, -k)
                else:
                    _add_into(acc, _tkey(p, k, COS), d, k)
        return QuasiTrigPoly._raw(_clean(acc))

    def antiderivative(self) -> "QuasiTrigPoly":
        return antiderivative(self)

    def eval_2pi(self) -> ParamPoly:
        return eval_2pi(self)

    def eval_zero(self) -> ParamPoly:
        acc: dict = {}
        for t, d in self._d.items():
            p, k, kind = _untkey(t)
            if p == 0 and kind == COS:
                for m, c in d.items():
                    acc[m] = acc.get(m, 0) + c
        return ParamPoly._raw({m: c for m, c in acc.items() if c})

    def substitute(self, bindings: Mapping) -> "QuasiTrigPoly":
        if not bindings:
            return self
        out = {}
        for t, d in self._d.items():
            v = substitute(ParamPoly._raw(d), bindings)
            if v:
                out[t] = dict(v.terms)
        return QuasiTrigPoly._raw(out)

    def map_coefficients(self, fn) -> "QuasiTrigPoly":
        out = {}
        for t, d in self._d.items():
            v = fn(ParamPoly._raw(d))
            if v:
                out[t] = dict(v.terms)
        return QuasiTrigPoly._raw(out)

    def to_float(self, theta: float, values: Mapping[str, float] | None = None) -> float:
        total = 0.0
        for t, d in self._d.items():
            p, k, kind = _untkey(t)
            basis = theta ** p * (math.sin(k * theta) if kind else math.cos(k * theta))
            total += basis * ParamPoly._raw(d).to_float(values)
        return total

    def __str__(self):
        if not self._d:
            return "0"
        parts = []
        for (p, k, kind), c in self.entries():
            basis = []
            if p:
                basis.append("theta" if p == 1 else f"theta^{p}")
            if k:
                basis.append(f"{kind}({k}*theta)" if k > 1 else f"{kind}(theta)")
            b = "*".join(basis)
            parts.append(f"({c})" + ("*" + b if b else ""))
        return " + ".join(parts)

    def __repr__(self):
        return f"QuasiTrigPoly({str(self)!r})"


FourierPoly = QuasiTrigPoly  # the theta-free case; see QuasiTrigPoly.layers()


def _coerce_q(x) -> QuasiTrigPoly:
    if isinstance(x, QuasiTrigPoly):
        return x
    return QuasiTrigPoly.constant(x)


def _targets(k1: int, s1: int, k2: int, s2: int):
    """Product of two basis functions as doubled ``[(k, kind, sign)]``."""
    ks = k1 + k2
    kd = k1 - k2
    if s1 == COS and s2 == COS:
        out = [(ks, COS, 1), (abs(kd), COS, 1)]
    elif s1 == SIN and s2 == SIN:
        out = [(abs(kd), COS, 1), (ks, COS, -1)]
    elif s1 == SIN:  # sin k1 * cos k2
        out = [(ks, SIN, 1)]
        if kd:
            out.append((abs(kd), SIN, 1 if kd > 0 else -1))
    else:  # cos k1 * sin k2
        out = [(ks, SIN, 1)]
        if kd:
            out.append((abs(kd), SIN, -1 if kd > 0 else 1))
    merged: dict = {}
    for k, kind, s in out:
        merged[(k, kind)] = merged.get((k, kind), 0) + s
    return [(k, kind, s) for (k, kind), s in merged.items() if s]


_TARGET_CACHE: dict = {}


def trig_mul(u: QuasiTrigPoly, v: QuasiTrigPoly) -> QuasiTrigPoly:
    """Product re-expanded in the canonical basis."""
    if not u._d or not v._d:
        return QuasiTrigPoly._raw({})
    acc: dict = {}
    _mul_acc(acc, u._d, v._d)
    return _halve(acc)


def trig_dot(pairs) -> QuasiTrigPoly:
    """``sum(u * v for u, v in pairs)`` with a single shared accumulator."""
    acc: dict = {}
    for u, v in pairs:
        if u._d and v._d:
            _mul_acc(acc, u._d, v._d)
    return _halve(acc)


def _halve(acc: dict) -> QuasiTrigPoly:
    half = mpq(1, 2)
    out = {}
    for t, d in acc.items():
        dd = {m: c * half for m, c in d.items() if c}
        if dd:
            out[t] = dd
    return QuasiTrigPoly._raw(out)


def _mul_acc(acc: dict, ud: dict, vd: dict):
    # accumulates twice the product
    cache = _TARGET_CACHE
    bias = PI_BIAS
    lo_mask = (1 << _PSHIFT) - 1
    for t1, d1 in ud.items():
        p1 = t1 >> _PSHIFT
        b1 = t1 & lo_mask
        for t2, d2 in vd.items():
            b2 = t2 & lo_mask
            tg = cache.get((b1, b2))
            if tg is None:
                tg = [((k << 1) | kind, s) for k, kind, s in
                      _targets(b1 >> 1, b1 & 1, b2 >> 1, b2 & 1)]
                cache[(b1, b2)] = tg
            pp = (p1 + (t2 >> _PSHIFT)) << _PSHIFT
            if len(tg) == 1:
                (bk, s), = tg
                a = acc.get(pp | bk)
                if a is None:
                    a = acc[pp | bk] = {}
                get = a.get
                if s == 1:
                    for m1, c1 in d1.items():
                        for m2, c2 in d2.items():
                            m = m1 + m2 - bias
                            a[m] = get(m, 0) + c1 * c2
                else:
                    for m1, c1 in d1.items():
                        for m2, c2 in d2.items():
                            m = m1 + m2 - bias
                            a[m] = get(m, 0) + s * (c1 * c2)
            else:
                (bk1, s1), (bk2, s2) = tg
                a1 = acc.get(pp | bk1)
                if a1 is None:
                    a1 = acc[pp | bk1] = {}
                a2 = acc.get(pp | bk2)
                if a2 is None:
                    a2 = acc[pp | bk2] = {}
                g1 = a1.get
                g2 = a2.get
                if s1 == 1 and s2 == 1:
                    for m1, c1 in d1.items():
                        for m2, c2 in d2.items():
                            m = m1 + m2 - bias
                            c = c1 * c2
                            a1[m] = g1(m, 0) + c
                            a2[m] = g2(m, 0) + c
                else:
                    for m1, c1 in d1.items():
                        for m2, c2 in d2.items():
                            m = m1 + m2 - bias
                            c = c1 * c2
                            a1[m] = g1(m, 0) + s1 * c
                            a2[m] = g2(m, 0) + s2 * c


@lru_cache(maxsize=None)
def _basis_antiderivative(p: int, k: int, kind: int) -> tuple:
    """Antiderivative of ``theta**p * basis_k`` as ((tkey, Fraction), ...)."""
    if k == 0:
        return ((_tkey(p + 1, 0, COS), Fraction(1, p + 1)),)
    if kind == COS:
        first = [(_tkey(p, k, SIN), Fraction(1, k))]
        if p == 0:
            return tuple(first)
        rest = _basis_antiderivative(p - 1, k, SIN)
        return tuple(first + [(t, -Fraction(p, k) * c) for t, c in rest])
    first = [(_tkey(p, k, COS), Fraction(-1, k))]
    if p == 0:
        return tuple(first)
    rest = _basis_antiderivative(p - 1, k, COS)
    return tuple(first + [(t, Fraction(p, k) * c) for t, c in rest])


_MPQ_CACHE: dict = {}


def _mq(f: Fraction) -> mpq:
    v = _MPQ_CACHE.get(f)
    if v is None:
        v = _MPQ_CACHE[f] = mpq(f.numerator, f.denominator)
    return v


def antiderivative(u: QuasiTrigPoly) -> QuasiTrigPoly:
    """The antiderivative ``V`` with ``V' = u`` and ``V(0) = 0``."""
    acc: dict = {}
    for t, d in u._d.items():
        p, k, kind = _untkey(t)
        for tt, c in _basis_antiderivative(p, k, kind):
            _add_into(acc, tt, d, _mq(c))
    # enforce V(0) = 0: only theta^0 cos terms are nonzero at 0
    at0: dict = {}
    for t, d in acc.items():
        p, k, kind = _untkey(t)
        if p == 0 and kind == COS:
            for m, c in d.items():
                at0[m] = at0.get(m, 0) + c
    if at0:
        _add_into(acc, _tkey(0, 0, COS), at0, -1)
    return QuasiTrigPoly._raw(_clean(acc))


def eval_2pi(u: QuasiTrigPoly) -> ParamPoly:
    """Exact value at ``theta = 2*pi``; ``theta**p`` becomes ``2**p * pi**p``."""
    acc: dict = {}
    for t, d in u._d.items():
        p, k, kind = _untkey(t)
        if kind == SIN:
            continue
        f = 2 ** p
        for m, c in d.items():
            mm = m + p  # pi occupies the lowest exponent field
            acc[mm] = acc.get(mm, 0) + c * f
    return ParamPoly._raw({m: c for m, c in acc.items() if c})


@lru_cache(maxsize=None)
def _cs_monomial_cached(a: int, b: int) -> QuasiTrigPoly:
    if a == 0 and b == 0:
        return QuasiTrigPoly.constant(1)
    if a > 0:
        return trig_mul(_cs_monomial_cached(a - 1, b), QuasiTrigPoly.cos(1))
    return trig_mul(_cs_monomial_cached(a, b - 1), QuasiTrigPoly.sin(1))


def _cs_monomial(a: int, b: int) -> dict:
    return {t: dict(d) for t, d in _cs_monomial_cached(a, b)._d.items()}


def _zero() -> QuasiTrigPoly:
    return QuasiTrigPoly._raw({})


class RSeries:
    """Truncated power series ``sum_{k=0}^{order} c_k(theta) r**k``.

    Coefficients beyond ``order`` are unknown, not zero; every binary
    operation truncates to the smaller order of its operands.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Sequence[QuasiTrigPoly], order: int | None = None):
        coeffs = [_coerce_q(c) for c in coeffs]
        if order is None:
            order = len(coeffs) - 1
        if order < 0:
            raise ValueError("order must be non-negative")
        coeffs = coeffs[: order + 1]
        coeffs += [_zero()] * (order + 1 - len(coeffs))
        self.coeffs = tuple(coeffs)
        self.order = order

    @staticmethod
    def zero(order: int) -> "RSeries":
        return RSeries([], order)

    @staticmethod
    def identity(order: int) -> "RSeries":
        """The series ``r``."""
        return RSeries([_zero(), QuasiTrigPoly.constant(1)], order)

    def __getitem__(self, k: int) -> QuasiTrigPoly:
        if k > self.order:
            raise IndexError(f"coefficient r^{k} beyond truncation order {self.order}")
        return self.coeffs[k]

    def truncate(self, order: int) -> "RSeries":
        return RSeries(self.coeffs[: order + 1], min(order, self.order))

    def __add__(self, other: "RSeries") -> "RSeries":
        n = min(self.order, other.order)
        return RSeries([self.coeffs[k] + other.coeffs[k] for k in range(n + 1)], n)

    def __sub__(self, other: "RSeries") -> "RSeries":
        n = min(self.order, other.order)
        return RSeries([self.coeffs[k] - other.coeffs[k] for k in range(n + 1)], n)

    def __neg__(self):
        return RSeries([-c for c in self.coeffs], self.order)

    def scale(self, c) -> "RSeries":
        if isinstance(c, QuasiTrigPoly):
            return RSeries([trig_mul(c, x) for x in self.coeffs], self.order)
        return RSeries([x.scale(c) for x in self.coeffs], self.order)

    def __mul__(self, other: "RSeries") -> "RSeries":
        if not isinstance(other, RSeries):
            return self.scale(other)
        n = min(self.order, other.order)
        out = []
        for k in range(n + 1):
            acc = _zero()
            for i in range(k + 1):
                a, b = self.coeffs[i], other.coeffs[k - i]
                if a and b:
                    acc = acc + trig_mul(a, b)
            out.append(acc)
        return RSeries(out, n)

    def valuation(self) -> int:
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return self.order + 1

    def d_dr(self) -> "RSeries":
        return series_d_dr(self)

    def compose(self, inner: "RSeries") -> "RSeries":
        return series_compose(self, inner)

    def geometric_inverse(self) -> "RSeries":
        """``1 / (1 + w)`` for ``self = w`` with zero constant term."""
        if self.coeffs[0]:
            raise ValueError("geometric inverse needs a zero constant term")
        n = self.order
        out = RSeries([QuasiTrigPoly.constant(1)], n)
        power = RSeries([QuasiTrigPoly.constant(1)], n)
        neg = -self
        for _ in range(n):
            power = power * neg
            if power.valuation() > n:
                break
            out = out + power
        return out

    def substitute(self, bindings: Mapping) -> "RSeries":
        return RSeries([c.substitute(bindings) for c in self.coeffs], self.order)

    def to_float(self, theta: float, r: float, values: Mapping[str, float] | None = None) -> float:
        return sum(c.to_float(theta, values) * r ** k for k, c in enumerate(self.coeffs) if c)

    def __eq__(self, other):
        if not isinstance(other, RSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __repr__(self):
        body = " + ".join(f"[{c}]*r^{k}" for k, c in enumerate(self.coeffs) if c) or "0"
        return f"RSeries({body}, order={self.order})"


def series_d_dr(F: RSeries) -> RSeries:
    """Formal r-derivative; the result has order ``F.order - 1``."""
    if F.order == 0:
        return RSeries.zero(0)
    return RSeries([F.coeffs[k].scale(k) for k in range(1, F.order + 1)], F.order - 1)


def powers_table(L: RSeries, nmax: int) -> list[RSeries]:
    """``[L**0, L**1, ..., L**nmax]`` truncated at ``L.order``."""
    out = [RSeries([QuasiTrigPoly.constant(1)], L.order), L]
    for _ in range(2, nmax + 1):
        out.append(out[-1] * L)
    return out[: nmax + 1]


def series_compose(F: RSeries, L: RSeries) -> RSeries:
    """Truncated composition ``F(theta, L(theta, r))``."""
    if L.coeffs[0]:
        raise ValueError("inner series must have zero constant term")
    n = min(F.order, L.order)
    L = L.truncate(n)
    out = RSeries([F.coeffs[0]], n)
    power = RSeries([QuasiTrigPoly.constant(1)], n)
    for k in range(1, n + 1):
        power = power * L
        if F.coeffs[k]:
            out = out + power.scale(F.coeffs[k])
    return out
