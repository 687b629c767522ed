"""Exact sparse multivariate polynomials over the rationals.

Every symbolic quantity in the package (perturbation coefficients, family
parameters, auxiliary parameters and the formal transcendental ``pi``) lives in
:class:`ParamPoly`.  Monomials are packed into a single Python integer, one
16-bit exponent field per registered variable, so that multiplying two
monomials is one integer addition.  ``pi`` owns the lowest field and is stored
with a bias, which lets it carry negative exponents: it is a unit of the ring
and is never bound, eliminated or approximated.

Coefficients are ``gmpy2.mpq`` rationals.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Mapping

from gmpy2 import mpq

__all__ = [
    "ParamName",
    "specialize_pi",
    "ParamPoly",
    "PI",
    "ZERO",
    "ONE",
    "var",
    "const",
    "parse_poly",
    "collect_linear",
    "substitute",
    "perturbation_name",
    "NonLinearError",
    "CyclicBindingError",
    "ParseError",
]

SHIFT = 16
FIELD = (1 << SHIFT) - 1
PI_BIAS = 1 << 15
ONE_KEY = PI_BIAS

_NAMES: list[str] = ["pi"]
_INDEX: dict[str, int] = {"pi": 0}

_PERT_RE = re.compile(r"^([ab])([1-9])([0-9])([0-9])$")
_AUX_RE = re.compile(r"^A([0-9]+)$")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")

FAMILY_ORDER = ("alpha", "beta", "gamma", "delta")


class NonLinearError(ValueError):
    """A polynomial is not of degree <= 1 jointly in the requested unknowns."""


class CyclicBindingError(ValueError):
    pass


class ParseError(ValueError):
    pass


def _index(name: str) -> int:
    idx = _INDEX.get(name)
    if idx is None:
        if not _IDENT_RE.match(name):
            raise ValueError(f"invalid parameter name {name!r}")
        idx = len(_NAMES)
        if idx * SHIFT > 1 << 20:
            raise OverflowError("too many registered variables")
        _NAMES.append(name)
        _INDEX[name] = idx
    return idx


@total_ordering
class ParamName:
    """Structured view of a parameter name.

    ``kind`` is one of ``perturbation``, ``family``, ``auxiliary`` or
    ``transcendental_pi``.  Perturbation names follow ``a{i}{k}{l}`` /
    ``b{i}{k}{l}`` (coefficient of x^k y^l in P_i / Q_i).  Names are totally
    ordered by :meth:`sort_key`, which drives canonical printing.
    """

    __slots__ = ("name", "kind", "order", "k", "l", "slot", "aux")

    def __init__(self, name: str):
        self.name = name
        self.order = self.k = self.l = self.aux = 0
        self.slot = ""
        m = _PERT_RE.match(name)
        if name == "pi":
            self.kind = "transcendental_pi"
        elif m:
            self.kind = "perturbation"
            self.slot = m.group(1)
            self.order, self.k, self.l = int(m.group(2)), int(m.group(3)), int(m.group(4))
        elif _AUX_RE.match(name):
            self.kind = "auxiliary"
            self.aux = int(name[1:])
        else:
            self.kind = "family"

    def sort_key(self):
        if self.kind == "transcendental_pi":
            return (0,)
        if self.kind == "family":
            rank = FAMILY_ORDER.index(self.name) if self.name in FAMILY_ORDER else len(FAMILY_ORDER)
            return (1, rank, self.name)
        if self.kind == "auxiliary":
            return (2, self.aux)
        return (3, self.order, self.slot, self.k + self.l, -self.k)

    def __eq__(self, other):
        return isinstance(other, ParamName) and self.name == other.name

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"ParamName({self.name!r})"

    def __str__(self):
        return self.name


def perturbation_name(slot: str, order: int, k: int, l: int) -> str:
    if slot not in ("a", "b") or not (1 <= order <= 9) or k > 9 or l > 9:
        raise ValueError("perturbation indices out of range")
    return f"{slot}{order}{k}{l}"


def _name_key(name: str):
    return ParamName(name).sort_key()


def _decode(key: int) -> dict[int, int]:
    """Exponent map ``{var index: exponent}`` of a packed monomial."""
    out = {}
    e = (key & FIELD) - PI_BIAS
    if e:
        out[0] = e
    key >>= SHIFT
    idx = 1
    while key:
        e = key & FIELD
        if e:
            out[idx] = e
        key >>= SHIFT
        idx += 1
    return out


def _encode(exps: Mapping[int, int]) -> int:
    key = ONE_KEY
    for idx, e in exps.items():
        if idx == 0:
            if not -PI_BIAS <= e < PI_BIAS:
                raise OverflowError("pi exponent out of range")
            key += e
        else:
            if not 0 <= e <= FIELD:
                raise OverflowError("exponent out of range")
            key += e << (SHIFT * idx)
    return key


def _as_mpq(c) -> mpq:
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    if isinstance(c, float):
        raise TypeError("floating coefficients are not allowed in symbolic data")
    return mpq(c)


def _fmt_coeff(c: mpq) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


class ParamPoly:
    """Immutable sparse polynomial with rational coefficients.

    ``terms`` maps packed monomial keys to nonzero ``mpq`` coefficients.  Use
    :func:`var`, :func:`const` or :func:`parse_poly` to build values.
    """

    __slots__ = ("_t", "_hash")

    def __init__(self, terms: Mapping[int, mpq] | None = None):
        self._t = {} if terms is None else {k: v for k, v in terms.items() if v}
        self._hash = None

    @classmethod
    def _raw(cls, d: dict) -> "ParamPoly":
        p = object.__new__(cls)
        p._t = d
        p._hash = None
        return p

    # -- construction helpers -------------------------------------------
    @staticmethod
    def coerce(x) -> "ParamPoly":
        if isinstance(x, ParamPoly):
            return x
        if isinstance(x, str):
            return parse_poly(x)
        c = _as_mpq(x)
        return ParamPoly._raw({ONE_KEY: c} if c else {})

    @staticmethod
    def monomial(exps: Mapping[str, int], coeff=1) -> "ParamPoly":
        c = _as_mpq(coeff)
        if not c:
            return ZERO
        return ParamPoly._raw({_encode({_index(n): e for n, e in exps.items() if e}): c})

    # -- basic protocol ---------------------------------------------------
    @property
    def terms(self) -> dict[int, mpq]:
        return self._t

    def items(self):
        """Yield ``(exponents by name, Fraction coefficient)`` in canonical order."""
        for key in self._sorted_keys():
            ex = {_NAMES[i]: e for i, e in _decode(key).items()}
            c = self._t[key]
            yield ex, Fraction(int(c.numerator), int(c.denominator))

    def __bool__(self):
        return bool(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def is_constant(self) -> bool:
        return not self._t or (len(self._t) == 1 and ONE_KEY in self._t)

    def constant_value(self) -> Fraction:
        c = self._t.get(ONE_KEY, mpq(0))
        return Fraction(int(c.numerator), int(c.denominator))

    def __eq__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                other = ParamPoly.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self._t == other._t

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._t.items()))
        return self._hash

    def __len__(self):
        return len(self._t)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = ParamPoly.coerce(other)
        if len(other._t) > len(self._t):
            a, b = other._t, self._t
        else:
            a, b = self._t, other._t
        out = dict(a)
        get = out.get
        for k, v in b.items():
            s = get(k, 0) + v
            if s:
                out[k] = s
            else:
                del out[k]
        return ParamPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly._raw({k: -v for k, v in self._t.items()})

    def __sub__(self, other):
        return self + (-ParamPoly.coerce(other))

    def __rsub__(self, other):
        return ParamPoly.coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            if isinstance(other, str):
                other = parse_poly(other)
            else:
                c = _as_mpq(other)
                if not c:
                    return ZERO
                return ParamPoly._raw({k: v * c for k, v in self._t.items()})
        return ParamPoly._raw(_mul_dicts(self._t, other._t))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ParamPoly):
            return self.divexact(other)
        c = _as_mpq(other)
        if not c:
            raise ZeroDivisionError("division by zero")
        inv = 1 / c
        return ParamPoly._raw({k: v * inv for k, v in self._t.items()})

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- structure --------------------------------------------------------
    def variables(self) -> list[str]:
        seen: set[int] = set()
        for key in self._t:
            seen.update(_decode(key))
        return sorted((_NAMES[i] for i in seen), key=_name_key)

    def degree(self, names: Iterable[str] | None = None) -> int:
        """Total degree, restricted to ``names`` if given (pi counted if listed)."""
        if not self._t:
            return -1
        idx = None if names is None else {_index(n) for n in names}
        best = 0
        for key in self._t:
            d = 0
            for i, e in _decode(key).items():
                if idx is None:
                    if i != 0:
                        d += e
                elif i in idx:
                    d += e
            best = max(best, d)
        return best

    def diff(self, name: str) -> "ParamPoly":
        i = _index(name)
        out = {}
        for key, c in self._t.items():
            ex = _decode(key)
            e = ex.get(i, 0)
            if e:
                ex[i] = e - 1
                out[_encode(ex)] = c * e
        return ParamPoly._raw(out)

    def coefficient(self, exps: Mapping[str, int]) -> Fraction:
        key = _encode({_index(n): e for n, e in exps.items() if e})
        c = self._t.get(key, mpq(0))
        return Fraction(int(c.numerator), int(c.denominator))

    def substitute(self, bindings: Mapping) -> "ParamPoly":
        return substitute(self, bindings)

    def evaluate(self, values: Mapping[str, object]) -> "ParamPoly":
        """Exact partial evaluation at rational values."""
        return substitute(self, {k: ParamPoly.coerce(v) for k, v in values.items()})

    def to_float(self, values: Mapping[str, float] | None = None) -> float:
        """Floating evaluation; ``pi`` defaults to ``math.pi``."""
        import math

        vals = dict(values or {})
        vals.setdefault("pi", math.pi)
        total = 0.0
        for key, c in self._t.items():
            term = float(c)
            for i, e in _decode(key).items():
                term *= float(vals[_NAMES[i]]) ** e
            total += term
        return total

    def divexact(self, other: "ParamPoly") -> "ParamPoly":
        """Exact quotient; raises ``ArithmeticError`` if ``other`` does not divide."""
        q = _divexact(self, ParamPoly.coerce(other))
        if q is None:
            raise ArithmeticError("inexact polynomial division")
        return q

    def pi_content(self) -> tuple[int, int]:
        """Minimum and maximum exponent of pi over the terms."""
        es = [(k & FIELD) - PI_BIAS for k in self._t]
        return (min(es), max(es)) if es else (0, 0)

    # -- printing ---------------------------------------------------------
    def _sorted_keys(self):
        def sk(key):
            ex = _decode(key)
            names = sorted(((ParamName(_NAMES[i]).sort_key(), e) for i, e in ex.items() if i != 0))
            deg = sum(e for _, e in names)
            return (-deg, names, -ex.get(0, 0))

        return sorted(self._t, key=sk)

    def __str__(self):
        if not self._t:
            return "0"
        parts = []
        for key in self._sorted_keys():
            c = self._t[key]
            ex = _decode(key)
            factors = []
            for i in sorted(ex, key=lambda i: ParamName(_NAMES[i]).sort_key()):
                e = ex[i]
                factors.append(_NAMES[i] if e == 1 else f"{_NAMES[i]}^{e}")
            neg = c < 0
            a = -c if neg else c
            if factors:
                body = "*".join(factors)
                if a != 1:
                    body = _fmt_coeff(a) + "*" + body
            else:
                body = _fmt_coeff(a)
            parts.append(("- " if neg else "+ ", body))
        s = parts[0][1] if parts[0][0] == "+ " else "-" + parts[0][1]
        for sign, body in parts[1:]:
            s += " " + sign + body
        return s

    def __repr__(self):
        return f"ParamPoly({str(self)!r})"


def _mul_dicts(a: dict, b: dict) -> dict:
    if len(a) < len(b):
        a, b = b, a
    out: dict = {}
    get = out.get
    bias = PI_BIAS
    for k2, c2 in b.items():
        for k1, c1 in a.items():
            k = k1 + k2 - bias
            out[k] = get(k, 0) + c1 * c2
    return {k: v for k, v in out.items() if v}


def _shift_pi(p: ParamPoly, n: int) -> ParamPoly:
    return ParamPoly._raw({k + n: v for k, v in p._t.items()})


def _divexact(f: ParamPoly, g: ParamPoly) -> ParamPoly | None:
    if not g._t:
        raise ZeroDivisionError("division by zero polynomial")
    if not f._t:
        return ZERO
    # pi is a unit: normalise both sides to minimal pi exponent zero
    fmin, _ = f.pi_content()
    gmin, _ = g.pi_content()
    f0 = _shift_pi(f, -fmin)
    g0 = _shift_pi(g, -gmin)
    q = _poly_division(f0, g0)
    if q is None:
        return None
    return _shift_pi(q, fmin - gmin)


def _poly_division(f: ParamPoly, g: ParamPoly) -> ParamPoly | None:
    # lex order follows packed-key order; all exponents are non-negative here
    lead_g = max(g._t)
    lead_gex = _decode(lead_g)
    lead_gc = g._t[lead_g]
    rem = dict(f._t)
    quot: dict = {}
    while rem:
        lead = max(rem)
        ex = _decode(lead)
        qex = {}
        for i, e in lead_gex.items():
            d = ex.get(i, 0) - e
            if d < 0:
                return None
        for i in set(ex) | set(lead_gex):
            d = ex.get(i, 0) - lead_gex.get(i, 0)
            if d:
                qex[i] = d
        qkey = _encode(qex)
        qc = rem[lead] / lead_gc
        quot[qkey] = quot.get(qkey, 0) + qc
        for k, c in g._t.items():
            kk = k + qkey - PI_BIAS
            v = rem.get(kk, 0) - qc * c
            if v:
                rem[kk] = v
            else:
                rem.pop(kk, None)
    return ParamPoly._raw({k: v for k, v in quot.items() if v})


ZERO = ParamPoly._raw({})
ONE = ParamPoly._raw({ONE_KEY: mpq(1)})
PI = ParamPoly._raw({ONE_KEY + 1: mpq(1)})


def var(name: str) -> ParamPoly:
    idx = _index(name)
    if idx == 0:
        return PI
    return ParamPoly._raw({ONE_KEY + (1 << (SHIFT * idx)): mpq(1)})


def const(c) -> ParamPoly:
    return ParamPoly.coerce(c)


def substitute(p: ParamPoly, bindings: Mapping) -> ParamPoly:
    """Simultaneous substitution ``name -> value`` (values are coerced)."""
    if not bindings:
        return p
    bind = {}
    for name, val in bindings.items():
        name = str(name)
        if name == "pi":
            raise ValueError("pi is transcendental and cannot be bound")
        bind[_index(name)] = ParamPoly.coerce(val)
    powcache: dict = {}

    def power(i, e):
        key = (i, e)
        r = powcache.get(key)
        if r is None:
            r = bind[i] ** e
            powcache[key] = r
        return r

    # group terms by the part of the monomial that is being substituted
    groups: dict[tuple, dict] = {}
    for key, c in p._t.items():
        ex = _decode(key)
        hit = tuple(sorted((i, e) for i, e in ex.items() if i in bind))
        if hit:
            rest = _encode({i: e for i, e in ex.items() if i not in bind})
        else:
            rest = key
        g = groups.setdefault(hit, {})
        g[rest] = g.get(rest, 0) + c
    out = ZERO
    for hit, rest in groups.items():
        part = ParamPoly._raw({k: v for k, v in rest.items() if v})
        if hit:
            factor = ONE
            for i, e in hit:
                factor = factor * power(i, e)
            part = part * factor
        out = out + part
    return out


def collect_linear(p: ParamPoly, unknowns: list[str]):
    """Split ``p`` as ``sum(coeffs[u] * u) + remainder``.

    Raises :class:`NonLinearError` if any term has joint degree > 1 in the
    unknowns.  Returns ``(coeffs, remainder)`` with ``coeffs`` a dict keyed by
    unknown name (every unknown present, possibly zero).
    """
    idx = {_index(u): u for u in unknowns}
    rows: dict[str, dict] = {u: {} for u in unknowns}
    rem: dict = {}
    for key, c in p._t.items():
        ex = _decode(key)
        hits = [(i, e) for i, e in ex.items() if i in idx]
        if not hits:
            rem[key] = c
            continue
        if len(hits) > 1 or hits[0][1] != 1:
            raise NonLinearError(f"{p} is not linear in {unknowns}")
        i = hits[0][0]
        rows[idx[i]][key - (1 << (SHIFT * i))] = c
    return {u: ParamPoly._raw(d) for u, d in rows.items()}, ParamPoly._raw(rem)


# -- parser -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at column {pos + 1}: {text[pos:pos + 10]!r}")
        num, name, op = m.groups()
        if num is not None:
            if "." in num:
                out.append(("num", Fraction(num)))
            else:
                out.append(("num", int(num)))
        elif name is not None:
            out.append(("name", name))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    """Recursive descent over: expr := term (('+'|'-') term)*,
    term := unary (('*'|'/') unary)*, unary := '-' unary | power,
    power := atom ('^' signed-int)?, atom := number | name | '(' expr ')'."""

    def __init__(self, text, names=None):
        self.toks = _tokenize(text)
        self.i = 0
        self.text = text
        self.names = names

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t != ("op", op):
            raise ParseError(f"expected {op!r} in {self.text!r}")

    def parse(self):
        if not self.toks:
            raise ParseError("empty expression")
        v = self.expr()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input in {self.text!r}")
        return v

    def expr(self):
        v = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            w = self.term()
            v = v + w if op == "+" else v - w
        return v

    def term(self):
        v = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            w = self.unary()
            v = v * w if op == "*" else v / (w.constant_value() if w.is_constant() else w)
        return v

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            sign = 1
            if self.peek() == ("op", "-"):
                self.take()
                sign = -1
            kind, val = self.take()
            if kind != "num" or not isinstance(val, int):
                raise ParseError(f"exponent must be an integer in {self.text!r}")
            e = sign * val
            if e < 0:
                if base != PI:
                    raise ParseError("negative exponents are only allowed on pi")
                return ParamPoly._raw({ONE_KEY + e: mpq(1)})
            return base ** e
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return ParamPoly.coerce(val)
        if kind == "name":
            if self.names is not None and val != "pi" and val not in self.names:
                raise ParseError(f"undeclared parameter {val!r}")
            return var(val)
        if (kind, val) == ("op", "("):
            v = self.expr()
            self.expect(")")
            return v
        raise ParseError(f"unexpected token {val!r} in {self.text!r}")


def parse_poly(text: str, names: Iterable[str] | None = None) -> ParamPoly:
    """Parse the textual grammar produced by ``str(ParamPoly)``.

    Accepts ``+ - * / ^`` (``**`` as an alias), parentheses, integer and
    decimal literals (decimals are read exactly), and identifiers.  Division is
    allowed by constants and by exact divisors.  If ``names`` is given, any
    identifier outside it (other than ``pi``) is rejected.
    """
    return _Parser(text, None if names is None else set(names)).parse()


def specialize_pi(p: ParamPoly, value) -> ParamPoly:
    """Replace the formal ``pi`` by a nonzero rational (used for rank witnesses)."""
    v = _as_mpq(value)
    if not v:
        raise ZeroDivisionError("pi may only be specialized to a nonzero value")
    out: dict = {}
    for key, c in p._t.items():
        e = (key & FIELD) - PI_BIAS
        k = key - e
        out[k] = out.get(k, 0) + c * v ** e
    return ParamPoly._raw({k: c for k, c in out.items() if c})
