"""Linear conditions on jet coefficients.

Vanishing conditions, reparametrizations by auxiliary parameters ``A_k``,
generic rank with an exact witness, and Jacobian determinants at a point.
All arithmetic is exact.  Division happens only by rational multiples of
powers of pi or by polynomials the caller declares nonzero.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .engine import Jet
from .ring import (
    CyclicBindingError,
    NonLinearError,
    ONE,
    ParamName,
    ParamPoly,
    ZERO,
    collect_linear,
    parse_poly,
    specialize_pi,
    var,
)

__all__ = [
    "Substitution",
    "RankReport",
    "ReparamResult",
    "SolveObstruction",
    "solve_vanishing",
    "reparametrize",
    "generic_rank",
    "transversality_probe",
    "determinant",
    "parse_script",
]


class SolveObstruction(ArithmeticError):
    """The linear system cannot be solved under the given assumptions."""

    def __init__(self, message: str, determinant: ParamPoly | None = None):
        super().__init__(message)
        self.determinant = determinant


def _poly(x) -> ParamPoly:
    if isinstance(x, str):
        return parse_poly(x)
    return ParamPoly.coerce(x)


@dataclass
class Substitution:
    """Ordered bindings ``name -> ParamPoly``.

    Right-hand sides may mention earlier or later bound names; the bindings
    are resolved into each other on construction (``closure``), so the stored
    form is triangular: no bound name occurs on any right-hand side.
    """

    bindings: dict
    note: str = ""
    assumptions: tuple = ()
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        given = {str(k): _poly(v) for k, v in self.bindings.items()}
        self.raw = dict(given)
        self.bindings = _closure(given)
        self.assumptions = tuple(_poly(a) for a in self.assumptions)

    def apply(self, obj):
        """Substitute into a ParamPoly, Jet, PerturbedSystem or anything with ``substitute``."""
        if isinstance(obj, ParamPoly):
            return obj.substitute(self.bindings)
        return obj.substitute(self.bindings)

    def names(self) -> list[str]:
        return list(self.bindings)

    def __len__(self):
        return len(self.bindings)

    def __getitem__(self, name: str) -> ParamPoly:
        return self.bindings[name]

    def compose(self, other: "Substitution") -> "Substitution":
        """Bindings of ``self`` followed by ``other`` (``other`` applied last)."""
        merged = {k: v.substitute(other.bindings) for k, v in self.bindings.items()}
        for k, v in other.bindings.items():
            merged.setdefault(k, v)
        note = "; ".join(n for n in (self.note, other.note) if n)
        return Substitution(merged, note, tuple(self.assumptions) + tuple(other.assumptions))

    def to_dict(self) -> dict:
        return {
            "bindings": [{"name": k, "value": str(v)} for k, v in self.bindings.items()],
            "note": self.note,
            "assumptions": [f"{a} != 0" for a in self.assumptions],
        }

    def __str__(self):
        lines = [f"{k} = {v}" for k, v in self.bindings.items()]
        lines += [f"assume {a} != 0" for a in self.assumptions]
        return "\n".join(lines)


def _closure(bindings: dict) -> dict:
    names = list(bindings)
    out = dict(bindings)
    for _ in range(len(names) + 1):
        changed = False
        for k in names:
            v = out[k]
            hits = [n for n in v.variables() if n in out]
            if hits:
                if k in hits:
                    raise CyclicBindingError(f"binding for {k} refers to itself")
                out[k] = v.substitute({n: out[n] for n in hits})
                changed = True
        if not changed:
            return out
    raise CyclicBindingError("bindings do not resolve (cycle)")


def parse_script(text: str, definitions: Mapping | None = None):
    """Parse a substitution/assumption script.

    One statement per line: ``name = expr``, ``assume expr != 0`` or
    ``assume expr = 0``.  ``#`` starts a comment.  Returns
    ``(Substitution, nonzero list, zero list)``; errors carry line numbers.
    """
    definitions = dict(definitions or {})
    binds: dict = {}
    nonzero: list = []
    zero: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("assume "):
                body = line[len("assume "):].strip()
                if "!=" in body:
                    lhs, rhs = body.split("!=", 1)
                    nonzero.append(_expr(lhs, definitions) - _expr(rhs, definitions))
                elif "=" in body:
                    lhs, rhs = body.split("=", 1)
                    zero.append(_expr(lhs, definitions) - _expr(rhs, definitions))
                else:
                    raise ValueError("assumption must use '=' or '!='")
            elif "=" in line:
                lhs, rhs = line.split("=", 1)
                name = lhs.strip()
                if ParamName(name).kind not in ("perturbation", "family", "auxiliary"):
                    raise ValueError(f"cannot bind {name!r}")
                if name in binds:
                    raise ValueError(f"{name} bound twice")
                binds[name] = _expr(rhs, definitions)
            else:
                raise ValueError("expected 'name = expr' or 'assume ...'")
        except (ValueError, CyclicBindingError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    return Substitution(binds, note="script", assumptions=tuple(nonzero)), nonzero, zero


def _expr(text: str, definitions: Mapping) -> ParamPoly:
    text = text.strip()
    if text in definitions:
        return _poly(definitions[text])
    p = parse_poly(text)
    hits = {n: _poly(v) for n, v in definitions.items() if n in p.variables()}
    return p.substitute(hits) if hits else p


# -- exact linear algebra -----------------------------------------------------

def determinant(M: Sequence[Sequence[ParamPoly]]) -> ParamPoly:
    """Fraction-free (Bareiss) determinant over the polynomial ring."""
    n = len(M)
    if n == 0:
        return ONE
    A = [[_poly(x) for x in row] for row in M]
    if any(len(row) != n for row in A):
        raise ValueError("determinant of a non-square matrix")
    sign = 1
    prev = ONE
    for k in range(n - 1):
        if A[k][k].is_zero():
            for i in range(k + 1, n):
                if not A[i][k].is_zero():
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return ZERO
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = A[i][j] * A[k][k] - A[i][k] * A[k][j]
                A[i][j] = num.divexact(prev) if prev != ONE else num
            A[i][k] = ZERO
        prev = A[k][k]
    d = A[n - 1][n - 1]
    return d if sign == 1 else -d


def _unit_part(p: ParamPoly, nonzero: Sequence[ParamPoly]) -> ParamPoly | None:
    """Strip declared-nonzero factors; return the rest if it is rational * pi^e."""
    if p.is_zero():
        return None
    rest = p
    progress = True
    while progress and not _is_unit(rest):
        progress = False
        for f in nonzero:
            if f.is_zero() or _is_unit(f):
                continue
            try:
                q = rest.divexact(f)
            except ArithmeticError:
                continue
            rest = q
            progress = True
    return rest if _is_unit(rest) else None


def _is_unit(p: ParamPoly) -> bool:
    """Nonzero rational multiple of a power of pi."""
    if len(p.terms) != 1:
        return False
    return set(p.variables()) <= {"pi"}


def _divide(num: ParamPoly, den: ParamPoly) -> ParamPoly:
    try:
        return num.divexact(den)
    except ArithmeticError as exc:
        raise SolveObstruction(f"solution is not polynomial: ({num}) / ({den})", den) from exc


def _linear_rows(exprs: Sequence[ParamPoly], unknowns: Sequence[str]):
    rows, rhs = [], []
    for e in exprs:
        try:
            co, rem = collect_linear(e, list(unknowns))
        except NonLinearError as exc:
            raise NonLinearError(f"coefficient is not linear in {list(unknowns)}: {e}") from exc
        rows.append([co[u] for u in unknowns])
        rhs.append(-rem)
    return rows, rhs


def _cramer(rows, rhs, unknowns, nonzero, what="system"):
    det = determinant(rows)
    if det.is_zero():
        raise SolveObstruction(f"{what}: determinant vanishes identically", det)
    if _unit_part(det, nonzero) is None:
        raise SolveObstruction(f"{what}: determinant {det} is not invertible under the assumptions", det)
    n = len(unknowns)
    sol = {}
    for c in range(n):
        Mc = [[rhs[i] if jj == c else rows[i][jj] for jj in range(n)] for i in range(n)]
        sol[unknowns[c]] = _divide(determinant(Mc), det)
    return sol, det


def solve_vanishing(jet: Jet, orders: Iterable[int], unknowns: Sequence[str],
                    assumptions: Sequence = (), note: str | None = None) -> Substitution:
    """Solve ``m_{i,k} = 0`` for ``k`` in ``orders`` in the given unknowns.

    Square systems are solved by Cramer's rule.  With fewer equations than
    unknowns, the first (in the given order) set of unknowns with an
    invertible minor is solved for and the rest stay free.  With more
    equations, a solvable square subsystem is used and the remaining
    equations must vanish identically afterwards.  The determinant that was
    inverted is stored in ``Substitution.note`` and on obstruction it is
    attached to the raised :class:`SolveObstruction`.
    """
    orders = list(orders)
    unknowns = [str(u) for u in unknowns]
    nonzero = [_poly(a) for a in assumptions]
    exprs = [jet.m(k) for k in orders]
    rows, rhs = _linear_rows(exprs, unknowns)
    neq, nun = len(rows), len(unknowns)
    label = note or f"m{jet.order},{{{','.join(map(str, orders))}}} = 0"
    if neq == 0:
        return Substitution({}, label, tuple(nonzero))
    if neq == nun:
        sol, det = _cramer(rows, rhs, unknowns, nonzero, label)
        sub = Substitution(sol, label, tuple(nonzero))
        sub.determinant = det
        return sub
    last: SolveObstruction | None = None
    if neq < nun:
        for cols in itertools.combinations(range(nun), neq):
            sub_rows = [[r[c] for c in cols] for r in rows]
            names = [unknowns[c] for c in cols]
            fixed = {unknowns[c] for c in range(nun) if c not in cols}
            # free unknowns move to the right-hand side
            sub_rhs = [rhs[i] - sum((rows[i][c] * var(unknowns[c]) for c in range(nun) if unknowns[c] in fixed), ZERO)
                       for i in range(neq)]
            try:
                sol, det = _cramer(sub_rows, sub_rhs, names, nonzero, label)
            except SolveObstruction as exc:
                last = exc
                continue
            sub = Substitution(sol, label, tuple(nonzero))
            sub.determinant = det
            return sub
        raise last or SolveObstruction(f"{label}: no invertible minor")
    for rsel in itertools.combinations(range(neq), nun):
        try:
            sol, det = _cramer([rows[i] for i in rsel], [rhs[i] for i in rsel], unknowns, nonzero, label)
        except SolveObstruction as exc:
            last = exc
            continue
        for i in range(neq):
            if i in rsel:
                continue
            if not exprs[i].substitute(sol).is_zero():
                raise SolveObstruction(f"{label}: overdetermined system is inconsistent at m{jet.order},{orders[i]}")
        sub = Substitution(sol, label, tuple(nonzero))
        sub.determinant = det
        return sub
    raise last or SolveObstruction(f"{label}: no invertible minor")


# -- reparametrization ----------------------------------------------------------

@dataclass
class ReparamResult:
    jet: Jet
    substitution: Substitution  # eliminated parameter -> expression in A's and the rest
    definitions: dict  # A name -> expression in the original parameters

    def undo(self) -> Jet:
        """Substitute the A definitions back; equals the input jet."""
        return self.jet.substitute(self.definitions)


def reparametrize(jet: Jet, targets: Sequence, rewrites: Mapping | Substitution | None = None) -> ReparamResult:
    """Introduce auxiliary parameters.

    ``targets`` holds tuples ``(k, A, param)`` or ``(k, A, param, factor)``:
    ``m_{i,k} = factor * A`` is solved for ``param`` in sequence, each
    coefficient of ``param`` being a rational multiple of a power of pi.
    ``rewrites`` then maps further parameters to expressions involving new
    A's (resolved into each other, see :class:`Substitution`).
    """
    cur = jet
    steps: dict = {}
    definitions: dict = {}
    for t in targets:
        k, A, param = t[0], str(t[1]), str(t[2])
        factor = _poly(t[3]) if len(t) > 3 else ONE
        expr = cur.m(k)
        try:
            co, rem = collect_linear(expr, [param])
        except NonLinearError as exc:
            raise SolveObstruction(f"m{jet.order},{k} is not linear in {param}") from exc
        c = co[param]
        if not _is_unit(c):
            raise SolveObstruction(f"coefficient of {param} in m{jet.order},{k} is not invertible: {c}", c)
        value = _divide(factor * var(A) - rem, c)
        steps[param] = value
        cur = cur.substitute({param: value})
        if not _is_unit(factor):
            raise SolveObstruction(f"factor {factor} is not invertible", factor)
        definitions[A] = _divide(jet.m(k), factor)
    sub = Substitution(steps, "targets")
    if rewrites:
        rw = rewrites if isinstance(rewrites, Substitution) else Substitution(rewrites, "rewrites")
        cur = cur.substitute(rw.bindings)
        new_names = sorted({n for v in rw.bindings.values() for n in v.variables()
                            if ParamName(n).kind == "auxiliary" and n not in definitions})
        # invert the rewrites for the new auxiliaries
        eqs = [var(k) - v for k, v in rw.bindings.items()]
        rows, rhs = _linear_rows(eqs, new_names)
        sol = _solve_subset(rows, rhs, new_names)
        definitions.update(sol)
        sub = sub.compose(rw)
    # A definitions must be in the original parameters
    clean = _closure(definitions)
    return ReparamResult(Jet(jet.order, cur.coeffs, jet.system, dict(jet.meta)), sub, clean)


def _solve_subset(rows, rhs, names):
    n = len(names)
    for rsel in itertools.combinations(range(len(rows)), n):
        try:
            sol, _ = _cramer([rows[i] for i in rsel], [rhs[i] for i in rsel], names, [], "rewrites")
            return sol
        except SolveObstruction:
            continue
    raise SolveObstruction("rewrites are not invertible in the auxiliary parameters")


# -- rank ---------------------------------------------------------------------

@dataclass
class RankReport:
    rows: int
    cols: int
    rank: int
    witness: dict
    minor: tuple  # (row indices, column indices) of the certifying minor
    minor_value: Fraction
    orders: tuple = ()
    params: tuple = ()

    @property
    def bound(self) -> int:
        """Limit-cycle lower bound: independent coefficients minus one."""
        return max(self.rank - 1, 0)

    def to_dict(self) -> dict:
        return {
            "dimensions": [self.rows, self.cols],
            "rank": self.rank,
            "bound": self.bound,
            "orders": list(self.orders),
            "params": list(self.params),
            "witness": {k: str(v) for k, v in self.witness.items()},
            "minor": {"rows": list(self.minor[0]), "cols": list(self.minor[1]), "value": str(self.minor_value)},
        }


def _symbolic_rank(M) -> int:
    A = [[_poly(x) for x in row] for row in M]
    nr = len(A)
    nc = len(A[0]) if A else 0
    rank = 0
    prev = ONE
    col = 0
    r = 0
    while r < nr and col < nc:
        piv = next((i for i in range(r, nr) if not A[i][col].is_zero()), None)
        if piv is None:
            col += 1
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, nr):
            for j in range(col + 1, nc):
                num = A[i][j] * A[r][col] - A[i][col] * A[r][j]
                A[i][j] = num.divexact(prev) if prev != ONE else num
            A[i][col] = ZERO
        prev = A[r][col]
        r += 1
        col += 1
        rank += 1
    return rank


def _rational_rank(M) -> tuple[int, tuple, Fraction]:
    """Rank of a rational matrix with a certifying nonzero minor."""
    A = [[Fraction(x) for x in row] for row in M]
    nr = len(A)
    nc = len(A[0]) if A else 0
    rows_used, cols_used = [], []
    work = [row[:] for row in A]
    perm = list(range(nr))
    r = 0
    for c in range(nc):
        piv = next((i for i in range(r, nr) if work[i][c] != 0), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        perm[r], perm[piv] = perm[piv], perm[r]
        for i in range(r + 1, nr):
            f = work[i][c] / work[r][c]
            if f:
                for j in range(c, nc):
                    work[i][j] -= f * work[r][j]
        rows_used.append(perm[r])
        cols_used.append(c)
        r += 1
        if r == nr:
            break
    sub = [[A[i][j] for j in cols_used] for i in rows_used]
    val = _frac_det(sub)
    return r, (tuple(rows_used), tuple(cols_used)), val


def _frac_det(M) -> Fraction:
    n = len(M)
    A = [row[:] for row in M]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for i in range(c + 1, n):
            f = A[i][c] / A[c][c]
            for j in range(c, n):
                A[i][j] -= f * A[c][j]
    return det


def _to_fraction(p: ParamPoly) -> Fraction:
    if p.is_zero():
        return Fraction(0)
    if not p.is_constant():
        raise ValueError(f"not a constant: {p}")
    return Fraction(p.constant_value())


def generic_rank(jet: Jet, orders: Iterable[int], params: Sequence[str] | None = None,
                 seed: int = 0, witness: Mapping | None = None) -> RankReport:
    """Generic rank of the coefficient matrix of ``m_{i,k}`` in ``params``.

    The rank is computed symbolically over the fraction field of the other
    symbols (pi included); an exact rational witness point with a nonzero
    minor of that size certifies it from below.
    """
    orders = tuple(orders)
    exprs = [jet.m(k) for k in orders]
    if params is None:
        params = sorted({n for e in exprs for n in e.variables() if ParamName(n).kind == "perturbation"},
                        key=lambda n: ParamName(n).sort_key())
    params = list(params)
    if not exprs or not params:
        return RankReport(len(exprs), len(params), 0, {}, ((), ()), Fraction(1), orders, tuple(params))
    rows, _ = _linear_rows(exprs, params)
    rank = _symbolic_rank(rows)
    others = sorted({n for row in rows for c in row for n in c.variables() if n != "pi"})
    rng = random.Random(seed)
    for attempt in range(50):
        point = dict(witness or {})
        for n in others:
            point.setdefault(n, Fraction(rng.randint(-20, 20), rng.randint(1, 7)))
        pi_val = Fraction(22, 7) if attempt == 0 else Fraction(rng.randint(20, 40), rng.randint(5, 12))
        num = [[_to_fraction(specialize_pi(c, pi_val).substitute(point)) for c in row] for row in rows]
        r, minor, val = _rational_rank(num)
        if r == rank:
            point["pi"] = pi_val
            return RankReport(len(rows), len(params), rank, point, minor, val, orders, tuple(params))
        if witness is not None:
            break
    raise ArithmeticError("no witness point attains the generic rank")


def transversality_probe(jet: Jet, point: Mapping, orders: Sequence[int], variables: Sequence[str]) -> ParamPoly:
    """Jacobian determinant of ``(m_{i,k})_k`` w.r.t. ``variables`` at ``point``.

    ``point`` maps names to exact values (or ParamPolys); names not in
    ``point`` stay symbolic.
    """
    bind = {str(k): _poly(v) if not isinstance(v, (int, Fraction)) else ParamPoly.coerce(v) for k, v in point.items()}
    rows = [[jet.m(k).diff(v).substitute(bind) for v in variables] for k in orders]
    return determinant(rows)
