"""Mixed-integer linearisation toolkit.

Everything here builds linear constraints over a :class:`VarTable`. Each
transform also registers a *recipe* for the auxiliary variables it creates,
so that a full variable assignment can be reconstructed from the primary
(decision) variables alone. The recipes are what lets a hand-built placement
be turned into a warm start.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from motoplace.geometry import cosd, sind

BIG_M_MARGIN = 1.1
RECIPE_TOL = 1e-9

Number = float | int


@dataclass(frozen=True)
class VarRef:
    index: int
    name: str
    kind: str  # "continuous" | "binary"
    lb: float
    ub: float
    implied: bool = False

    @property
    def is_binary(self) -> bool:
        return self.kind == "binary"

    # arithmetic promotes to LinExpr
    def __add__(self, other):
        return LinExpr.of(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        return LinExpr.of(self) - other

    def __rsub__(self, other):
        return LinExpr.of(other) - LinExpr.of(self)

    def __mul__(self, k):
        return LinExpr.of(self) * k

    __rmul__ = __mul__

    def __neg__(self):
        return LinExpr.of(self) * -1.0

    def __le__(self, other):
        return LinExpr.of(self) <= other

    def __ge__(self, other):
        return LinExpr.of(self) >= other


class LinExpr:
    """Sparse affine expression ``constant + sum(coef * var)`` keyed by variable index."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: dict[int, float] | None = None, constant: float = 0.0):
        self.terms = {} if terms is None else terms
        self.constant = float(constant)

    @classmethod
    def of(cls, x) -> LinExpr:
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, VarRef):
            return cls({x.index: 1.0})
        return cls({}, float(x))

    @classmethod
    def sum(cls, items: Iterable) -> LinExpr:
        out = cls()
        for it in items:
            out._iadd(cls.of(it), 1.0)
        return out

    def copy(self) -> LinExpr:
        return LinExpr(dict(self.terms), self.constant)

    def _iadd(self, other: LinExpr, scale: float) -> None:
        for i, c in other.terms.items():
            v = self.terms.get(i, 0.0) + scale * c
            if v == 0.0:
                self.terms.pop(i, None)
            else:
                self.terms[i] = v
        self.constant += scale * other.constant

    def __add__(self, other) -> LinExpr:
        out = self.copy()
        out._iadd(LinExpr.of(other), 1.0)
        return out

    __radd__ = __add__

    def __sub__(self, other) -> LinExpr:
        out = self.copy()
        out._iadd(LinExpr.of(other), -1.0)
        return out

    def __rsub__(self, other) -> LinExpr:
        return LinExpr.of(other) - self

    def __mul__(self, k) -> LinExpr:
        k = float(k)
        if k == 0.0:
            return LinExpr()
        return LinExpr({i: c * k for i, c in self.terms.items()}, self.constant * k)

    __rmul__ = __mul__

    def __truediv__(self, k) -> LinExpr:
        return self * (1.0 / float(k))

    def __neg__(self) -> LinExpr:
        return self * -1.0

    def __le__(self, other) -> LinConstraint:
        return LinConstraint.make(self - other, "<=")

    def __ge__(self, other) -> LinConstraint:
        return LinConstraint.make(self - other, ">=")

    def equals(self, other) -> LinConstraint:
        return LinConstraint.make(self - other, "==")

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def value(self, values: Sequence[float] | np.ndarray) -> float:
        return self.constant + sum(c * values[i] for i, c in self.terms.items())

    def __repr__(self) -> str:
        parts = [f"{c:+g}*v{i}" for i, c in sorted(self.terms.items())]
        return f"LinExpr({' '.join(parts)} {self.constant:+g})"


@dataclass
class LinConstraint:
    """``sum(terms) <sense> rhs`` with the expression constant folded into ``rhs``."""

    terms: dict[int, float]
    sense: str  # "<=", ">=", "=="
    rhs: float
    name: str = ""

    @classmethod
    def make(cls, expr: LinExpr, sense: str, name: str = "") -> LinConstraint:
        return cls(dict(expr.terms), sense, -expr.constant, name)

    def activity(self, values) -> float:
        return sum(c * values[i] for i, c in self.terms.items())

    def violation(self, values) -> float:
        """Amount by which the constraint is violated (0 when satisfied)."""
        act = self.activity(values)
        if self.sense == "<=":
            return max(0.0, act - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - act)
        return abs(act - self.rhs)


@dataclass
class VarTable:
    """Single-writer store of variables, constraints and completion recipes."""

    vars: list[VarRef] = field(default_factory=list)
    constraints: list[LinConstraint] = field(default_factory=list)
    recipes: dict[int, Callable[[np.ndarray], float]] = field(default_factory=dict)
    _names: set[str] = field(default_factory=set)

    def _new(self, name: str, kind: str, lb: float, ub: float, implied: bool = False) -> VarRef:
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if not (np.isfinite(lb) and np.isfinite(ub)):
            raise ValueError(f"variable {name!r} needs finite bounds, got [{lb}, {ub}]")
        if lb > ub:
            raise ValueError(f"variable {name!r} has empty bounds [{lb}, {ub}]")
        v = VarRef(len(self.vars), name, kind, float(lb), float(ub), implied)
        self.vars.append(v)
        self._names.add(name)
        return v

    def continuous(self, name: str, lb: float, ub: float) -> VarRef:
        return self._new(name, "continuous", lb, ub)

    def binary(self, name: str, implied: bool = False) -> VarRef:
        return self._new(name, "binary", 0.0, 1.0, implied)

    def add(self, con: LinConstraint, name: str = "") -> LinConstraint:
        if name:
            con.name = name
        if not con.name:
            con.name = f"c{len(self.constraints)}"
        for i in con.terms:
            if not 0 <= i < len(self.vars):
                raise KeyError(f"constraint {con.name!r} references unknown variable {i}")
        self.constraints.append(con)
        return con

    def define(self, var: VarRef, recipe: Callable[[np.ndarray], float]) -> None:
        self.recipes[var.index] = recipe

    def tighten(self, var: VarRef, lb: float, ub: float) -> VarRef:
        new = VarRef(var.index, var.name, var.kind, max(var.lb, lb), min(var.ub, ub), var.implied)
        if new.lb > new.ub + 1e-12:
            raise ValueError(f"tightening {var.name!r} to [{lb}, {ub}] empties its domain")
        self.vars[var.index] = new
        return new

    def bounds(self, expr) -> tuple[float, float]:
        """Interval-arithmetic range of ``expr`` over the variable box."""
        expr = LinExpr.of(expr)
        lo = hi = expr.constant
        for i, c in expr.terms.items():
            v = self.vars[i]
            if c >= 0:
                lo += c * v.lb
                hi += c * v.ub
            else:
                lo += c * v.ub
                hi += c * v.lb
        return lo, hi


def size_big_m(table: VarTable, expr) -> float:
    """Smallest safe big-M for ``expr``: its largest magnitude over the box, plus 10 %."""
    lo, hi = table.bounds(expr)
    return BIG_M_MARGIN * max(abs(lo), abs(hi))


def _is_binary_valued(table: VarTable, d) -> bool:
    d = LinExpr.of(d)
    if d.is_constant:
        return d.constant in (0.0, 1.0)
    return all(table.vars[i].is_binary for i in d.terms)


# trigonometric helpers usable as ``fn`` arguments
def abs_cosd(angle: float) -> float:
    return abs(cosd(angle))


def abs_sind(angle: float) -> float:
    return abs(sind(angle))


TRIG = {"cos": cosd, "sin": sind, "abs_cos": abs_cosd, "abs_sin": abs_sind}


def _trig(fn) -> Callable[[float], float]:
    return TRIG[fn] if isinstance(fn, str) else fn


def and_binary(table: VarTable, a: VarRef, b: VarRef, name: str | None = None) -> tuple[VarRef, list[LinConstraint]]:
    """Binary product ``c = a * b`` through three linear inequalities.

    ``c`` is flagged as implied: it is integral whenever ``a`` and ``b`` are,
    so a branch-and-bound never needs to branch on it.
    """
    if not (a.is_binary and b.is_binary):
        raise ValueError("and_binary needs two binary variables")
    c = table.binary(name or f"and_{a.name}_{b.name}", implied=True)
    cons = [
        table.add(c <= a, f"{c.name}_le_a"),
        table.add(c <= b, f"{c.name}_le_b"),
        table.add(c >= a + b - 1, f"{c.name}_ge"),
    ]
    ia, ib = a.index, b.index
    table.define(c, lambda x: float(round(x[ia]) * round(x[ib])))
    return c, cons


def trig_of_selected_angle(decisions: Sequence, angles: Sequence[float], fn) -> LinExpr:
    """``sum_k decisions[k] * fn(angles[k])``; equals ``fn`` of the selected angle under one-hot."""
    if len(decisions) != len(angles):
        raise ValueError(f"{len(decisions)} decisions for {len(angles)} angles")
    f = _trig(fn)
    out = LinExpr()
    for d, a in zip(decisions, angles):
        out._iadd(LinExpr.of(d), f(a))
    return out


def trig_product(
    table: VarTable,
    da: Sequence[VarRef],
    angles_a: Sequence[float],
    fa,
    db: Sequence[VarRef],
    angles_b: Sequence[float],
    fb,
    name: str,
) -> LinExpr:
    """Product of two trigonometric selections, expanded over pairwise binary ANDs."""
    f, g = _trig(fa), _trig(fb)
    out = LinExpr()
    for k, (a, ta) in enumerate(zip(da, angles_a)):
        for l, (b, tb) in enumerate(zip(db, angles_b)):
            coef = f(ta) * g(tb)
            if coef == 0.0:
                continue
            c, _ = and_binary(table, a, b, f"{name}_{k}_{l}")
            out._iadd(LinExpr.of(c), coef)
    return out


def continuous_times_selected(
    table: VarTable,
    x,
    decisions: Sequence,
    coeffs: Sequence[float],
    name: str,
) -> tuple[LinExpr, list[VarRef], list[LinConstraint]]:
    """Linearise ``x * sum_k decisions[k] * coeffs[k]`` for one-hot binary ``decisions``.

    One auxiliary per non-zero coefficient carries ``x * coeffs[k]`` when its
    decision is on and 0 otherwise, enforced by four big-M inequalities.
    ``x`` may be a variable or an affine expression with finite bounds.
    """
    if len(decisions) != len(coeffs):
        raise ValueError(f"{len(decisions)} decisions for {len(coeffs)} coefficients")
    x = LinExpr.of(x)
    lo, hi = table.bounds(x)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError(f"{name}: cannot size big-M for an unbounded factor")
    for d in decisions:
        if not _is_binary_valued(table, d):
            raise ValueError(f"{name}: decisions must be binary")
    total = LinExpr()
    aux: list[VarRef] = []
    cons: list[LinConstraint] = []
    for k, (d, coef) in enumerate(zip(decisions, coeffs)):
        if coef == 0.0:
            continue  # the product is identically zero
        d = LinExpr.of(d)
        prod = x * coef
        if d.is_constant:
            if d.constant == 1.0:
                total._iadd(prod, 1.0)
            continue
        plo, phi = min(coef * lo, coef * hi), max(coef * lo, coef * hi)
        xc = table.continuous(f"{name}_{k}", min(0.0, plo), max(0.0, phi))
        m_link = size_big_m(table, xc - prod)
        m_zero = size_big_m(table, LinExpr.of(xc))
        cons += [
            table.add(xc <= prod + m_link * (1 - d), f"{xc.name}_ub"),
            table.add(xc >= prod - m_link * (1 - d), f"{xc.name}_lb"),
            table.add(xc <= d * m_zero, f"{xc.name}_on"),
            table.add(xc >= d * -m_zero, f"{xc.name}_off"),
        ]
        table.define(xc, lambda v, p=prod, d=d: p.value(v) * round(d.value(v)))
        aux.append(xc)
        total._iadd(LinExpr.of(xc), 1.0)
    return total, aux, cons


def continuous_times_trig(
    table: VarTable,
    x,
    decisions: Sequence,
    angles: Sequence[float],
    fn,
    name: str,
) -> tuple[LinExpr, list[VarRef], list[LinConstraint]]:
    """Linearise ``x * fn(theta)`` where ``theta`` is picked by one-hot ``decisions``."""
    if len(decisions) != len(angles):
        raise ValueError(f"{len(decisions)} decisions for {len(angles)} angles")
    f = _trig(fn)
    return continuous_times_selected(table, x, decisions, [f(a) for a in angles], name)


def abs_disjunction(table: VarTable, a, b, name: str) -> tuple[VarRef, VarRef, list[LinConstraint]]:
    """Indicator form of ``|a| >= b`` (``b >= 0``).

    ``suc = 1`` certifies ``|a| >= b`` with ``sgn`` choosing the side. As in
    the printed formulation, ``suc = 0`` makes the last two inequalities bind
    so that ``|a| <= b`` holds instead.
    """
    a, b = LinExpr.of(a), LinExpr.of(b)
    for e in (a, b):
        lo, hi = table.bounds(e)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError(f"{name}: unbounded expression")
    sgn = table.binary(f"{name}_sgn")
    suc = table.binary(f"{name}_suc")
    m_diff = size_big_m(table, a - b)
    m_sum = size_big_m(table, a + b)
    cons = [
        table.add(a >= b - m_diff * (1 - sgn) - m_diff * (1 - suc), f"{name}_pos"),
        table.add(a <= -b + m_sum * sgn + m_sum * (1 - suc), f"{name}_neg"),
        table.add(a <= b + m_diff * suc, f"{name}_in_hi"),
        table.add(a >= -b - m_sum * suc, f"{name}_in_lo"),
    ]
    table.define(suc, lambda v: float(abs(a.value(v)) >= b.value(v) - RECIPE_TOL))
    table.define(sgn, lambda v: float(a.value(v) >= 0.0))
    return sgn, suc, cons
