"""Integer submodular set functions and the polymatroids they define.

Subsets are exchanged as ``frozenset`` of ground elements; internally they are
bitmasks over the ground-set order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from . import lp as lpmod
from .convexity import CheckResult, PointSet, PreconditionError, is_m_convex_set
from .rational import Vec, as_rat

MAX_GROUND = 12


class SetFunctionError(ValueError):
    pass


class SetFunction:
    """Complete integer table over the subsets of ``ground`` with f(empty) = 0."""

    def __init__(self, ground: Sequence, table: Mapping):
        self.ground = tuple(ground)
        if len(set(self.ground)) != len(self.ground):
            raise SetFunctionError("duplicate ground elements")
        if len(self.ground) > MAX_GROUND:
            raise SetFunctionError(f"ground set larger than {MAX_GROUND} elements")
        pos = {e: k for k, e in enumerate(self.ground)}
        values = [None] * (1 << len(self.ground))
        for subset, value in table.items():
            mask = 0
            for e in subset:
                if e not in pos:
                    raise SetFunctionError(f"unknown ground element {e!r}")
                mask |= 1 << pos[e]
            if values[mask] is not None:
                raise SetFunctionError(f"duplicate subset {sorted(map(str, subset))!r}")
            if isinstance(value, bool) or int(value) != value:
                raise SetFunctionError(f"non-integer value {value!r}")
            values[mask] = int(value)
        missing = [m for m, v in enumerate(values) if v is None]
        if missing:
            raise SetFunctionError(f"table misses subset {sorted(map(str, self.subset(missing[0])))!r}")
        if values[0] != 0:
            raise SetFunctionError("f(empty set) must be 0")
        self._values = tuple(values)
        self._pos = pos

    @classmethod
    def from_function(cls, ground: Sequence, fn) -> "SetFunction":
        ground = tuple(ground)
        table = {}
        for mask in range(1 << len(ground)):
            s = frozenset(e for k, e in enumerate(ground) if mask >> k & 1)
            table[s] = fn(s)
        return cls(ground, table)

    @classmethod
    def additive(cls, caps: Mapping) -> "SetFunction":
        ground = tuple(caps)
        return cls.from_function(ground, lambda s: sum(caps[e] for e in s))

    @property
    def n(self) -> int:
        return len(self.ground)

    def mask(self, subset: Iterable) -> int:
        m = 0
        for e in subset:
            m |= 1 << self._pos[e]
        return m

    def subset(self, mask: int) -> frozenset:
        return frozenset(e for k, e in enumerate(self.ground) if mask >> k & 1)

    def at(self, mask: int) -> int:
        return self._values[mask]

    def __call__(self, subset: Iterable) -> int:
        return self._values[self.mask(subset)]

    def items(self):
        for mask, v in enumerate(self._values):
            yield self.subset(mask), v

    def is_monotone(self) -> bool:
        full = (1 << self.n) - 1
        return all(
            self._values[m] <= self._values[m | (1 << k)] for m in range(full + 1) for k in range(self.n)
        )

    def __eq__(self, other):
        if not isinstance(other, SetFunction):
            return NotImplemented
        return self.ground == other.ground and self._values == other._values

    def __repr__(self):
        body = ", ".join(f"{sorted(map(str, self.subset(m)))}: {v}" for m, v in enumerate(self._values))
        return f"SetFunction({self.ground!r}, {{{body}}})"


def is_submodular(f: SetFunction) -> CheckResult:
    size = 1 << f.n
    for s in range(size):
        fs = f.at(s)
        for t in range(size):
            if fs + f.at(t) < f.at(s | t) + f.at(s & t):
                return CheckResult(False, {"S": f.subset(s), "T": f.subset(t)}, "submodular inequality fails")
    return CheckResult(True)


class Polymatroid:
    """{x >= 0 : x(S) <= f(S) for all S} for a validated submodular ``f``."""

    def __init__(self, fn: SetFunction):
        check = is_submodular(fn)
        if not check:
            raise SetFunctionError(f"not submodular: {check.witness}")
        self.fn = fn

    @property
    def ground(self) -> tuple:
        return self.fn.ground

    def __repr__(self):
        return f"Polymatroid({self.fn!r})"


def _values(P: Polymatroid, x) -> tuple:
    if isinstance(x, Vec):
        if x.index != P.ground:
            raise ValueError("index mismatch")
        return tuple(x.values)
    if isinstance(x, Mapping):
        return tuple(Vec.of(x, P.ground).values)
    return tuple(x)


def membership(P: Polymatroid, x) -> bool:
    vals = [as_rat(a) for a in _values(P, x)]
    if any(a < 0 for a in vals):
        return False
    f = P.fn
    for mask in range(1, 1 << f.n):
        total = sum((vals[k] for k in range(f.n) if mask >> k & 1), Fraction(0))
        if total > f.at(mask):
            return False
    return True


def coordinate_bounds(P: Polymatroid) -> tuple:
    f = P.fn
    full = 1 << f.n
    return tuple(min(f.at(m) for m in range(full) if m >> k & 1) for k in range(f.n))


def integer_points(P: Polymatroid) -> PointSet:
    bounds = coordinate_bounds(P)
    if any(b < 0 for b in bounds):
        return PointSet(P.ground, frozenset())
    box = itertools.product(*(range(b + 1) for b in bounds))
    return PointSet(P.ground, frozenset(p for p in box if membership(P, p)))


def monotone_closure(f: SetFunction) -> SetFunction:
    """f~(S) = min over supersets T of f(T); defines the same polymatroid."""
    size = 1 << f.n
    vals = {}
    for s in range(size):
        vals[f.subset(s)] = min(f.at(t) for t in range(size) if t & s == s) if s else 0
    return SetFunction(f.ground, vals)


def greedy_vertex(P: Polymatroid, weights) -> Vec:
    """Maximize weights.x over P by the greedy rule on the monotone closure.

    Coordinates with positive weight are taken in decreasing weight order (ties
    by ground order) and set to the marginal of the closure.
    """
    w = [as_rat(a) for a in _values(P, weights)]
    f = P.fn if P.fn.is_monotone() else monotone_closure(P.fn)
    if any(f.at(1 << k) < 0 for k in range(f.n)):
        raise PreconditionError("polymatroid is empty (some f(S) < 0)")
    order = sorted((k for k in range(f.n) if w[k] > 0), key=lambda k: (-w[k], k))
    x = [0] * f.n
    prefix = 0
    for k in order:
        x[k] = f.at(prefix | (1 << k)) - f.at(prefix)
        prefix |= 1 << k
    return Vec(P.ground, tuple(x))


def polymatroid_lp(P: Polymatroid, weights) -> lpmod.LinearProgram:
    """max weights.x over the inequality description of P."""
    w = [as_rat(a) for a in _values(P, weights)]
    names = [str(e) for e in P.ground]
    prog = lpmod.LinearProgram(
        names,
        dict(zip(names, w)),
        "max",
        bounds={n: (Fraction(0), None) for n in names},
    )
    f = P.fn
    for mask in range(1, 1 << f.n):
        prog.add({names[k]: 1 for k in range(f.n) if mask >> k & 1}, lpmod.LE, f.at(mask),
                 name="x(" + ",".join(names[k] for k in range(f.n) if mask >> k & 1) + ")")
    return prog


def set_fn_from_mconvex_set(B: PointSet) -> SetFunction:
    check = is_m_convex_set(B)
    if not check:
        raise PreconditionError(f"not an M-convex set: {check.witness}")
    pts = B.sorted()
    n = len(B.index)
    table = {}
    for mask in range(1 << n):
        s = frozenset(B.index[k] for k in range(n) if mask >> k & 1)
        table[s] = max(sum(p[k] for k in range(n) if mask >> k & 1) for p in pts) if mask else 0
    f = SetFunction(B.index, table)
    sub = is_submodular(f)
    if not sub:
        raise AssertionError(f"induced set function is not submodular: {sub.witness}")
    return f


@dataclass(frozen=True)
class PointsFromSetFn:
    base: PointSet
    independent: PointSet


def points_from_set_fn(f: SetFunction) -> PointsFromSetFn:
    P = Polymatroid(f)
    independent = integer_points(P)
    top = f.at((1 << f.n) - 1)
    base = PointSet(f.ground, frozenset(p for p in independent.points if sum(p) == top))
    if not base.points:
        raise PreconditionError("no integer point reaches f(E); base set is empty")
    return PointsFromSetFn(base, independent)


@dataclass(frozen=True)
class TightFace:
    point: Vec
    tight_sets: tuple  # frozensets, in bitmask order

    def is_lattice(self) -> bool:
        sets = set(self.tight_sets)
        return all(a | b in sets and a & b in sets for a in sets for b in sets)


def tight_face(P: Polymatroid, x) -> TightFace:
    vals = [as_rat(a) for a in _values(P, x)]
    if not membership(P, vals):
        raise PreconditionError(f"{vals!r} is not in the polymatroid")
    f = P.fn
    tight = []
    for mask in range(1 << f.n):
        if sum((vals[k] for k in range(f.n) if mask >> k & 1), Fraction(0)) == f.at(mask):
            tight.append(f.subset(mask))
    return TightFace(Vec(P.ground, tuple(vals)), tuple(tight))


def objective_battery(n: int, extra: Optional[Iterable] = None) -> list:
    """Deterministic objectives: every vector in {-1,0,1}^n except zero, plus ``extra``."""
    out = [w for w in itertools.product((-1, 0, 1), repeat=n) if any(w)]
    if extra:
        out.extend(tuple(w) for w in extra)
    return out


def verify_closure_intersection(B1: PointSet, B2: PointSet, objectives: Optional[Iterable] = None) -> CheckResult:
    """conv(B1) & conv(B2) == conv(B1 & B2), tested through linear objectives."""
    for name, B in (("B1", B1), ("B2", B2)):
        check = is_m_convex_set(B)
        if not check:
            raise PreconditionError(f"{name} is not M-convex: {check.witness}")
    if B1.index != B2.index:
        raise ValueError("point sets live on different index sets")
    n = len(B1.index)
    common = B1.points & B2.points
    objectives = list(objectives) if objectives is not None else objective_battery(n)

    p1, p2 = B1.sorted(), B2.sorted()
    a = [f"a{k}" for k in range(len(p1))]
    b = [f"b{k}" for k in range(len(p2))]
    for w in objectives:
        prog = lpmod.LinearProgram(
            a + b,
            {v: sum(wi * zi for wi, zi in zip(w, z)) for v, z in zip(a, p1)},
            "max",
            bounds={v: (Fraction(0), None) for v in a + b},
        )
        prog.add({v: 1 for v in a}, lpmod.EQ, 1)
        prog.add({v: 1 for v in b}, lpmod.EQ, 1)
        for c in range(n):
            coeffs = {v: z[c] for v, z in zip(a, p1)}
            for v, z in zip(b, p2):
                coeffs[v] = -z[c]
            prog.add(coeffs, lpmod.EQ, 0)
        res = lpmod.solve_lp(prog)
        if res.status == lpmod.INFEASIBLE:
            if common:
                return CheckResult(False, {"objective": w}, "hull intersection empty but common points exist")
            return CheckResult(True, reason="hulls are disjoint")
        if not common:
            return CheckResult(False, {"objective": w}, "hulls intersect without common integer points")
        best = max(sum(wi * zi for wi, zi in zip(w, z)) for z in common)
        if res.optimum != best:
            return CheckResult(False, {"objective": w, "lp": res.optimum, "integral": best},
                               "LP optimum over hull intersection is not attained at a common point")
    return CheckResult(True)
