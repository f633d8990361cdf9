"""M-convex / M-natural-convex sets and functions, concave closures, and B_f(x).

Functions are finite tables over integer points.  Entries that are missing or
equal to ``-inf`` lie outside the effective domain.  The concave orientation is
the default; convex checks negate the table and reuse the concave code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence

from . import lp as lpmod
from .rational import NEG_INF, Value, Vec, as_rat, corner_tuples, format_rat, is_finite


class PreconditionError(ValueError):
    """An operation's documented hypothesis does not hold for the input."""


class OutsideHullError(ValueError):
    """The query point is not in the convex hull of the effective domain."""

    def __init__(self, point, certificate: lpmod.FarkasCertificate, program: lpmod.LinearProgram):
        super().__init__(f"{point!r} lies outside the convex hull of the domain")
        self.point = point
        self.certificate = certificate
        self.program = program


def _key(point, index) -> tuple:
    if isinstance(point, Vec):
        if point.index != tuple(index):
            raise ValueError(f"point index {point.index!r} does not match {tuple(index)!r}")
        return tuple(int(a) for a in point.values)
    if isinstance(point, Mapping):
        return tuple(int(a) for a in Vec.of(point, index).values)
    t = tuple(point)
    if len(t) != len(index):
        raise ValueError(f"point {t!r} has wrong length for index {tuple(index)!r}")
    return tuple(int(a) for a in t)


@dataclass(frozen=True)
class PointSet:
    index: tuple
    points: frozenset

    @classmethod
    def of(cls, index: Sequence, points: Iterable) -> "PointSet":
        index = tuple(index)
        return cls(index, frozenset(_key(p, index) for p in points))

    def __iter__(self):
        return iter(sorted(self.points))

    def __len__(self):
        return len(self.points)

    def __contains__(self, point):
        return _key(point, self.index) in self.points

    def sorted(self) -> list:
        return sorted(self.points)

    def vecs(self) -> list:
        return [Vec(self.index, p) for p in sorted(self.points)]

    def __repr__(self):
        return f"PointSet({self.index!r}, {sorted(self.points)!r})"


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a structural check; falsy on failure.

    ``witness`` holds the first counterexample in lexicographic order, as a
    dict with ``x``, ``y`` (Vecs) and ``u`` (a coordinate) for exchange checks.
    """

    ok: bool
    witness: Optional[dict] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


class FiniteIntFunction:
    """Finite table ``point -> rational or -inf`` over a fixed coordinate index."""

    def __init__(self, index: Sequence, table: Mapping):
        self.index = tuple(index)
        if len(set(self.index)) != len(self.index):
            raise ValueError("duplicate coordinates")
        entries = {}
        for point, value in table.items():
            key = _key(point, self.index)
            if key in entries:
                raise ValueError(f"duplicate point {key!r}")
            entries[key] = as_rat(value)
        if not entries:
            raise ValueError("function table must be nonempty")
        self.table = MappingProxyType(entries)
        self._domain = frozenset(k for k, v in entries.items() if is_finite(v))

    @classmethod
    def from_entries(cls, index: Sequence, entries: Iterable[tuple]) -> "FiniteIntFunction":
        return cls(index, dict(entries))

    def __call__(self, point) -> Value:
        return self.table.get(_key(point, self.index), NEG_INF)

    def value(self, key: tuple) -> Value:
        """Fast lookup by int tuple (no validation)."""
        return self.table.get(key, NEG_INF)

    @property
    def domain(self) -> frozenset:
        return self._domain

    def negate(self) -> "FiniteIntFunction":
        return FiniteIntFunction(self.index, {k: (-v if is_finite(v) else v) for k, v in self.table.items()})

    def shift(self, c) -> "FiniteIntFunction":
        c = as_rat(c)
        return FiniteIntFunction(self.index, {k: (v + c if is_finite(v) else v) for k, v in self.table.items()})

    def restrict(self, points: Iterable[tuple]) -> "FiniteIntFunction":
        keep = set(points)
        return FiniteIntFunction(self.index, {k: v for k, v in self.table.items() if k in keep})

    def __eq__(self, other):
        if not isinstance(other, FiniteIntFunction):
            return NotImplemented
        return self.index == other.index and dict(self.table) == dict(other.table)

    def __repr__(self):
        body = ", ".join(f"{k}: {format_rat(v)}" for k, v in sorted(self.table.items()))
        return f"FiniteIntFunction({self.index!r}, {{{body}}})"


def effective_domain(f: FiniteIntFunction) -> PointSet:
    return PointSet(f.index, f.domain)


@dataclass(frozen=True)
class LotteryWitness:
    support: tuple  # ((Vec, Fraction weight), ...)
    target: Vec
    value: Fraction

    def verify(self, f: Optional[FiniteIntFunction] = None) -> bool:
        """Weights positive and summing to one; mean equals target; value recomputes."""
        if not self.support:
            return False
        weights = [w for _, w in self.support]
        if any(w <= 0 for w in weights) or sum(weights) != 1:
            return False
        mean = [Fraction(0)] * len(self.target.index)
        for z, w in self.support:
            for k, a in enumerate(z.values):
                mean[k] += w * a
        if tuple(mean) != tuple(Fraction(a) for a in self.target.values):
            return False
        if f is not None:
            total = Fraction(0)
            for z, w in self.support:
                fz = f(z)
                if not is_finite(fz):
                    return False
                total += w * fz
            if total != self.value:
                return False
        return True


# ----------------------------------------------------------------------------
# exchange checks


def _exchange_check(index, pts, val, allow_single: bool) -> CheckResult:
    """Shared engine: ``pts`` sorted domain tuples, ``val`` lookup with -inf off-domain."""
    n = len(index)
    for x in pts:
        fx = val(x)
        for y in pts:
            if x == y:
                continue
            fy = val(y)
            lhs = fx + fy
            diff = [a - b for a, b in zip(x, y)]
            plus = [k for k in range(n) if diff[k] > 0]
            minus = [k for k in range(n) if diff[k] < 0]
            for u in plus:
                ok = False
                if allow_single:
                    xm = list(x)
                    xm[u] -= 1
                    yp = list(y)
                    yp[u] += 1
                    rhs = val(tuple(xm)) + val(tuple(yp))
                    ok = is_finite(rhs) and lhs <= rhs
                if not ok:
                    for v in minus:
                        xm = list(x)
                        xm[u] -= 1
                        xm[v] += 1
                        yp = list(y)
                        yp[u] += 1
                        yp[v] -= 1
                        rhs = val(tuple(xm)) + val(tuple(yp))
                        if is_finite(rhs) and lhs <= rhs:
                            ok = True
                            break
                if not ok:
                    return CheckResult(
                        False,
                        {"x": Vec(index, x), "y": Vec(index, y), "u": index[u]},
                        "exchange property fails",
                    )
    return CheckResult(True)


def _indicator(points: frozenset):
    zero = Fraction(0)
    return lambda p: zero if p in points else NEG_INF


def _constant_sum(points) -> bool:
    return len({sum(p) for p in points}) <= 1


def is_m_convex_set(B: PointSet) -> CheckResult:
    if not B.points:
        return CheckResult(False, reason="empty set")
    return _exchange_check(B.index, B.sorted(), _indicator(B.points), allow_single=False)


def is_msharp_convex_set(B: PointSet) -> CheckResult:
    if not B.points:
        return CheckResult(False, reason="empty set")
    return _exchange_check(B.index, B.sorted(), _indicator(B.points), allow_single=True)


def is_msharp_concave_fn(f: FiniteIntFunction) -> CheckResult:
    return _exchange_check(f.index, sorted(f.domain), f.value, allow_single=True)


def is_m_concave_fn(f: FiniteIntFunction) -> CheckResult:
    if not f.domain:
        return CheckResult(False, reason="empty effective domain")
    if not _constant_sum(f.domain):
        return CheckResult(False, reason="not M-convex (domain not a base set)")
    return _exchange_check(f.index, sorted(f.domain), f.value, allow_single=False)


def is_msharp_convex_fn(f: FiniteIntFunction) -> CheckResult:
    return is_msharp_concave_fn(f.negate())


def is_m_convex_fn(f: FiniteIntFunction) -> CheckResult:
    return is_m_concave_fn(f.negate())


# ----------------------------------------------------------------------------
# concave closure


def _as_ratvec(x, index) -> Vec:
    if isinstance(x, Vec):
        if x.index != tuple(index):
            raise ValueError("index mismatch")
        return x.to_rat()
    if isinstance(x, Mapping):
        return Vec.of({k: as_rat(v) for k, v in x.items()}, index)
    return Vec(tuple(index), tuple(as_rat(a) for a in x))


def _lottery_lp(f: FiniteIntFunction, x: Vec, points: list) -> lpmod.LinearProgram:
    names = [f"l{k}" for k in range(len(points))]
    prog = lpmod.LinearProgram(
        names,
        {n: f.value(p) for n, p in zip(names, points)},
        "max",
        bounds={n: (Fraction(0), None) for n in names},
    )
    for c, coord in enumerate(f.index):
        prog.add({n: p[c] for n, p in zip(names, points)}, lpmod.EQ, x.values[c], name=f"mean[{coord}]")
    prog.add({n: 1 for n in names}, lpmod.EQ, 1, name="total")
    return prog


def concave_extension_eval(f: FiniteIntFunction, x) -> tuple:
    """Concave closure value at ``x`` with an optimal lottery over domain points."""
    x = _as_ratvec(x, f.index)
    points = sorted(f.domain)
    if not points:
        raise PreconditionError("empty effective domain")
    prog = _lottery_lp(f, x, points)
    res = lpmod.solve_lp(prog)
    if res.status == lpmod.INFEASIBLE:
        raise OutsideHullError(x, res.certificate, prog)
    support = tuple(
        (Vec(f.index, p), res.primal[f"l{k}"]) for k, p in enumerate(points) if res.primal[f"l{k}"] > 0
    )
    return res.optimum, LotteryWitness(support, x, res.optimum)


def convex_extension_eval(f: FiniteIntFunction, x) -> tuple:
    value, lot = concave_extension_eval(f.negate(), x)
    return -value, LotteryWitness(lot.support, lot.target, -value)


def facet_set(f: FiniteIntFunction, x) -> PointSet:
    """B_f(x): corners of the unit cube around ``x`` used by some optimal lottery."""
    x = _as_ratvec(x, f.index)
    value, _ = concave_extension_eval(f, x)
    points = sorted(f.domain)
    pos = {p: k for k, p in enumerate(points)}
    members = []
    for z in corner_tuples(x.values):
        if z not in pos:
            continue
        prog = _lottery_lp(f, x, points)
        prog.objective = {f"l{pos[z]}": Fraction(1)}
        prog.add({f"l{k}": f.value(p) for k, p in enumerate(points)}, lpmod.EQ, value, name="optimal")
        res = lpmod.solve_lp(prog)
        if res.optimal and res.optimum > 0:
            members.append(z)
    return PointSet(f.index, frozenset(members))


def verify_facet_m_convex(f: FiniteIntFunction, x) -> CheckResult:
    """Check that B_f(x) is M-convex for an M-natural-concave ``f``."""
    pre = is_msharp_concave_fn(f)
    if not pre:
        raise PreconditionError(f"function is not M-natural-concave: {pre.witness}")
    return is_m_convex_set(facet_set(f, x))


def lottery_value(f: FiniteIntFunction, lottery: Iterable[tuple]) -> Value:
    return sum((w * f(z) for z, w in lottery), Fraction(0))


def lotteries_within(B: PointSet, x, objectives: Iterable[Mapping]) -> list:
    """Vertex lotteries over ``B`` with mean ``x``, one per objective (used for rebalancing checks)."""
    x = _as_ratvec(x, B.index)
    points = B.sorted()
    names = [f"l{k}" for k in range(len(points))]
    out = []
    for obj in objectives:
        prog = lpmod.LinearProgram(
            names,
            {n: obj.get(p, 0) for n, p in zip(names, points)},
            "max",
            bounds={n: (Fraction(0), None) for n in names},
        )
        for c in range(len(B.index)):
            prog.add({n: p[c] for n, p in zip(names, points)}, lpmod.EQ, x.values[c])
        prog.add({n: 1 for n in names}, lpmod.EQ, 1)
        res = lpmod.solve_lp(prog)
        if res.optimal:
            out.append(tuple((Vec(B.index, p), res.primal[n]) for n, p in zip(names, points) if res.primal[n] > 0))
    return out
