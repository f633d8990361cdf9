"""Exact rational linear programming.

Two-phase tableau simplex over :class:`~fractions.Fraction` with Bland's rule.
Every solve returns certificates:

* ``Optimal``: primal point, one dual value per constraint and per active
  variable bound.  Duals are sensitivities of the optimum to the right-hand
  side, so ``A^T dual + bound duals = c`` and strong duality is asserted.
* ``Infeasible``: a Farkas certificate, i.e. multipliers that combine the
  constraints (and bounds) into ``0 <= -1``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .rational import as_rat, format_rat

LE, EQ, GE = "<=", "==", ">="
OPTIMAL, INFEASIBLE, UNBOUNDED = "Optimal", "Infeasible", "Unbounded"

_ZERO = Fraction(0)
_ONE = Fraction(1)


class LPError(RuntimeError):
    """Raised when an internal certificate check fails (a solver bug)."""


# per-process tallies: solves, optimal results whose duality was checked, verified Farkas
# certificates, unbounded results
STATS: Counter = Counter()


def reset_stats() -> None:
    STATS.clear()


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, Fraction]
    relation: str
    rhs: Fraction
    name: str = ""

    def lhs(self, point: Mapping[str, Fraction]) -> Fraction:
        return sum((a * point[v] for v, a in self.coeffs.items()), _ZERO)

    def satisfied(self, point: Mapping[str, Fraction]) -> bool:
        lhs = self.lhs(point)
        if self.relation == LE:
            return lhs <= self.rhs
        if self.relation == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class LinearProgram:
    """``sense`` c.x subject to constraints and per-variable bounds.

    Variables are free unless given bounds; ``bounds[v] = (lo, hi)`` with
    either side ``None``.
    """

    variables: list
    objective: dict = field(default_factory=dict)
    sense: str = "max"
    constraints: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)

    def __post_init__(self):
        self.variables = list(self.variables)
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        if self.sense not in ("max", "min"):
            raise ValueError(f"unknown sense {self.sense!r}")
        self.objective = {v: as_rat(a) for v, a in self.objective.items()}
        known = set(self.variables)
        for v in self.objective:
            if v not in known:
                raise KeyError(f"objective uses unknown variable {v!r}")
        for v, (lo, hi) in self.bounds.items():
            if v not in known:
                raise KeyError(f"bound on unknown variable {v!r}")
        cons = list(self.constraints)
        self.constraints = []
        for c in cons:
            self.constraints.append(c)
            self._validate(c)

    def _validate(self, c: Constraint):
        if c.relation not in (LE, EQ, GE):
            raise ValueError(f"unknown relation {c.relation!r}")
        known = self._varset()
        for v in c.coeffs:
            if v not in known:
                raise KeyError(f"constraint {c.name!r} uses unknown variable {v!r}")

    def _varset(self):
        if getattr(self, "_known", None) is None or len(self._known) != len(self.variables):
            self._known = frozenset(self.variables)
        return self._known

    def add(self, coeffs: Mapping, relation: str, rhs, name: str = "") -> Constraint:
        c = Constraint({v: as_rat(a) for v, a in coeffs.items() if a != 0}, relation, as_rat(rhs), name)
        self._validate(c)
        self.constraints.append(c)
        return c

    def bound(self, var, lo=None, hi=None):
        if var not in self._varset():
            raise KeyError(var)
        self.bounds[var] = (None if lo is None else as_rat(lo), None if hi is None else as_rat(hi))

    def dump(self) -> str:
        """Plain-text rendering for debugging."""

        def term(a, v):
            return f"{format_rat(a)} {v}"

        lines = [f"{self.sense} " + " + ".join(term(a, v) for v, a in self.objective.items() if a)]
        lines.append("subject to")
        for c in self.constraints:
            lhs = " + ".join(term(a, v) for v, a in c.coeffs.items()) or "0"
            label = f"{c.name}: " if c.name else ""
            lines.append(f"  {label}{lhs} {c.relation} {format_rat(c.rhs)}")
        lines.append("bounds")
        for v in self.variables:
            lo, hi = self.bounds.get(v, (None, None))
            lo_s = "-inf" if lo is None else format_rat(lo)
            hi_s = "+inf" if hi is None else format_rat(hi)
            lines.append(f"  {lo_s} <= {v} <= {hi_s}")
        return "\n".join(lines)


@dataclass(frozen=True)
class FarkasCertificate:
    """Multipliers proving infeasibility.

    Constraint ``k`` is used as ``m_k * (a_k.x) <= m_k * b_k`` which requires
    ``m_k >= 0`` for ``<=`` rows and ``m_k <= 0`` for ``>=`` rows.  Bound
    multipliers are nonnegative and apply to ``-x_v <= -lo`` ("lower") or
    ``x_v <= hi`` ("upper").  The combination has all coefficients zero and
    right-hand side -1.
    """

    multipliers: tuple
    bound_multipliers: dict

    def combined(self, lp: LinearProgram) -> tuple[dict, Fraction]:
        coeff = {v: _ZERO for v in lp.variables}
        rhs = _ZERO
        for m, c in zip(self.multipliers, lp.constraints):
            if m == 0:
                continue
            for v, a in c.coeffs.items():
                coeff[v] += m * a
            rhs += m * c.rhs
        for (v, side), nu in self.bound_multipliers.items():
            lo, hi = lp.bounds.get(v, (None, None))
            if side == "lower":
                coeff[v] -= nu
                rhs -= nu * lo
            else:
                coeff[v] += nu
                rhs += nu * hi
        return coeff, rhs

    def verify(self, lp: LinearProgram) -> bool:
        if len(self.multipliers) != len(lp.constraints):
            return False
        for m, c in zip(self.multipliers, lp.constraints):
            if c.relation == LE and m < 0:
                return False
            if c.relation == GE and m > 0:
                return False
        for (v, side), nu in self.bound_multipliers.items():
            lo, hi = lp.bounds.get(v, (None, None))
            if nu < 0 or (side == "lower" and lo is None) or (side == "upper" and hi is None):
                return False
        coeff, rhs = self.combined(lp)
        return all(a == 0 for a in coeff.values()) and rhs < 0


@dataclass(frozen=True)
class LPResult:
    status: str
    optimum: Optional[Fraction] = None
    primal: Optional[dict] = None
    dual: Optional[tuple] = None
    bound_dual: Optional[dict] = None
    certificate: Optional[FarkasCertificate] = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Dense tableau ``T x = rhs`` with explicit basis and reduced costs."""

    def __init__(self, rows, rhs, ncols):
        self.rows = rows
        self.rhs = rhs
        self.ncols = ncols
        self.basis = [None] * len(rows)
        self.pivots = 0

    def pivot(self, r, c, cost_rows):
        row = self.rows[r]
        p = row[c]
        if p != _ONE:
            inv = _ONE / p
            self.rows[r] = row = [a * inv for a in row]
            self.rhs[r] *= inv
        nz = [(j, a) for j, a in enumerate(row) if a != 0]
        for k in range(len(self.rows)):
            if k == r:
                continue
            other = self.rows[k]
            f = other[c]
            if f != 0:
                for j, a in nz:
                    other[j] -= f * a
                self.rhs[k] -= f * self.rhs[r]
        for cost in cost_rows:
            f = cost[0][c]
            if f != 0:
                red = cost[0]
                for j, a in nz:
                    red[j] -= f * a
                cost[1] -= f * self.rhs[r]
        self.basis[r] = c
        self.pivots += 1

    def run(self, cost, allowed, extra_costs=()):
        """Maximize with Bland's rule.  ``cost = [reduced, -value]``."""
        red = cost[0]
        while True:
            enter = next((j for j in allowed if red[j] > 0), None)
            if enter is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], enter, (cost,) + tuple(extra_costs))


def _reduced(tab: _Tableau, c: Sequence[Fraction]):
    """Reduced-cost row for objective ``c`` under the current basis."""
    red = list(c)
    value = _ZERO
    for i, b in enumerate(tab.basis):
        cb = c[b]
        if cb != 0:
            row = tab.rows[i]
            for j, a in enumerate(row):
                if a != 0:
                    red[j] -= cb * a
            value += cb * tab.rhs[i]
    return [red, -value]


def solve_lp(lp: LinearProgram) -> LPResult:
    STATS["solves"] += 1
    variables = lp.variables
    nvar = len(variables)
    vindex = {v: j for j, v in enumerate(variables)}

    # rows over original variables: user constraints, then internal upper-bound rows
    rows = [(dict(c.coeffs), c.relation, c.rhs) for c in lp.constraints]
    n_user = len(rows)
    internal_upper = {}

    # column layout: (var index, sign); anchor value per variable
    columns = []
    anchor = [_ZERO] * nvar
    anchor_side = [None] * nvar
    for j, v in enumerate(variables):
        lo, hi = lp.bounds.get(v, (None, None))
        if lo is not None:
            anchor[j], anchor_side[j] = lo, "lower"
            columns.append((j, 1))
            if hi is not None:
                internal_upper[len(rows)] = v
                rows.append(({v: _ONE}, LE, hi))
        elif hi is not None:
            anchor[j], anchor_side[j] = hi, "upper"
            columns.append((j, -1))
        else:
            columns.append((j, 1))
            columns.append((j, -1))
    ncore = len(columns)
    m = len(rows)

    # slack columns
    slack_of = {}
    for r, (_, rel, _) in enumerate(rows):
        if rel != EQ:
            slack_of[r] = ncore + len(slack_of)
    nslack = len(slack_of)
    art0 = ncore + nslack
    ncols = art0 + m

    col_of_var = {}
    for k, (j, s) in enumerate(columns):
        col_of_var.setdefault(j, []).append((k, s))

    sigma = []
    t_rows, t_rhs = [], []
    for r, (coeffs, rel, rhs) in enumerate(rows):
        row = [_ZERO] * ncols
        shifted = rhs
        for v, a in coeffs.items():
            j = vindex[v]
            shifted -= a * anchor[j]
            for k, s in col_of_var[j]:
                row[k] += a * s
        if rel != EQ:
            row[slack_of[r]] = _ONE if rel == LE else -_ONE
        sg = 1
        if shifted < 0:
            sg = -1
            row = [-a for a in row]
            shifted = -shifted
        row[art0 + r] = _ONE
        sigma.append(sg)
        t_rows.append(row)
        t_rhs.append(shifted)

    tab = _Tableau(t_rows, t_rhs, ncols)
    used_art = set()
    for r in range(m):
        s = slack_of.get(r)
        if s is not None and t_rows[r][s] == 1:
            tab.basis[r] = s
        else:
            tab.basis[r] = art0 + r
            used_art.add(r)

    non_art = range(art0)

    # phase 1
    c1 = [_ZERO] * ncols
    for r in used_art:
        c1[art0 + r] = -_ONE
    cost1 = _reduced(tab, c1)
    tab.run(cost1, non_art)
    phase1_value = -cost1[1]
    if phase1_value < 0:
        y = [c1[art0 + r] - cost1[0][art0 + r] for r in range(m)]
        mult = [sigma[r] * y[r] for r in range(m)]
        cert = _certificate(lp, rows, n_user, internal_upper, mult, anchor_side, vindex)
        if not cert.verify(lp):
            raise LPError("Farkas certificate failed verification")
        STATS["farkas_verified"] += 1
        return LPResult(INFEASIBLE, certificate=cert, pivots=tab.pivots)

    # drive zero-valued artificials out of the basis where possible
    for r in range(m):
        b = tab.basis[r]
        if b >= art0:
            row = tab.rows[r]
            k = next((j for j in non_art if row[j] != 0), None)
            if k is not None:
                tab.pivot(r, k, ())

    # phase 2
    sense = 1 if lp.sense == "max" else -1
    c2 = [_ZERO] * ncols
    for k, (j, s) in enumerate(columns):
        c2[k] = sense * s * lp.objective.get(variables[j], _ZERO)
    cost2 = _reduced(tab, c2)
    status = tab.run(cost2, non_art)
    if status == UNBOUNDED:
        STATS["unbounded"] += 1
        return LPResult(UNBOUNDED, pivots=tab.pivots)

    xcol = [_ZERO] * ncols
    for i, b in enumerate(tab.basis):
        xcol[b] = tab.rhs[i]
    primal = {}
    for j, v in enumerate(variables):
        val = anchor[j]
        for k, s in col_of_var[j]:
            val += s * xcol[k]
        primal[v] = val

    # row duals (as sensitivities of the max-form optimum), then orient for sense
    y_std = [-cost2[0][art0 + r] for r in range(m)]
    d = [sigma[r] * y_std[r] for r in range(m)]
    reduced_var = []
    for j, v in enumerate(variables):
        cj = sense * lp.objective.get(v, _ZERO)
        reduced_var.append(cj)
    for r, (coeffs, _, _) in enumerate(rows):
        if d[r] != 0:
            for v, a in coeffs.items():
                reduced_var[vindex[v]] -= d[r] * a

    opt_max = sum((sense * lp.objective.get(v, _ZERO) * primal[v] for v in variables), _ZERO)
    offset = sum((sense * lp.objective.get(v, _ZERO) * anchor[j] for j, v in enumerate(variables)), _ZERO)
    _check_optimal(lp, rows, primal, d, reduced_var, anchor, anchor_side, opt_max, offset - cost2[1])

    dual = tuple(sense * d[r] for r in range(n_user))
    bound_dual = {}
    for j, v in enumerate(variables):
        if anchor_side[j] is not None:
            bound_dual[(v, anchor_side[j])] = sense * reduced_var[j]
    for r, v in internal_upper.items():
        bound_dual[(v, "upper")] = sense * d[r]
    return LPResult(
        OPTIMAL,
        optimum=sense * opt_max,
        primal=primal,
        dual=dual,
        bound_dual=bound_dual,
        pivots=tab.pivots,
    )


def _certificate(lp, rows, n_user, internal_upper, mult, anchor_side, vindex):
    bound_mult = {}
    for r, v in internal_upper.items():
        if mult[r] != 0:
            bound_mult[(v, "upper")] = mult[r]
    # column conditions give the multipliers of anchored bounds
    colsum = {v: _ZERO for v in lp.variables}
    for r, (coeffs, _, _) in enumerate(rows):
        if mult[r] != 0:
            for v, a in coeffs.items():
                colsum[v] += mult[r] * a
    for v, s in colsum.items():
        side = anchor_side[vindex[v]]
        if s == 0 or side is None:
            continue
        bound_mult[(v, side)] = s if side == "lower" else -s
    row_mult = list(mult[:n_user])
    cert = FarkasCertificate(tuple(row_mult), bound_mult)
    _, rhs = cert.combined(lp)
    if rhs < 0:
        scale = -_ONE / rhs
        cert = FarkasCertificate(
            tuple(a * scale for a in row_mult),
            {k: a * scale for k, a in bound_mult.items()},
        )
    return cert


def _check_optimal(lp, rows, primal, d, reduced_var, anchor, anchor_side, opt_max, tableau_value):
    for c in lp.constraints:
        if not c.satisfied(primal):
            raise LPError(f"primal violates constraint {c.name!r}")
    for v, (lo, hi) in lp.bounds.items():
        if (lo is not None and primal[v] < lo) or (hi is not None and primal[v] > hi):
            raise LPError(f"primal violates bounds of {v!r}")
    if opt_max != tableau_value:
        raise LPError("objective mismatch between tableau and primal")
    dual_obj = _ZERO
    for r, (_, rel, rhs) in enumerate(rows):
        if (rel == LE and d[r] < 0) or (rel == GE and d[r] > 0):
            raise LPError("dual sign violation")
        dual_obj += d[r] * rhs
    for j, rc in enumerate(reduced_var):
        side = anchor_side[j]
        if side is None and rc != 0:
            raise LPError("dual infeasible on a free variable")
        if (side == "lower" and rc > 0) or (side == "upper" and rc < 0):
            raise LPError("bound dual sign violation")
        dual_obj += rc * anchor[j]
    if dual_obj != opt_max:
        raise LPError(f"strong duality failed: primal {opt_max} vs dual {dual_obj}")
    STATS["duality_checked"] += 1


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    witness: Optional[dict] = None
    certificate: Optional[FarkasCertificate] = None

    def __bool__(self):
        return self.feasible


def check_feasible(
    variables: Sequence,
    constraints: Sequence[Constraint],
    bounds: Optional[Mapping] = None,
) -> Feasibility:
    lp = LinearProgram(list(variables), {}, "max", list(constraints), dict(bounds or {}))
    res = solve_lp(lp)
    if res.status == INFEASIBLE:
        return Feasibility(False, certificate=res.certificate)
    return Feasibility(True, witness=res.primal)


def constraint(coeffs: Mapping, relation: str, rhs, name: str = "") -> Constraint:
    return Constraint({v: as_rat(a) for v, a in coeffs.items() if a != 0}, relation, as_rat(rhs), name)


def verify_optimal(lp: LinearProgram, res: LPResult) -> bool:
    """Independent re-check of an Optimal result from its primal and dual data.

    Primal feasibility, dual sign conditions, ``A^T dual + bound duals = c``
    and equal objective values, all in exact arithmetic.
    """
    if res.status != OPTIMAL:
        return False
    x = res.primal
    if not all(c.satisfied(x) for c in lp.constraints):
        return False
    for v, (lo, hi) in lp.bounds.items():
        if (lo is not None and x[v] < lo) or (hi is not None and x[v] > hi):
            return False
    sense = 1 if lp.sense == "max" else -1
    if sum((a * x[v] for v, a in lp.objective.items()), _ZERO) != res.optimum:
        return False
    grad = {v: _ZERO for v in lp.variables}
    dual_obj = _ZERO
    for y, c in zip(res.dual, lp.constraints):
        s = sense * y
        if (c.relation == LE and s < 0) or (c.relation == GE and s > 0):
            return False
        for v, a in c.coeffs.items():
            grad[v] += y * a
        dual_obj += y * c.rhs
    for (v, side), y in res.bound_dual.items():
        lo, hi = lp.bounds[v]
        s = sense * y
        if (side == "lower" and s > 0) or (side == "upper" and s < 0):
            return False
        grad[v] += y
        dual_obj += y * (lo if side == "lower" else hi)
    if any(grad[v] != lp.objective.get(v, _ZERO) for v in lp.variables):
        return False
    return dual_obj == res.optimum
