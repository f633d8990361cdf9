"""Trading networks: agents, directed trades, net-flows, surplus and demand."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import lp as lpmod
from .convexity import FiniteIntFunction, PointSet, is_msharp_concave_fn
from .rational import NEG_INF, Value, Vec, as_rat, is_finite


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Arc:
    id: str
    seller: str
    buyer: str
    capacity: int = 1


@dataclass(frozen=True)
class TradeGraph:
    agents: tuple
    arcs: tuple

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        if len(set(self.agents)) != len(self.agents):
            raise NetworkError("duplicate agent id")
        seen = set()
        for a in self.arcs:
            if a.id in seen:
                raise NetworkError(f"duplicate arc id {a.id!r}")
            seen.add(a.id)
            if a.seller == a.buyer:
                raise NetworkError(f"arc {a.id!r} has seller == buyer")
            for end in (a.seller, a.buyer):
                if end not in self.agents:
                    raise NetworkError(f"arc {a.id!r} references unknown agent {end!r}")
            if isinstance(a.capacity, bool) or not isinstance(a.capacity, int) or a.capacity < 1:
                raise NetworkError(f"arc {a.id!r} capacity must be a positive integer")

    @property
    def arc_ids(self) -> tuple:
        return tuple(a.id for a in self.arcs)

    def arc(self, arc_id) -> Arc:
        for a in self.arcs:
            if a.id == arc_id:
                return a
        raise KeyError(arc_id)

    def out_arcs(self, agent) -> tuple:
        return tuple(a.id for a in self.arcs if a.seller == agent)

    def in_arcs(self, agent) -> tuple:
        return tuple(a.id for a in self.arcs if a.buyer == agent)

    def incident(self, agent) -> tuple:
        """delta(i) in arc order."""
        return tuple(a.id for a in self.arcs if agent in (a.seller, a.buyer))

    def capacities(self) -> tuple:
        return tuple(a.capacity for a in self.arcs)


@dataclass(frozen=True)
class AgentValuation:
    agent: str
    fn: FiniteIntFunction


def validate_valuation(g: TradeGraph, v: AgentValuation) -> None:
    """Coordinates must be delta(i) in arc order; domain points respect signs and capacities."""
    if v.agent not in g.agents:
        raise NetworkError(f"valuation for unknown agent {v.agent!r}")
    inc = g.incident(v.agent)
    if tuple(v.fn.index) != inc:
        raise NetworkError(f"valuation of {v.agent!r} must be indexed by {inc!r}, got {v.fn.index!r}")
    for point in v.fn.domain:
        for arc_id, amount in zip(inc, point):
            a = g.arc(arc_id)
            if a.seller == v.agent and not 0 <= amount <= a.capacity:
                raise NetworkError(f"agent {v.agent!r} point {point!r}: sale on {arc_id!r} must lie in [0, {a.capacity}]")
            if a.buyer == v.agent and not -a.capacity <= amount <= 0:
                raise NetworkError(f"agent {v.agent!r} point {point!r}: purchase on {arc_id!r} must lie in [-{a.capacity}, 0]")


def _outcome_values(g: TradeGraph, x) -> tuple:
    if isinstance(x, Vec):
        if x.index != g.arc_ids:
            raise NetworkError("outcome index does not match arcs")
        return tuple(x.values)
    if isinstance(x, Mapping):
        return tuple(Vec.of(x, g.arc_ids).values)
    return tuple(x)


def check_outcome(g: TradeGraph, x) -> tuple:
    vals = _outcome_values(g, x)
    if len(vals) != len(g.arcs):
        raise NetworkError("outcome has wrong length")
    for a, v in zip(g.arcs, vals):
        if int(v) != v or not 0 <= v <= a.capacity:
            raise NetworkError(f"outcome on {a.id!r} must be an integer in [0, {a.capacity}], got {v}")
    return tuple(int(v) for v in vals)


def outcome_to_netflow(g: TradeGraph, x) -> dict:
    """Per-agent net-flow Vecs: +x_e for the seller of e, -x_e for its buyer."""
    vals = dict(zip(g.arc_ids, check_outcome(g, x)))
    flows = {}
    for agent in g.agents:
        inc = g.incident(agent)
        flows[agent] = Vec(inc, tuple(vals[e] if g.arc(e).seller == agent else -vals[e] for e in inc))
    return flows


def netflow_to_outcome(g: TradeGraph, flows: Mapping) -> Vec:
    x = {}
    for a in g.arcs:
        ys, yb = flows[a.seller][a.id], flows[a.buyer][a.id]
        if ys + yb != 0:
            raise NetworkError(f"infeasible net-flow on {a.id!r}: {ys} + {yb} != 0")
        if ys < 0:
            raise NetworkError(f"seller flow on {a.id!r} is negative")
        x[a.id] = ys
    return Vec.of(x, g.arc_ids)


def _price(p, arc_id) -> Fraction:
    if isinstance(p, Vec):
        return as_rat(p[arc_id])
    return as_rat(p[arc_id])


def surplus(v: AgentValuation, y, p) -> Value:
    """w_i(y) + p.y; sellers earn and buyers pay through the sign of y."""
    if not isinstance(y, Vec):
        y = Vec(v.fn.index, tuple(y))
    w = v.fn(y)
    if not is_finite(w):
        return NEG_INF
    return w + sum((a * _price(p, e) for e, a in zip(y.index, y.values)), Fraction(0))


def demand(v: AgentValuation, p) -> PointSet:
    points = sorted(v.fn.domain)
    if not points:
        raise NetworkError(f"agent {v.agent!r} has an empty domain")
    prices = [_price(p, e) for e in v.fn.index]
    best = None
    arg = []
    for z in points:
        u = v.fn.value(z) + sum((a * q for a, q in zip(z, prices)), Fraction(0))
        if best is None or u > best:
            best, arg = u, [z]
        elif u == best:
            arg.append(z)
    return PointSet(v.fn.index, frozenset(arg))


def aggregate_value(g: TradeGraph, valuations: Mapping, x) -> Value:
    flows = outcome_to_netflow(g, x)
    total = Fraction(0)
    for agent in g.agents:
        total = total + valuations[agent].fn(flows[agent])
    return total


# ----------------------------------------------------------------------------
# separability


def is_linear_on_domain(f: FiniteIntFunction) -> bool:
    """True when f(z) = c0 + c.z on the whole effective domain for some rational c0, c."""
    pts = sorted(f.domain)
    if len(pts) <= 1:
        return True
    names = ["const"] + [f"c{k}" for k in range(len(f.index))]
    cons = [
        lpmod.constraint({"const": 1, **{f"c{k}": z[k] for k in range(len(z))}}, lpmod.EQ, f.value(z))
        for z in pts
    ]
    return lpmod.check_feasible(names, cons).feasible


def is_box(points: frozenset, n: int) -> bool:
    if not points:
        return False
    ranges = []
    for k in range(n):
        vals = {p[k] for p in points}
        lo, hi = min(vals), max(vals)
        if len(vals) != hi - lo + 1:
            return False
        ranges.append(hi - lo + 1)
    size = 1
    for r in ranges:
        size *= r
    return size == len(points)


@dataclass
class AgentStructure:
    agent: str
    role: str  # seller | buyer | both | isolated
    separable: bool
    reason: str = ""
    outgoing_msharp: Optional[bool] = None
    outgoing_linear_box: Optional[bool] = None
    incoming_msharp: Optional[bool] = None
    incoming_linear_box: Optional[bool] = None
    mixed_condition: Optional[bool] = None


@dataclass
class StructureReport:
    agents: list = field(default_factory=list)
    two_sided: bool = False
    # every agent: outgoing part M-natural-concave, incoming part linear on a box
    outgoing_concave_form: bool = False
    # mirror: incoming part M-natural-concave, outgoing part linear on a box
    incoming_concave_form: bool = False

    @property
    def separable_market_hypotheses(self) -> bool:
        return self.outgoing_concave_form or self.incoming_concave_form


def _split(g: TradeGraph, v: AgentValuation):
    inc = v.fn.index
    out_pos = [k for k, e in enumerate(inc) if g.arc(e).seller == v.agent]
    in_pos = [k for k, e in enumerate(inc) if g.arc(e).buyer == v.agent]
    return out_pos, in_pos


def _sub(point, positions):
    return tuple(point[k] for k in positions)


def classify_agent(g: TradeGraph, v: AgentValuation) -> AgentStructure:
    out_pos, in_pos = _split(g, v)
    role = {(True, True): "both", (True, False): "seller", (False, True): "buyer", (False, False): "isolated"}[
        (bool(out_pos), bool(in_pos))
    ]
    inc = v.fn.index
    out_idx = tuple(inc[k] for k in out_pos)
    in_idx = tuple(inc[k] for k in in_pos)
    dom = sorted(v.fn.domain)
    if not dom:
        return AgentStructure(v.agent, role, False, reason="empty domain")

    a_set = sorted({_sub(z, out_pos) for z in dom})
    b_set = sorted({_sub(z, in_pos) for z in dom})

    def compose(a, b):
        z = [0] * len(inc)
        for k, val in zip(out_pos, a):
            z[k] = val
        for k, val in zip(in_pos, b):
            z[k] = val
        return tuple(z)

    # mixed condition: slices with one side held fixed
    mixed = True
    for a in a_set:
        pts = {_sub(z, in_pos): v.fn.value(z) for z in dom if _sub(z, out_pos) == a}
        if not is_linear_on_domain(FiniteIntFunction(in_idx, pts)):
            mixed = False
            break
    if mixed:
        for b in b_set:
            pts = {_sub(z, out_pos): v.fn.value(z) for z in dom if _sub(z, in_pos) == b}
            if not is_msharp_concave_fn(FiniteIntFunction(out_idx, pts)):
                mixed = False
                break

    report = AgentStructure(v.agent, role, False, mixed_condition=mixed)
    if len(dom) != len(a_set) * len(b_set):
        report.reason = "domain is not a product of outgoing and incoming projections"
        return report
    # against a fixed anchor (a0, b0) this is equivalent to the rectangle identity on all pairs
    a0, b0 = a_set[0], b_set[0]
    w = lambda a, b: v.fn.value(compose(a, b))  # noqa: E731
    base = w(a0, b0)
    for a in a_set:
        for b in b_set:
            if w(a, b) + base != w(a, b0) + w(a0, b):
                report.reason = f"rectangle identity fails at outgoing {a}, incoming {b}"
                return report
    report.separable = True
    w_out = FiniteIntFunction(out_idx, {a: w(a, b0) for a in a_set})
    w_in = FiniteIntFunction(in_idx, {b: w(a0, b) - base for b in b_set})
    report.outgoing_msharp = bool(is_msharp_concave_fn(w_out))
    report.incoming_msharp = bool(is_msharp_concave_fn(w_in))
    report.outgoing_linear_box = is_linear_on_domain(w_out) and is_box(w_out.domain, len(out_idx))
    report.incoming_linear_box = is_linear_on_domain(w_in) and is_box(w_in.domain, len(in_idx))
    return report


def classify_structure(g: TradeGraph, valuations: Mapping) -> StructureReport:
    agents = [classify_agent(g, valuations[a]) for a in g.agents]
    rep = StructureReport(agents)
    rep.two_sided = all(s.role != "both" for s in agents)
    rep.outgoing_concave_form = all(s.separable and s.outgoing_msharp and s.incoming_linear_box for s in agents)
    rep.incoming_concave_form = all(s.separable and s.incoming_msharp and s.outgoing_linear_box for s in agents)
    return rep
