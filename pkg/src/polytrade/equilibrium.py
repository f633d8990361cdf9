"""Competitive equilibrium: verification, price search and non-existence certificates.

Two price notions are supported and always labelled:

``arc-prices``
    One price per arc; every agent demands its bundle at those prices.
``arc-prices+rents``
    Additionally a nonnegative rent ``mu_S`` per polymatroid inequality that
    is tight at the outcome.  The seller of arc ``e`` receives
    ``p_e - sum_{S contains e} mu_S``; the buyer pays ``p_e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import lp as lpmod
from .allocation import EAInstance, integral_optimum, outcome_function, solve_integral
from .convexity import PointSet
from .network import aggregate_value, check_outcome, demand, outcome_to_netflow, surplus
from .polymatroid import membership
from .rational import Vec, format_rat, is_finite

ARC_PRICES = "arc-prices"
RENTS = "arc-prices+rents"


class InfeasibleOutcome(ValueError):
    pass


@dataclass(frozen=True)
class PriceSystem:
    p: Vec
    rents: dict = field(default_factory=dict)  # frozenset(arc ids) -> Fraction
    notion: str = ARC_PRICES

    def __post_init__(self):
        if self.rents and self.notion != RENTS:
            object.__setattr__(self, "notion", RENTS)

    def effective_prices(self, inst: EAInstance, agent) -> dict:
        """Per-arc prices seen by ``agent``; rents reduce what sellers receive."""
        out = {}
        for e in inst.graph.incident(agent):
            q = Fraction(self.p[e])
            if inst.graph.arc(e).seller == agent:
                q -= sum((mu for S, mu in self.rents.items() if e in S), Fraction(0))
            out[e] = q
        return out

    def to_json(self) -> dict:
        return {
            "notion": self.notion,
            "p": {k: format_rat(v) for k, v in self.p.as_dict().items()},
            "rents": [
                {"subset": sorted(map(str, S)), "mu": format_rat(mu)}
                for S, mu in sorted(self.rents.items(), key=lambda kv: (len(kv[0]), sorted(map(str, kv[0]))))
            ],
        }


@dataclass(frozen=True)
class AgentCheck:
    agent: str
    bundle: Vec
    surplus: object
    demand: PointSet
    in_demand: bool


@dataclass(frozen=True)
class CEReport:
    outcome: Vec
    prices: PriceSystem
    agents: tuple
    rents_ok: bool
    verdict: bool

    @property
    def notion(self) -> str:
        return self.prices.notion

    def to_json(self) -> dict:
        return {
            "notion": self.notion,
            "outcome": self.outcome.as_dict(),
            "prices": self.prices.to_json(),
            "agents": [
                {
                    "agent": a.agent,
                    "bundle": a.bundle.as_dict(),
                    "surplus": format_rat(a.surplus),
                    "demand": [dict(zip(a.demand.index, z)) for z in a.demand.sorted()],
                    "in_demand": a.in_demand,
                }
                for a in self.agents
            ],
            "rents_ok": self.rents_ok,
            "verdict": self.verdict,
        }


def _feasible_outcome(inst: EAInstance, x) -> Vec:
    try:
        vals = check_outcome(inst.graph, x)
    except ValueError as exc:
        raise InfeasibleOutcome(str(exc)) from exc
    if inst.constraint is not None and not membership(inst.constraint, vals):
        raise InfeasibleOutcome(f"outcome {vals} violates the polymatroid constraint")
    return Vec(inst.graph.arc_ids, vals)


def _load(x: Vec, S) -> int:
    return sum(x[e] for e in S)


def verify_ce(inst: EAInstance, x, ps: PriceSystem) -> CEReport:
    x = _feasible_outcome(inst, x)
    flows = outcome_to_netflow(inst.graph, x)
    checks = []
    for agent in inst.graph.agents:
        v = inst.valuations[agent]
        q = ps.effective_prices(inst, agent)
        y = flows[agent]
        d = demand(v, q)
        checks.append(AgentCheck(agent, y, surplus(v, y, q), d, tuple(y.values) in d.points))
    rents_ok = True
    if ps.rents:
        if inst.constraint is None:
            rents_ok = False
        else:
            for S, mu in ps.rents.items():
                if mu < 0 or (mu > 0 and _load(x, S) != inst.constraint.fn(S)):
                    rents_ok = False
    verdict = rents_ok and all(c.in_demand for c in checks)
    return CEReport(x, ps, tuple(checks), rents_ok, verdict)


@dataclass(frozen=True)
class PriceSearch:
    """Result of a price search at one outcome.

    ``found`` carries a :class:`PriceSystem`; otherwise ``certificate`` is a
    Farkas certificate for ``program`` (or ``None`` when some agent's bundle
    is outside its valuation domain, recorded in ``reason``).
    """

    outcome: Vec
    notion: str
    found: Optional[PriceSystem] = None
    program: Optional[lpmod.LinearProgram] = None
    certificate: Optional[lpmod.FarkasCertificate] = None
    reason: str = ""

    def __bool__(self):
        return self.found is not None

    def recheck(self) -> bool:
        if self.found is not None:
            return True
        if self.certificate is None:
            return bool(self.reason)
        return self.certificate.verify(self.program)

    def to_json(self) -> dict:
        doc = {"outcome": self.outcome.as_dict(), "notion": self.notion, "found": self.found is not None}
        if self.found is not None:
            doc["prices"] = self.found.to_json()
            return doc
        doc["reason"] = self.reason
        if self.certificate is not None:
            rows = []
            for m, c in zip(self.certificate.multipliers, self.program.constraints):
                if m != 0:
                    rows.append({
                        "constraint": c.name,
                        "coeffs": {k: format_rat(a) for k, a in c.coeffs.items()},
                        "relation": c.relation,
                        "rhs": format_rat(c.rhs),
                        "multiplier": format_rat(m),
                    })
            bounds = []
            for (var, side), nu in sorted(self.certificate.bound_multipliers.items()):
                if nu != 0:
                    lo, hi = self.program.bounds[var]
                    bounds.append({
                        "variable": var,
                        "side": side,
                        "bound": format_rat(lo if side == "lower" else hi),
                        "multiplier": format_rat(nu),
                    })
            doc["farkas"] = {"rows": rows, "bounds": bounds}
        return doc


def _rent_name(S, ground) -> str:
    return "mu[" + ",".join(str(e) for e in ground if e in S) + "]"


def price_program(inst: EAInstance, x: Vec, rents: bool) -> tuple:
    """Demand inequalities at ``x`` as an LP over prices (and tight-set rents).

    Returns ``(program, rent_sets, bad_agent)``; ``bad_agent`` names an agent
    whose bundle has value -inf, in which case no program is built.
    """
    g = inst.graph
    flows = outcome_to_netflow(g, x)
    pvars = [f"p[{e}]" for e in g.arc_ids]
    rent_sets = []
    if rents:
        P = inst.constraint
        for mask in range(1, 1 << P.fn.n):
            S = P.fn.subset(mask)
            if _load(x, S) == P.fn.at(mask):
                rent_sets.append(S)
    rvars = [_rent_name(S, g.arc_ids) for S in rent_sets]
    prog = lpmod.LinearProgram(pvars + rvars, {}, "max", bounds={r: (Fraction(0), None) for r in rvars})
    for agent in g.agents:
        v = inst.valuations[agent]
        y = tuple(flows[agent].values)
        wy = v.fn.value(y)
        if not is_finite(wy):
            return None, rent_sets, agent
        inc = v.fn.index
        sells = [g.arc(e).seller == agent for e in inc]
        for z in sorted(v.fn.domain):
            if z == y:
                continue
            delta = [a - b for a, b in zip(z, y)]
            coeffs = {}
            for e, d in zip(inc, delta):
                if d:
                    coeffs[f"p[{e}]"] = coeffs.get(f"p[{e}]", 0) + d
            for S, r in zip(rent_sets, rvars):
                load = sum(d for e, d, s in zip(inc, delta, sells) if s and e in S)
                if load:
                    coeffs[r] = coeffs.get(r, 0) - load
            label = ",".join(f"{e}={a}" for e, a in zip(inc, z))
            prog.add(coeffs, lpmod.LE, wy - v.fn.value(z), name=f"agent {agent} prefers bundle over ({label})")
    return prog, rent_sets, None


def _search(inst: EAInstance, x, rents: bool) -> PriceSearch:
    x = _feasible_outcome(inst, x)
    notion = RENTS if rents else ARC_PRICES
    prog, rent_sets, bad = price_program(inst, x, rents)
    if bad is not None:
        return PriceSearch(x, notion, reason=f"bundle of agent {bad!r} has value -inf")
    res = lpmod.solve_lp(prog)
    if res.status == lpmod.INFEASIBLE:
        return PriceSearch(x, notion, program=prog, certificate=res.certificate)
    sol = res.primal
    p = Vec(inst.graph.arc_ids, tuple(sol[f"p[{e}]"] for e in inst.graph.arc_ids))
    mus = {}
    for S in rent_sets:
        mu = sol[_rent_name(S, inst.graph.arc_ids)]
        if mu != 0:
            mus[S] = mu
    return PriceSearch(x, notion, found=PriceSystem(p, mus, notion), program=prog)


def find_arc_prices(inst: EAInstance, x) -> PriceSearch:
    return _search(inst, x, rents=False)


def find_prices_with_rents(inst: EAInstance, x) -> PriceSearch:
    if inst.constraint is None:
        raise ValueError("rent-based prices need a polymatroid constraint")
    return _search(inst, x, rents=True)


@dataclass(frozen=True)
class NonexistenceCertificate:
    outcomes: tuple  # Vecs, in lexicographic order
    searches: tuple  # PriceSearch per outcome and notion

    def recheck(self) -> bool:
        return all(s.found is None and s.recheck() for s in self.searches)

    def to_json(self) -> dict:
        return {
            "outcomes": [x.as_dict() for x in self.outcomes],
            "searches": [s.to_json() for s in self.searches],
        }


@dataclass(frozen=True)
class Certification:
    exists: bool
    outcome: Optional[Vec] = None
    prices: Optional[PriceSystem] = None
    certificate: Optional[NonexistenceCertificate] = None

    def __bool__(self):
        return self.exists

    def to_json(self) -> dict:
        if self.exists:
            return {"exists": True, "outcome": self.outcome.as_dict(),
                    "prices": self.prices.to_json()}
        return {"exists": False, "certificate": self.certificate.to_json()}


def certify_nonexistence(inst: EAInstance, arc_prices_too: bool = True) -> Certification:
    """Search every feasible integral outcome with finite value for supporting prices.

    With a constraint, each outcome is tried with rents and, when
    ``arc_prices_too``, with arc prices alone.  Without a constraint only arc
    prices apply.
    """
    g = outcome_function(inst)
    if inst.constraint is not None:
        outcomes = [z for z in sorted(g.domain) if membership(inst.constraint, z)]
    else:
        outcomes = sorted(g.domain)
    searches = []
    for z in outcomes:
        x = Vec(g.index, z)
        tries = []
        if inst.constraint is not None:
            tries.append(find_prices_with_rents)
            if arc_prices_too:
                tries.append(find_arc_prices)
        else:
            tries.append(find_arc_prices)
        for finder in tries:
            found = finder(inst, x)
            if found:
                return Certification(True, x, found.found)
            searches.append(found)
    return Certification(False, certificate=NonexistenceCertificate(tuple(Vec(g.index, z) for z in outcomes), tuple(searches)))


def check_first_welfare(inst: EAInstance, x, ps: PriceSystem) -> bool:
    """A verified equilibrium outcome attains the integral optimum."""
    report = verify_ce(inst, x, ps)
    if not report.verdict:
        raise ValueError("price system does not support the outcome")
    if not ps.rents and inst.constraint is not None:
        # arc-only prices: efficiency is relative to the unconstrained problem
        best = solve_integral(inst.without_constraint()).value
    else:
        best = solve_integral(inst).value
    return aggregate_value(inst.graph, inst.valuations, report.outcome) == best
