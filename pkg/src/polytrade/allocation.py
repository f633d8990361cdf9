"""Efficient allocation under polymatroid constraints.

The integral problem is solved by enumeration; the relaxation is a lottery LP
on outcome space: lotteries over finite-valued outcomes in the capacity box
whose *mean* must satisfy the polymatroid inequalities.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from . import lp as lpmod
from .convexity import FiniteIntFunction, LotteryWitness, PointSet, PreconditionError, is_msharp_concave_fn
from .network import AgentValuation, TradeGraph, aggregate_value, validate_valuation
from .polymatroid import Polymatroid, SetFunction, membership
from .rational import NEG_INF, Vec, format_rat, is_finite


class SizeLimitError(ValueError):
    pass


class NoFeasibleOutcome(ValueError):
    pass


@dataclass(frozen=True)
class DeskLimits:
    max_arcs: int = 8
    max_capacity: int = 3
    max_domain: int = 2000


DEFAULT_LIMITS = DeskLimits()


@dataclass
class EAInstance:
    graph: TradeGraph
    valuations: dict
    constraint: Optional[Polymatroid] = None
    name: str = ""

    def __post_init__(self):
        for agent in self.graph.agents:
            if agent not in self.valuations:
                raise ValueError(f"no valuation for agent {agent!r}")
        for agent, v in self.valuations.items():
            if v.agent != agent:
                raise ValueError(f"valuation keyed {agent!r} belongs to {v.agent!r}")
            validate_valuation(self.graph, v)
        if self.constraint is not None and self.constraint.ground != self.graph.arc_ids:
            raise ValueError("constraint ground set must equal the arc set (in arc order)")

    def check_limits(self, limits: DeskLimits = DEFAULT_LIMITS) -> None:
        g = self.graph
        if len(g.arcs) > limits.max_arcs:
            raise SizeLimitError(f"{len(g.arcs)} arcs exceeds the limit of {limits.max_arcs}")
        worst = max(g.capacities(), default=0)
        if worst > limits.max_capacity:
            raise SizeLimitError(f"capacity {worst} exceeds the limit of {limits.max_capacity}")
        for v in self.valuations.values():
            if len(v.fn.table) > limits.max_domain:
                raise SizeLimitError(f"valuation of {v.agent!r} has {len(v.fn.table)} entries (limit {limits.max_domain})")

    def without_constraint(self) -> "EAInstance":
        return EAInstance(self.graph, self.valuations, None, self.name)

    def effective_constraint(self) -> Polymatroid:
        """The given polymatroid, or the box polymatroid of the capacities."""
        if self.constraint is not None:
            return self.constraint
        caps = dict(zip(self.graph.arc_ids, self.graph.capacities()))
        return Polymatroid(SetFunction.additive(caps))


def outcome_function(inst: EAInstance, limits: DeskLimits = DEFAULT_LIMITS) -> FiniteIntFunction:
    """g(x) = sum_i w_i(y^i(x)) tabulated on finite-valued outcomes of the capacity box."""
    inst.check_limits(limits)
    g = inst.graph
    table = {}
    for x in itertools.product(*(range(c + 1) for c in g.capacities())):
        val = aggregate_value(g, inst.valuations, x)
        if is_finite(val):
            table[x] = val
    if not table:
        raise NoFeasibleOutcome("no outcome in the capacity box has finite aggregate value")
    return FiniteIntFunction(g.arc_ids, table)


@dataclass(frozen=True)
class IntegralResult:
    value: Fraction
    argmax: PointSet


@dataclass(frozen=True)
class RelaxationResult:
    value: Fraction
    mean: Vec
    lottery: LotteryWitness
    program: lpmod.LinearProgram = field(repr=False, compare=False, default=None)
    dual: tuple = field(repr=False, compare=False, default=())


def integral_optimum(f: FiniteIntFunction, P: Optional[Polymatroid]) -> IntegralResult:
    feasible = [z for z in sorted(f.domain) if P is None or membership(P, z)]
    if not feasible:
        raise NoFeasibleOutcome("no feasible integral point with finite value")
    best = max(f.value(z) for z in feasible)
    return IntegralResult(best, PointSet(f.index, frozenset(z for z in feasible if f.value(z) == best)))


def relaxation_optimum(f: FiniteIntFunction, P: Optional[Polymatroid]) -> RelaxationResult:
    points = sorted(f.domain)
    if not points:
        raise NoFeasibleOutcome("empty finite support")
    names = [f"l{k}" for k in range(len(points))]
    prog = lpmod.LinearProgram(
        names,
        {n: f.value(z) for n, z in zip(names, points)},
        "max",
        bounds={n: (Fraction(0), None) for n in names},
    )
    prog.add({n: 1 for n in names}, lpmod.EQ, 1, name="total")
    if P is not None:
        fn = P.fn
        for mask in range(1, 1 << fn.n):
            coeffs = {n: sum(z[k] for k in range(fn.n) if mask >> k & 1) for n, z in zip(names, points)}
            label = ",".join(str(fn.ground[k]) for k in range(fn.n) if mask >> k & 1)
            prog.add(coeffs, lpmod.LE, fn.at(mask), name=f"x({label})")
    res = lpmod.solve_lp(prog)
    if res.status != lpmod.OPTIMAL:
        raise NoFeasibleOutcome(f"relaxation is {res.status.lower()}")
    support = tuple((Vec(f.index, z), res.primal[n]) for n, z in zip(names, points) if res.primal[n] > 0)
    mean = [Fraction(0)] * len(f.index)
    for z, w in support:
        for k, a in enumerate(z.values):
            mean[k] += w * a
    mean_vec = Vec(f.index, tuple(mean))
    return RelaxationResult(res.optimum, mean_vec, LotteryWitness(support, mean_vec, res.optimum), prog, res.dual)


def solve_integral(inst: EAInstance, limits: DeskLimits = DEFAULT_LIMITS) -> IntegralResult:
    if not inst.graph.arcs:
        total = sum((inst.valuations[a].fn(()) for a in inst.graph.agents), Fraction(0))
        if not is_finite(total):
            raise NoFeasibleOutcome("empty outcome has value -inf")
        return IntegralResult(total, PointSet((), frozenset({()})))
    return integral_optimum(outcome_function(inst, limits), inst.constraint)


def solve_relaxation(inst: EAInstance, limits: DeskLimits = DEFAULT_LIMITS) -> RelaxationResult:
    return relaxation_optimum(outcome_function(inst, limits), inst.constraint)


@dataclass
class SolveReport:
    integral_value: Fraction
    integral_argmax: list
    fractional_value: Fraction
    fractional_mean: Vec
    lottery: LotteryWitness
    gap: bool
    timings: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        # timings stay out of the document so identical runs serialize identically
        return {
            "integral": {
                "value": format_rat(self.integral_value),
                "argmax": [{k: v for k, v in z.as_dict().items()} for z in self.integral_argmax],
            },
            "fractional": {
                "value": format_rat(self.fractional_value),
                "mean": {k: format_rat(v) for k, v in self.fractional_mean.as_dict().items()},
                "lottery": [
                    {"point": z.as_dict(), "weight": format_rat(w)} for z, w in self.lottery.support
                ],
            },
            "gap": self.gap,
        }


def detect_gap(inst: EAInstance, limits: DeskLimits = DEFAULT_LIMITS) -> SolveReport:
    t0 = time.perf_counter()
    integral = solve_integral(inst, limits)
    t1 = time.perf_counter()
    if inst.graph.arcs:
        relax = solve_relaxation(inst, limits)
    else:
        empty = Vec((), ())
        relax = RelaxationResult(integral.value, empty, LotteryWitness(((empty, Fraction(1)),), empty, integral.value))
    t2 = time.perf_counter()
    if relax.value < integral.value:
        raise AssertionError("relaxation below integral optimum")
    return SolveReport(
        integral.value,
        integral.argmax.vecs(),
        relax.value,
        relax.mean,
        relax.lottery,
        relax.value > integral.value,
        {"integral_s": t1 - t0, "relaxation_s": t2 - t1},
    )


def verify_relaxation_integral(f: FiniteIntFunction, P: Polymatroid) -> bool:
    """For M-natural-concave ``f``: max of the concave closure over P equals the integral maximum."""
    pre = is_msharp_concave_fn(f)
    if not pre:
        raise PreconditionError(f"function is not M-natural-concave: {pre.witness}")
    if f.index != P.ground:
        raise ValueError("function and polymatroid live on different ground sets")
    integral = integral_optimum(f, P)
    relax = relaxation_optimum(f, P)
    return relax.value == integral.value
