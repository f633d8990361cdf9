"""Property suites: deterministic batches of generated instances, each checked
against an exhaustive oracle.

Every runner takes ``(seed, count)`` and returns a :class:`SuiteResult`.
Instance ``k`` of a run is drawn from its own ``random.Random`` keyed by
suite name, seed and ``k``, so any single failure can be replayed alone.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import lp as lpmod
from .allocation import detect_gap, integral_optimum, relaxation_optimum, solve_integral
from .convexity import (
    concave_extension_eval,
    facet_set,
    is_m_convex_set,
    is_msharp_convex_set,
    lotteries_within,
    lottery_value,
)
from .equilibrium import (
    certify_nonexistence,
    check_first_welfare,
    find_arc_prices,
    find_prices_with_rents,
    verify_ce,
)
from .generators import (
    random_hull_point,
    random_mconvex_pair,
    random_cycle_instance,
    random_mconvex_set,
    random_msharp_function,
    random_multi_sided_instance,
    random_polymatroid,
    random_two_sided_instance,
)
from .network import aggregate_value
from .polymatroid import (
    greedy_vertex,
    is_submodular,
    membership,
    objective_battery,
    points_from_set_fn,
    polymatroid_lp,
    set_fn_from_mconvex_set,
    verify_closure_intersection,
)
from .rational import format_rat

MAX_FAILURES_KEPT = 10


@dataclass
class SuiteResult:
    name: str
    seed: int
    count: int = 0
    passed: int = 0
    failures: list = field(default_factory=list)
    tallies: dict = field(default_factory=dict)
    welfare_checks: int = 0
    welfare_failures: int = 0
    elapsed: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.passed == self.count and self.welfare_failures == 0

    def fail(self, k: int, detail) -> None:
        if len(self.failures) < MAX_FAILURES_KEPT:
            self.failures.append({"instance": k, "detail": detail})

    def bump(self, key: str, n: int = 1) -> None:
        self.tallies[key] = self.tallies.get(key, 0) + n

    def to_json(self) -> dict:
        # elapsed time is left out so reruns serialize identically
        return {
            "suite": self.name,
            "seed": self.seed,
            "count": self.count,
            "passed": self.passed,
            "ok": self.ok,
            "failures": self.failures,
            "tallies": dict(sorted(self.tallies.items())),
            "welfare_checks": self.welfare_checks,
            "welfare_failures": self.welfare_failures,
        }


def _rng(name: str, seed: int, k: int) -> random.Random:
    return random.Random(f"{name}:{seed}:{k}")


def _run(name: str, seed: int, count: int, body) -> SuiteResult:
    res = SuiteResult(name, seed)
    t0 = time.perf_counter()
    for k in range(count):
        res.count += 1
        try:
            detail = body(_rng(name, seed, k), res)
        except Exception as exc:  # a crash on one instance is a failure, not an abort
            detail = f"{type(exc).__name__}: {exc}"
        if detail is None:
            res.passed += 1
        else:
            res.fail(k, detail)
    res.elapsed = time.perf_counter() - t0
    return res


def _welfare(res: SuiteResult, inst, x, ps) -> bool:
    res.welfare_checks += 1
    if check_first_welfare(inst, x, ps):
        return True
    res.welfare_failures += 1
    return False


def _ground(n: int) -> tuple:
    return tuple(f"a{k}" for k in range(n))


def _lottery_sound(f, P, relax) -> bool:
    lot = relax.lottery
    if sum(w for _, w in lot.support) != 1 or any(w <= 0 for _, w in lot.support):
        return False
    if P is not None and not membership(P, relax.mean.values):
        return False
    return lottery_value(f, lot.support) == relax.value


# ----------------------------------------------------------------------------
# integrality of the relaxation


def relaxation_integrality(seed: int = 0, count: int = 200, max_arcs: int = 4, max_cap: int = 2) -> SuiteResult:
    """M-natural-concave f over an integral polymatroid: relaxation value == integral value."""

    def body(rng, res):
        n = rng.randint(1, max_arcs)
        caps = [rng.randint(1, max_cap) for _ in range(n)]
        f = random_msharp_function(rng, _ground(n), caps)
        P = random_polymatroid(rng, f.index, max_cap)
        feasible = [z for z in f.domain if membership(P, z)]
        if not feasible:
            res.bump("no feasible integral point")
            return None
        integral = integral_optimum(f, P)
        relax = relaxation_optimum(f, P)
        if not _lottery_sound(f, P, relax):
            return "relaxation witness does not re-verify"
        if relax.value != integral.value:
            return {"integral": format_rat(integral.value), "fractional": format_rat(relax.value)}
        res.bump("checked")
        return None

    return _run("integrality", seed, count, body)


def two_sided(seed: int = 0, count: int = 200, max_arcs: int = 4, max_cap: int = 2) -> SuiteResult:
    """Two-sided separable instances: no gap, and rent prices support an integral optimum."""

    def body(rng, res):
        inst = random_two_sided_instance(rng, max_arcs, max_cap)
        res.bump(inst.name)
        rep = detect_gap(inst)
        if rep.gap:
            return {"gap": True, "integral": format_rat(rep.integral_value),
                    "fractional": format_rat(rep.fractional_value)}
        x = rep.integral_argmax[0]
        search = find_prices_with_rents(inst, x)
        if not search:
            return {"outcome": x.as_dict(), "reason": "no rent-based prices at the integral optimum"}
        if not verify_ce(inst, x, search.found).verdict:
            return {"outcome": x.as_dict(), "reason": "found prices fail verify_ce"}
        if not _welfare(res, inst, x, search.found):
            return {"outcome": x.as_dict(), "reason": "first welfare fails"}
        cert = certify_nonexistence(inst)
        if not cert.exists:
            return {"reason": "certify_nonexistence found no equilibrium"}
        if not verify_ce(inst, cert.outcome, cert.prices).verdict:
            return {"reason": "certified equilibrium fails verify_ce"}
        if not _welfare(res, inst, cert.outcome, cert.prices):
            return {"outcome": cert.outcome.as_dict(), "reason": "first welfare fails on certified equilibrium"}
        return None

    return _run("separable-market", seed, count, body)


# ----------------------------------------------------------------------------
# facets of the concave closure


def facet_sets(seed: int = 0, count: int = 200, max_dim: int = 3, max_cap: int = 2) -> SuiteResult:
    """facet_set(f, x) is M-convex; lotteries re-balanced inside it keep the closure value.

    Tallies record how often the facet set is M-natural-convex and how many
    re-balanced lotteries were checked.
    """

    def body(rng, res):
        n = rng.randint(1, max_dim)
        caps = [rng.randint(1, max_cap) for _ in range(n)]
        f = random_msharp_function(rng, _ground(n), caps)
        x = random_hull_point(rng, sorted(f.domain))
        value, _ = concave_extension_eval(f, x)
        B = facet_set(f, x)
        if is_msharp_convex_set(B):
            res.bump("facet set M-natural-convex")
        objectives = [{z: Fraction(rng.randint(-5, 5)) for z in B.points} for _ in range(3)]
        for lot in lotteries_within(B, x, objectives):
            res.bump("rebalanced lotteries")
            if lottery_value(f, lot) != value:
                return {"x": [format_rat(a) for a in x], "reason": "re-balanced lottery misses the closure value"}
        check = is_m_convex_set(B)
        if not check:
            return {
                "x": [format_rat(a) for a in x],
                "facet_set": [list(p) for p in B.sorted()],
                "reason": check.reason,
            }
        return None

    return _run("facet-sets", seed, count, body)


# ----------------------------------------------------------------------------
# M-convex sets and polymatroids


def _base_points_of(f, bounds) -> frozenset:
    """Integer points of {x(S) <= f(S), x(E) = f(E)} inside the box ``bounds``."""
    n = f.n
    full = (1 << n) - 1
    out = set()
    for x in itertools.product(*(range(lo, hi + 1) for lo, hi in bounds)):
        if sum(x) != f.at(full):
            continue
        if all(sum(x[k] for k in range(n) if m >> k & 1) <= f.at(m) for m in range(1, full)):
            out.add(x)
    return frozenset(out)


def mconvex_roundtrip(seed: int = 0, count: int = 100, max_dim: int = 4, max_cap: int = 2) -> SuiteResult:
    """Set -> submodular function -> set, and monotone submodular function -> bases -> function."""

    def body(rng, res):
        n = rng.randint(1, max_dim)
        B = random_mconvex_set(rng, n, max_cap)
        f = set_fn_from_mconvex_set(B)
        if not is_submodular(f):
            return "induced set function is not submodular"
        pts = B.sorted()
        bounds = [(min(p[k] for p in pts), max(p[k] for p in pts)) for k in range(n)]
        # widen the box by one so that points outside B's span are tested too
        bounds = [(lo - 1, hi + 1) for lo, hi in bounds]
        if _base_points_of(f, bounds) != B.points:
            return {"reason": "base description does not recover the set", "set": [list(p) for p in pts]}

        P = random_polymatroid(rng, _ground(n), max_cap)
        g = P.fn
        if not g.is_monotone():
            return "generated polymatroid function is not monotone"
        base = points_from_set_fn(g).base
        back = set_fn_from_mconvex_set(base)
        if dict(back.items()) != dict(g.items()):
            return {"reason": "function not recovered from its base points"}
        res.bump("round trips", 2)
        return None

    return _run("roundtrip", seed, count, body)


def mconvex_intersection(seed: int = 0, count: int = 100, max_dim: int = 4, max_cap: int = 2) -> SuiteResult:
    """LP optima over conv(B1) & conv(B2) are attained at common integer points."""

    def body(rng, res):
        n = rng.randint(1, max_dim)
        B1, B2 = random_mconvex_pair(rng, n, max_cap)
        extra = [tuple(rng.randint(-4, 4) for _ in range(n)) for _ in range(4)]
        check = verify_closure_intersection(B1, B2, objective_battery(n, extra))
        if not check:
            return {"reason": check.reason, "witness": {k: str(v) for k, v in (check.witness or {}).items()}}
        res.bump("nonempty intersections" if B1.points & B2.points else "disjoint pairs")
        return None

    return _run("intersection", seed, count, body)


def greedy_vs_lp(seed: int = 0, count: int = 100, max_dim: int = 5, max_cap: int = 3) -> SuiteResult:
    """Greedy vertex value equals the simplex optimum; the simplex result re-verifies independently."""

    def body(rng, res):
        n = rng.randint(1, max_dim)
        P = random_polymatroid(rng, _ground(n), max_cap)
        w = tuple(rng.randint(-4, 6) for _ in range(n))
        x = greedy_vertex(P, w)
        if not membership(P, x.values):
            return "greedy point outside the polymatroid"
        prog = polymatroid_lp(P, w)
        sol = lpmod.solve_lp(prog)
        if not lpmod.verify_optimal(prog, sol):
            return "LP result does not re-verify"
        greedy_val = sum(a * b for a, b in zip(w, x.values))
        if greedy_val != sol.optimum:
            return {"weights": list(w), "greedy": format_rat(greedy_val), "lp": format_rat(sol.optimum)}
        return None

    return _run("greedy-lp", seed, count, body)


# ----------------------------------------------------------------------------
# general trading networks


def multi_sided(seed: int = 0, count: int = 100, max_arcs: int = 4, max_cap: int = 1) -> SuiteResult:
    """Agents that buy and sell.

    Constrained instances with a gap must have a non-existence certificate.
    Unconstrained instances must have no gap and arc prices at the optimum.
    """

    def body(rng, res):
        constrained = rng.random() < 0.6
        if rng.random() < 0.5:
            inst = random_cycle_instance(rng, constrained)
        else:
            inst = random_multi_sided_instance(rng, max_arcs, max_cap, constrained)
        rep = detect_gap(inst)
        if constrained:
            cert = certify_nonexistence(inst)
            if rep.gap:
                res.bump("gap instances")
                if cert.exists:
                    return {"reason": "gap but an equilibrium was found", "outcome": cert.outcome.as_dict()}
                if not cert.certificate.recheck():
                    return "non-existence certificate does not re-verify"
                return None
            res.bump("constrained without gap")
            if cert.exists:
                res.bump("constrained equilibria")
                if not _welfare(res, inst, cert.outcome, cert.prices):
                    return {"reason": "first welfare fails", "outcome": cert.outcome.as_dict()}
            return None
        res.bump("unconstrained")
        if rep.gap:
            return {"reason": "gap without a constraint"}
        x = rep.integral_argmax[0]
        search = find_arc_prices(inst, x)
        if not search:
            return {"reason": "no arc prices at the integral optimum", "outcome": x.as_dict()}
        if not verify_ce(inst, x, search.found).verdict:
            return "found arc prices fail verify_ce"
        if not _welfare(res, inst, x, search.found):
            return "first welfare fails"
        if aggregate_value(inst.graph, inst.valuations, x) != solve_integral(inst).value:
            return "argmax value mismatch"
        return None

    return _run("multi-sided", seed, count, body)


SUITES = {
    "roundtrip": mconvex_roundtrip,
    "intersection": mconvex_intersection,
    "integrality": relaxation_integrality,
    "facet-sets": facet_sets,
    "separable-market": two_sided,
    "multi-sided": multi_sided,
    "greedy-lp": greedy_vs_lp,
}
