"""Deterministic random instances for the property suites.

Every generated valuation is re-validated with the exchange checker and every
set function with the submodularity checker; failed candidates are redrawn.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Optional

from .allocation import EAInstance
from .convexity import FiniteIntFunction, PointSet, is_m_convex_set, is_msharp_concave_fn
from .network import AgentValuation, Arc, TradeGraph, classify_structure
from .polymatroid import Polymatroid, SetFunction, is_submodular, points_from_set_fn

PROFILES = ("msharp-valuation", "two-sided-separable", "multi-sided", "polymatroid")
MAX_TRIES = 200


def _box(caps):
    return list(itertools.product(*(range(c + 1) for c in caps)))


def _concave_seq(rng: random.Random, length: int) -> list:
    """phi(0..length) with nonincreasing increments."""
    incs = sorted((rng.randint(-3, 4) for _ in range(length)), reverse=True)
    out = [0]
    for d in incs:
        out.append(out[-1] + d)
    return out


def _linear(rng, caps):
    c = [Fraction(rng.randint(-6, 6), rng.choice((1, 2))) for _ in caps]
    return {z: sum(a * b for a, b in zip(c, z)) for z in _box(caps)}


def _separable_concave(rng, caps):
    phis = [_concave_seq(rng, c) for c in caps]
    return {z: Fraction(sum(phi[a] for phi, a in zip(phis, z))) for z in _box(caps)}


def _laminar(rng, caps):
    phi = _concave_seq(rng, sum(caps))
    lin = [rng.randint(-2, 2) for _ in caps]
    return {z: Fraction(phi[sum(z)] + sum(a * b for a, b in zip(lin, z))) for z in _box(caps)}


def _unit_demand(rng, caps):
    n = len(caps)
    v = [rng.randint(0, 6) for _ in range(n)]
    return {z: Fraction(max((v[k] for k in range(n) if z[k]), default=0)) for z in _box([1] * n)}


def _top_r(rng, caps):
    """Weighted uniform-matroid rank on 0/1 vectors: sum of the r largest chosen weights."""
    n = len(caps)
    r = rng.randint(1, max(1, n))
    w = [rng.randint(0, 5) for _ in range(n)]
    out = {}
    for z in _box([1] * n):
        chosen = sorted((w[k] for k in range(n) if z[k]), reverse=True)
        out[z] = Fraction(sum(chosen[:r]))
    return out


_BUILDERS = (_linear, _separable_concave, _laminar, _unit_demand, _top_r)


def random_msharp_function(rng: random.Random, index, caps) -> FiniteIntFunction:
    """M-natural-concave table on a subset of the box prod [0, cap]."""
    index = tuple(index)
    for _ in range(MAX_TRIES):
        kind = rng.randrange(len(_BUILDERS) + 1)
        if kind < len(_BUILDERS):
            table = _BUILDERS[kind](rng, caps)
        else:
            # sums are not closed in general; the check below decides
            a = rng.choice(_BUILDERS)(rng, caps)
            b = rng.choice(_BUILDERS)(rng, caps)
            table = {z: a[z] + b[z] for z in a if z in b}
        if rng.random() < 0.3:
            table = {z: v + rng.randint(-3, 3) for z, v in table.items()}
        f = FiniteIntFunction(index, table)
        if is_msharp_concave_fn(f):
            return f
    raise RuntimeError("could not generate an M-natural-concave function")


def random_polymatroid(rng: random.Random, ground, max_cap: int = 2) -> Polymatroid:
    """Truncated weighted coverage function, capped so singleton ranks stay <= max_cap."""
    ground = tuple(ground)
    for _ in range(MAX_TRIES):
        universe = rng.randint(1, 4)
        weight = [rng.randint(1, 2) for _ in range(universe)]
        cover = {e: {u for u in range(universe) if rng.random() < 0.5} for e in ground}
        trunc = rng.randint(0, 2 * len(ground) + 1)
        caps = {e: rng.randint(0, max_cap) for e in ground}

        def f(S):
            cov = sum(weight[u] for u in set().union(*(cover[e] for e in S))) if S else 0
            return min(cov, trunc)

        fn = _intersect_with_box(SetFunction.from_function(ground, f), caps)
        if is_submodular(fn):
            return Polymatroid(fn)
    raise RuntimeError("could not generate a polymatroid")


def _intersect_with_box(f: SetFunction, caps: dict) -> SetFunction:
    """Rank of P_f cut by the box: r(S) = min over T subset S of f(T) + caps(S - T)."""
    ground = f.ground
    n = len(ground)
    table = {}
    for mask in range(1 << n):
        best = None
        sub = mask
        while True:
            val = f.at(sub) + sum(caps[ground[k]] for k in range(n) if (mask & ~sub) >> k & 1)
            best = val if best is None else min(best, val)
            if sub == 0:
                break
            sub = (sub - 1) & mask
        table[f.subset(mask)] = best
    return SetFunction(ground, table)


def random_mconvex_set(rng: random.Random, n: int, max_cap: int = 2) -> PointSet:
    """Base points of a random integral polymatroid: an M-convex set."""
    index = tuple(f"a{k}" for k in range(n))
    P = random_polymatroid(rng, index, max_cap)
    base = points_from_set_fn(P.fn).base
    if rng.random() < 0.5:
        # translating keeps M-convexity and exercises sets off the nonnegative orthant
        shift = [rng.randint(-1, 1) for _ in range(n)]
        base = PointSet(index, frozenset(tuple(a + s for a, s in zip(p, shift)) for p in base.points))
    assert is_m_convex_set(base)
    return base


def _truncate(f: SetFunction, t: int) -> SetFunction:
    return SetFunction(f.ground, {S: min(v, t) for S, v in f.items()})


def random_mconvex_pair(rng: random.Random, n: int, max_cap: int = 2) -> tuple:
    """Two M-convex base sets on one index with equal coordinate sums (so they can meet)."""
    index = tuple(f"a{k}" for k in range(n))
    f1 = random_polymatroid(rng, index, max_cap).fn
    f2 = random_polymatroid(rng, index, max_cap).fn
    full = (1 << n) - 1
    t = min(f1.at(full), f2.at(full))
    b1 = points_from_set_fn(_truncate(f1, t)).base
    b2 = points_from_set_fn(_truncate(f2, t)).base
    return b1, b2


def random_hull_point(rng: random.Random, points: list) -> tuple:
    """A rational point in the hull: mean of a random lottery over up to three points."""
    k = rng.randint(1, min(3, len(points)))
    chosen = rng.sample(points, k)
    weights = [rng.randint(1, 4) for _ in chosen]
    total = sum(weights)
    n = len(points[0])
    return tuple(sum(Fraction(w, total) * p[c] for w, p in zip(weights, chosen)) for c in range(n))


def _translate_to_signs(f: FiniteIntFunction, signs, caps) -> dict:
    """Place a table on the nonnegative box into net-flow coordinates.

    Buyer coordinates are shifted by -cap (a translation keeps M-natural
    concavity); seller coordinates stay as they are.
    """
    shift = [0 if s > 0 else -c for s, c in zip(signs, caps)]
    return {tuple(a + b for a, b in zip(z, shift)): v for z, v in f.table.items()}


def _mirror(f: FiniteIntFunction) -> dict:
    """y = -x for a one-sided buyer; negating every coordinate keeps M-natural concavity."""
    return {tuple(-a for a in z): v for z, v in f.table.items()}


def random_two_sided_instance(rng: random.Random, max_arcs: int = 4, max_cap: int = 2,
                              orientation: Optional[str] = None) -> EAInstance:
    """Sellers and buyers only; one side linear on a box, the other M-natural-concave.

    ``orientation="incoming"``: buyers M-natural-concave, sellers linear costs.
    ``orientation="outgoing"``: sellers M-natural-concave, buyers linear values.
    """
    orientation = orientation or rng.choice(("incoming", "outgoing"))
    for _ in range(MAX_TRIES):
        n_sellers = rng.randint(1, 2)
        n_buyers = rng.randint(1, 2)
        sellers = [f"s{k}" for k in range(n_sellers)]
        buyers = [f"b{k}" for k in range(n_buyers)]
        n_arcs = rng.randint(1, max_arcs)
        arcs = tuple(
            Arc(f"e{k}", rng.choice(sellers), rng.choice(buyers), rng.randint(1, max_cap)) for k in range(n_arcs)
        )
        graph = TradeGraph(tuple(sellers + buyers), arcs)
        vals = {}
        for agent in graph.agents:
            inc = graph.incident(agent)
            caps = [graph.arc(e).capacity for e in inc]
            is_seller = agent.startswith("s")
            concave_side = (orientation == "outgoing") == is_seller
            if concave_side:
                f = random_msharp_function(rng, inc, caps)
                table = dict(f.table) if is_seller else _mirror(f)
            else:
                table = _linear(rng, caps)
                if not is_seller:
                    table = {tuple(-a for a in z): v for z, v in table.items()}
            vals[agent] = AgentValuation(agent, FiniteIntFunction(inc, table))
        rep = classify_structure(graph, vals)
        if not rep.separable_market_hypotheses:
            continue
        constraint = random_polymatroid(rng, graph.arc_ids, max_cap)
        return EAInstance(graph, vals, constraint, f"two-sided-{orientation}")
    raise RuntimeError("could not generate a two-sided separable instance")


def random_multi_sided_instance(rng: random.Random, max_arcs: int = 4, max_cap: int = 1,
                                constrained: bool = True) -> EAInstance:
    """Agents that both buy and sell, each M-natural-concave in its own net-flow."""
    for _ in range(MAX_TRIES):
        n_agents = rng.randint(2, 3)
        agents = [str(k + 1) for k in range(n_agents)]
        n_arcs = rng.randint(2, max_arcs)
        arcs = []
        for k in range(n_arcs):
            s, b = rng.sample(agents, 2)
            arcs.append(Arc(f"e{k}", s, b, rng.randint(1, max_cap)))
        graph = TradeGraph(tuple(agents), tuple(arcs))
        if any(not graph.incident(a) for a in agents):
            continue
        vals = {}
        for agent in agents:
            inc = graph.incident(agent)
            caps = [graph.arc(e).capacity for e in inc]
            signs = [1 if graph.arc(e).seller == agent else -1 for e in inc]
            f = random_msharp_function(rng, inc, caps)
            g = FiniteIntFunction(inc, _translate_to_signs(f, signs, caps))
            if not is_msharp_concave_fn(g):
                raise AssertionError("translation broke M-natural concavity")
            vals[agent] = AgentValuation(agent, g)
        constraint = random_polymatroid(rng, graph.arc_ids, max_cap) if constrained else None
        return EAInstance(graph, vals, constraint, "multi-sided")
    raise RuntimeError("could not generate a multi-sided instance")


def random_cycle_instance(rng: random.Random, constrained: bool = True) -> EAInstance:
    """Two agents trading in both directions; each values doing both trades together.

    Tables are randomized around the pattern (sell and buy) > (neither) >
    (only one) and re-validated; the constraint caps the two trades jointly.
    """
    graph = TradeGraph(("1", "2"), (Arc("e0", "1", "2"), Arc("e1", "2", "1")))
    vals = {}
    for agent in graph.agents:
        for _ in range(MAX_TRIES):
            both = Fraction(rng.randint(-2, 2), 2)
            none = Fraction(rng.randint(-4, 2), 2)
            only = [Fraction(rng.randint(-6, 0), 2) for _ in range(2)]
            if agent == "1":  # sells e0, buys e1
                table = {(0, 0): none, (1, -1): both, (1, 0): only[0], (0, -1): only[1]}
            else:  # buys e0, sells e1
                table = {(0, 0): none, (-1, 1): both, (-1, 0): only[0], (0, 1): only[1]}
            f = FiniteIntFunction(graph.incident(agent), table)
            if is_msharp_concave_fn(f):
                vals[agent] = AgentValuation(agent, f)
                break
        else:
            raise RuntimeError("could not generate a cycle valuation")
    constraint = None
    if constrained:
        constraint = Polymatroid(SetFunction(graph.arc_ids, {(): 0, ("e0",): 1, ("e1",): 1, ("e0", "e1"): 1}))
    return EAInstance(graph, vals, constraint, "cycle")


def generate_instances(seed: int, profile: str, **kwargs):
    """One deterministic object for ``(seed, profile)``.

    ``msharp-valuation`` -> FiniteIntFunction, ``polymatroid`` -> Polymatroid,
    ``two-sided-separable`` / ``multi-sided`` -> EAInstance.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    rng = random.Random(f"{profile}:{seed}")
    if profile == "msharp-valuation":
        n = kwargs.get("n") or rng.randint(1, 4)
        caps = kwargs.get("caps") or [rng.randint(1, kwargs.get("max_cap", 2)) for _ in range(n)]
        return random_msharp_function(rng, tuple(f"a{k}" for k in range(n)), caps)
    if profile == "polymatroid":
        n = kwargs.get("n") or rng.randint(1, 4)
        return random_polymatroid(rng, tuple(f"a{k}" for k in range(n)), kwargs.get("max_cap", 2))
    if profile == "two-sided-separable":
        return random_two_sided_instance(rng, kwargs.get("max_arcs", 4), kwargs.get("max_cap", 2),
                                         kwargs.get("orientation"))
    return random_multi_sided_instance(rng, kwargs.get("max_arcs", 4), kwargs.get("max_cap", 1),
                                       kwargs.get("constrained", True))
