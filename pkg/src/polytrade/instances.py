"""Instance documents (JSON) and the built-in instances."""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from typing import Any

from .allocation import EAInstance
from .convexity import FiniteIntFunction
from .network import AgentValuation, Arc, NetworkError, TradeGraph
from .polymatroid import Polymatroid, SetFunction, SetFunctionError
from .rational import as_rat, format_rat


class InstanceError(ValueError):
    """Validation failure, with a JSON-pointer-like ``path`` into the document."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _require(doc, key, path, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise InstanceError(path, f"missing field {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise InstanceError(f"{path}/{key}", f"expected {kind.__name__ if isinstance(kind, type) else kind}")
    return val


def _int(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(path, f"expected an integer, got {value!r}")
    return value


def _rat(value, path):
    try:
        return as_rat(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceError(path, f"bad rational {value!r}: {exc}") from None


def parse_set_function(doc: Any, ground: tuple, path: str = "/constraint") -> SetFunction:
    if isinstance(doc, dict):
        if doc.get("type") != "cardinality-cap":
            raise InstanceError(path, "object form must have type 'cardinality-cap'")
        return _expand_caps(doc, ground, path)
    if not isinstance(doc, list):
        raise InstanceError(path, "expected a list of {subset, value} records")
    table = {}
    for k, rec in enumerate(doc):
        p = f"{path}/{k}"
        subset = _require(rec, "subset", p, list)
        for j, e in enumerate(subset):
            if e not in ground:
                raise InstanceError(f"{p}/subset/{j}", f"unknown arc {e!r}")
        key = frozenset(subset)
        if len(key) != len(subset):
            raise InstanceError(f"{p}/subset", "repeated arc in subset")
        if key in table:
            raise InstanceError(p, f"duplicate subset {sorted(subset)!r}")
        table[key] = _int(_require(rec, "value", p), f"{p}/value")
    try:
        return SetFunction(ground, table)
    except SetFunctionError as exc:
        raise InstanceError(path, str(exc)) from None


def _expand_caps(doc: dict, ground: tuple, path: str) -> SetFunction:
    """Rank function of {x >= 0 : x_e <= cap_e, x(G) <= cap_G, x(E) <= global}."""
    caps_doc = doc.get("caps", {})
    caps = {}
    for e in ground:
        if e not in caps_doc:
            raise InstanceError(f"{path}/caps", f"missing cap for arc {e!r}")
        caps[e] = _int(caps_doc[e], f"{path}/caps/{e}")
    for e in caps_doc:
        if e not in ground:
            raise InstanceError(f"{path}/caps/{e}", "unknown arc")
    groups = []
    for k, grp in enumerate(doc.get("groups", [])):
        arcs = _require(grp, "arcs", f"{path}/groups/{k}", list)
        for e in arcs:
            if e not in ground:
                raise InstanceError(f"{path}/groups/{k}/arcs", f"unknown arc {e!r}")
        groups.append((frozenset(arcs), _int(_require(grp, "cap", f"{path}/groups/{k}"), f"{path}/groups/{k}/cap")))
    if "global" in doc:
        groups.append((frozenset(ground), _int(doc["global"], f"{path}/global")))
    points = [
        x for x in itertools.product(*(range(caps[e] + 1) for e in ground))
        if all(sum(a for e, a in zip(ground, x) if e in S) <= c for S, c in groups)
    ]

    def rank(S):
        return max(sum(a for e, a in zip(ground, x) if e in S) for x in points)

    try:
        return SetFunction.from_function(ground, rank)
    except SetFunctionError as exc:
        raise InstanceError(path, str(exc)) from None


def parse_instance(doc: Any, name: str = "") -> EAInstance:
    if not isinstance(doc, dict):
        raise InstanceError("", "instance must be a JSON object")
    agents = _require(doc, "agents", "", list)
    for k, a in enumerate(agents):
        if not isinstance(a, str):
            raise InstanceError(f"/agents/{k}", "agent ids must be strings")
    arcs = []
    for k, rec in enumerate(_require(doc, "arcs", "", list)):
        p = f"/arcs/{k}"
        cap = _int(rec.get("capacity", 1), f"{p}/capacity") if isinstance(rec, dict) else 1
        arcs.append(Arc(str(_require(rec, "id", p)), _require(rec, "seller", p, str), _require(rec, "buyer", p, str), cap))
    try:
        graph = TradeGraph(tuple(agents), tuple(arcs))
    except NetworkError as exc:
        raise InstanceError("/arcs", str(exc)) from None

    valuations = {}
    for k, rec in enumerate(_require(doc, "valuations", "", list)):
        p = f"/valuations/{k}"
        agent = _require(rec, "agent", p, str)
        if agent not in graph.agents:
            raise InstanceError(f"{p}/agent", f"unknown agent {agent!r}")
        if agent in valuations:
            raise InstanceError(f"{p}/agent", f"second valuation for {agent!r}")
        inc = graph.incident(agent)
        table = {}
        for j, ent in enumerate(_require(rec, "entries", p, list)):
            q = f"{p}/entries/{j}"
            flows = _require(ent, "flows", q, dict)
            for e in flows:
                if e not in inc:
                    raise InstanceError(f"{q}/flows/{e}", f"arc not incident to agent {agent!r}")
            missing = [e for e in inc if e not in flows]
            if missing:
                raise InstanceError(f"{q}/flows", f"missing arcs {missing!r}")
            point = tuple(_int(flows[e], f"{q}/flows/{e}") for e in inc)
            if point in table:
                raise InstanceError(q, f"duplicate point {dict(zip(inc, point))!r}")
            table[point] = _rat(_require(ent, "value", q), f"{q}/value")
        if not table:
            raise InstanceError(f"{p}/entries", "empty valuation table")
        v = AgentValuation(agent, FiniteIntFunction(inc, table))
        valuations[agent] = v
    for a in graph.agents:
        if a not in valuations:
            raise InstanceError("/valuations", f"no valuation for agent {a!r}")

    constraint = None
    if doc.get("constraint") is not None:
        fn = parse_set_function(doc["constraint"], graph.arc_ids)
        try:
            constraint = Polymatroid(fn)
        except SetFunctionError as exc:
            raise InstanceError("/constraint", str(exc)) from None
    try:
        return EAInstance(graph, valuations, constraint, name)
    except (NetworkError, ValueError) as exc:
        k = next((i for i, rec in enumerate(doc["valuations"]) if rec.get("agent") and rec["agent"] in str(exc)), None)
        raise InstanceError("/valuations" + (f"/{k}" if k is not None else ""), str(exc)) from None


def load_instance(path: str) -> EAInstance:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError("", f"invalid JSON: {exc}") from None
    return parse_instance(doc, name=path)


def set_function_to_json(f: SetFunction) -> list:
    return [{"subset": sorted(map(str, S), key=lambda e: f.ground.index(e)), "value": v} for S, v in f.items()]


def instance_to_json(inst: EAInstance) -> dict:
    g = inst.graph
    doc = {
        "agents": list(g.agents),
        "arcs": [{"id": a.id, "seller": a.seller, "buyer": a.buyer, "capacity": a.capacity} for a in g.arcs],
        "valuations": [
            {
                "agent": a,
                "entries": [
                    {"flows": dict(zip(inst.valuations[a].fn.index, z)), "value": format_rat(v)}
                    for z, v in sorted(inst.valuations[a].fn.table.items())
                ],
            }
            for a in g.agents
        ],
    }
    if inst.constraint is not None:
        doc["constraint"] = set_function_to_json(inst.constraint.fn)
    return doc


# ----------------------------------------------------------------------------
# built-in instances

_HALF = Fraction(1, 2)


def example1(constrained: bool = True) -> EAInstance:
    """Two agents, each selling one trade to the other; sum-of-trades cap 1.

    Agent 1 sells ``e`` and buys ``g``; agent 2 buys ``e`` and sells ``g``.
    Agent 2's table is written in its own sign convention (purchases negative).
    """
    graph = TradeGraph(("1", "2"), (Arc("e", "1", "2"), Arc("g", "2", "1")))
    w1 = FiniteIntFunction(("e", "g"), {(0, 0): -_HALF, (1, -1): 0, (1, 0): -1, (0, -1): -1})
    w2 = FiniteIntFunction(("e", "g"), {(0, 0): -_HALF, (-1, 1): 0, (-1, 0): -1, (0, 1): -1})
    constraint = None
    if constrained:
        constraint = Polymatroid(SetFunction(("e", "g"), {(): 0, ("e",): 1, ("g",): 1, ("e", "g"): 1}))
    return EAInstance(graph, {"1": AgentValuation("1", w1), "2": AgentValuation("2", w2)}, constraint,
                      "example1" if constrained else "example1-unconstrained")


def two_sided_example() -> EAInstance:
    """Seller with unit cost 1 on two arcs; unit-demand buyer (3 for e, 2 for g); same cap."""
    graph = TradeGraph(("S", "B"), (Arc("e", "S", "B"), Arc("g", "S", "B")))
    seller = FiniteIntFunction(("e", "g"), {(0, 0): 0, (1, 0): -1, (0, 1): -1, (1, 1): -2})
    buyer = FiniteIntFunction(("e", "g"), {(0, 0): 0, (-1, 0): 3, (0, -1): 2, (-1, -1): 3})
    constraint = Polymatroid(SetFunction(("e", "g"), {(): 0, ("e",): 1, ("g",): 1, ("e", "g"): 1}))
    return EAInstance(graph, {"S": AgentValuation("S", seller), "B": AgentValuation("B", buyer)}, constraint,
                      "two-sided")


BUILTINS = {
    "example1": lambda: example1(True),
    "example1-unconstrained": lambda: example1(False),
    "two-sided": two_sided_example,
}
