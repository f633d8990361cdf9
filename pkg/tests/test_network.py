import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polytrade.convexity import FiniteIntFunction
from polytrade.generators import random_multi_sided_instance
from polytrade.instances import example1, two_sided_example
from polytrade.network import (
    AgentValuation,
    Arc,
    NetworkError,
    TradeGraph,
    aggregate_value,
    classify_structure,
    demand,
    netflow_to_outcome,
    outcome_to_netflow,
    surplus,
    validate_valuation,
)


def test_graph_validation():
    with pytest.raises(NetworkError):
        TradeGraph(("1",), (Arc("e", "1", "1"),))
    with pytest.raises(NetworkError):
        TradeGraph(("1", "2"), (Arc("e", "1", "3"),))
    with pytest.raises(NetworkError):
        TradeGraph(("1", "2"), (Arc("e", "1", "2", 0),))


def test_sign_convention_enforced():
    g = TradeGraph(("1", "2"), (Arc("e", "1", "2"),))
    with pytest.raises(NetworkError):
        validate_valuation(g, AgentValuation("2", FiniteIntFunction(("e",), {(1,): 0})))


def test_example1_aggregates():
    inst = example1()
    vals = {x: aggregate_value(inst.graph, inst.valuations, x) for x in [(0, 0), (1, 1), (1, 0), (0, 1)]}
    assert vals == {(0, 0): -1, (1, 1): 0, (1, 0): -2, (0, 1): -2}


def test_netflow_roundtrip():
    inst = example1()
    flows = outcome_to_netflow(inst.graph, (1, 0))
    assert flows["1"].as_dict() == {"e": 1, "g": 0}
    assert flows["2"].as_dict() == {"e": -1, "g": 0}
    assert netflow_to_outcome(inst.graph, flows).values == (1, 0)


def test_demand_of_buyer():
    inst = two_sided_example()
    d = demand(inst.valuations["B"], {"e": 3, "g": 2})
    assert (0, 0) in d.points and (-1, 0) in d.points and (0, -1) in d.points


def _random_prices(rng, arcs):
    return {e: F(rng.randint(-6, 6), rng.randint(1, 3)) for e in arcs}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_transfers_cancel(seed):
    rng = random.Random(seed)
    inst = random_multi_sided_instance(rng, 4, 1, constrained=False)
    p = _random_prices(rng, inst.graph.arc_ids)
    for x in [tuple(rng.randint(0, a.capacity) for a in inst.graph.arcs) for _ in range(4)]:
        flows = outcome_to_netflow(inst.graph, x)
        for a in inst.graph.arcs:
            assert flows[a.seller][a.id] + flows[a.buyer][a.id] == 0
        total = sum(surplus(inst.valuations[i], flows[i], p) for i in inst.graph.agents)
        assert total == aggregate_value(inst.graph, inst.valuations, x)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(-5, 5))
def test_demand_nonempty_and_shift_invariant(seed, c):
    rng = random.Random(seed)
    inst = random_multi_sided_instance(rng, 3, 1, constrained=False)
    p = _random_prices(rng, inst.graph.arc_ids)
    for agent, v in inst.valuations.items():
        d = demand(v, p)
        assert d.points
        shifted = AgentValuation(agent, v.fn.shift(c))
        assert demand(shifted, p) == d


def test_structure_reports():
    rep = classify_structure(two_sided_example().graph, two_sided_example().valuations)
    assert rep.two_sided and rep.separable_market_hypotheses and rep.incoming_concave_form
    inst = example1()
    rep = classify_structure(inst.graph, inst.valuations)
    assert not rep.two_sided
    assert not any(s.separable for s in rep.agents)
    assert not rep.separable_market_hypotheses


def test_buyer_only_agent_is_separable():
    g = TradeGraph(("s", "b"), (Arc("e", "s", "b"), Arc("f", "s", "b")))
    buyer = FiniteIntFunction(("e", "f"), {(0, 0): 0, (-1, 0): 2, (0, -1): 1, (-1, -1): 2})
    seller = FiniteIntFunction(("e", "f"), {(0, 0): 0, (1, 0): -1, (0, 1): -1, (1, 1): -2})
    rep = classify_structure(g, {"s": AgentValuation("s", seller), "b": AgentValuation("b", buyer)})
    assert all(s.separable for s in rep.agents)
