from fractions import Fraction as F

import pytest

from polytrade.allocation import EAInstance
from polytrade.convexity import FiniteIntFunction
from polytrade.equilibrium import (
    ARC_PRICES,
    RENTS,
    InfeasibleOutcome,
    PriceSystem,
    certify_nonexistence,
    check_first_welfare,
    find_arc_prices,
    find_prices_with_rents,
    verify_ce,
)
from polytrade.instances import example1, two_sided_example
from polytrade.network import AgentValuation
from polytrade.rational import Vec

EG = ("e", "g")


def test_hand_price_system_two_sided():
    inst = two_sided_example()
    ps = PriceSystem(Vec(EG, (3, 2)), {frozenset(EG): F(2)})
    assert ps.notion == RENTS
    report = verify_ce(inst, (1, 0), ps)
    assert report.verdict and report.rents_ok
    assert check_first_welfare(inst, (1, 0), ps)


def test_rent_on_slack_set_rejected():
    inst = two_sided_example()
    ps = PriceSystem(Vec(EG, (3, 2)), {frozenset({"g"}): F(1)})
    assert not verify_ce(inst, (1, 0), ps).rents_ok


def test_finders_roundtrip_two_sided():
    inst = two_sided_example()
    found = find_prices_with_rents(inst, (1, 0))
    assert found and found.found.notion == RENTS
    assert verify_ce(inst, (1, 0), found.found).verdict


def test_completeness_hand_system_implies_found():
    inst = two_sided_example()
    assert find_prices_with_rents(inst, (1, 0))


def test_example1_arc_prices_certificate_at_origin():
    inst = example1()
    res = find_arc_prices(inst, (0, 0))
    assert not res and res.recheck()
    doc = res.to_json()
    rows = {r["constraint"]: r["multiplier"] for r in doc["farkas"]["rows"]}
    assert rows == {"agent 1 prefers bundle over (e=1,g=-1)": 1, "agent 2 prefers bundle over (e=-1,g=1)": 1}


@pytest.mark.parametrize("x", [(0, 0), (1, 0), (0, 1)])
def test_example1_no_prices_either_notion(x):
    inst = example1()
    for finder in (find_arc_prices, find_prices_with_rents):
        res = finder(inst, x)
        assert not res
        assert res.certificate.verify(res.program)


def test_example1_infeasible_outcome():
    with pytest.raises(InfeasibleOutcome):
        find_arc_prices(example1(), (1, 1))


def test_certify_example1():
    cert = certify_nonexistence(example1())
    assert not cert.exists
    assert [x.values for x in cert.certificate.outcomes] == [(0, 0), (0, 1), (1, 0)]
    assert {s.notion for s in cert.certificate.searches} == {ARC_PRICES, RENTS}
    assert cert.certificate.recheck()


def test_certify_two_sided_exists_at_optimum():
    cert = certify_nonexistence(two_sided_example())
    assert cert.exists and cert.outcome.values == (1, 0)


def test_unconstrained_example1_equilibrium_at_full_trade():
    inst = example1(constrained=False)
    res = find_arc_prices(inst, (1, 1))
    assert res
    assert check_first_welfare(inst, (1, 1), res.found)


def test_constant_shift_changes_nothing():
    inst = example1()
    shifted = dict(inst.valuations)
    shifted["1"] = AgentValuation("1", inst.valuations["1"].fn.shift(7))
    other = EAInstance(inst.graph, shifted, inst.constraint)
    a = find_arc_prices(inst, (0, 0)).to_json()
    b = find_arc_prices(other, (0, 0)).to_json()
    assert [r["constraint"] for r in a["farkas"]["rows"]] == [r["constraint"] for r in b["farkas"]["rows"]]
    ps = PriceSystem(Vec(EG, (0, 0)))
    assert verify_ce(inst, (0, 0), ps).verdict == verify_ce(other, (0, 0), ps).verdict


def test_welfare_precondition():
    with pytest.raises(ValueError):
        check_first_welfare(example1(), (0, 0), PriceSystem(Vec(EG, (0, 0))))


def test_bundle_outside_domain_reports_reason():
    inst = two_sided_example()
    vals = dict(inst.valuations)
    vals["B"] = AgentValuation("B", FiniteIntFunction(EG, {(0, 0): 0, (-1, 0): 3}))
    other = EAInstance(inst.graph, vals, inst.constraint)
    res = find_arc_prices(other, (0, 1))
    assert not res and "-inf" in res.reason
