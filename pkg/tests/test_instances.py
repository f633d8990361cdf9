import json

import pytest

from polytrade.instances import (
    InstanceError,
    example1,
    instance_to_json,
    load_instance,
    parse_instance,
    parse_set_function,
)


def _doc():
    return json.loads(json.dumps(instance_to_json(example1())))


def test_roundtrip():
    inst = parse_instance(_doc())
    assert instance_to_json(inst) == instance_to_json(example1())


def test_load_from_file(tmp_path):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(_doc()))
    assert load_instance(str(path)).graph == example1().graph


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.pop("agents"), ""),
        (lambda d: d["arcs"][0].update(seller="9"), "/arcs"),
        (lambda d: d["valuations"][0]["entries"][0]["flows"].pop("g"), "/valuations/0/entries/0/flows"),
        (lambda d: d["valuations"][0]["entries"][0].update(value=0.5), "/valuations/0/entries/0/value"),
        (lambda d: d["valuations"][1]["entries"].append(d["valuations"][1]["entries"][0]), "/valuations/1/entries/4"),
        (lambda d: d["constraint"][3].update(value=3), "/constraint"),
        (lambda d: d["valuations"].pop(), "/valuations"),
    ],
)
def test_errors_carry_paths(mutate, path):
    doc = _doc()
    mutate(doc)
    with pytest.raises(InstanceError) as info:
        parse_instance(doc)
    assert info.value.path == path


def test_sign_violation_points_at_agent():
    doc = _doc()
    doc["valuations"][1]["entries"][0]["flows"]["e"] = 1
    with pytest.raises(InstanceError) as info:
        parse_instance(doc)
    assert info.value.path.startswith("/valuations")


def test_capacity_defaults_to_one():
    doc = _doc()
    for a in doc["arcs"]:
        a.pop("capacity")
    assert parse_instance(doc).graph.capacities() == (1, 1)


def test_cardinality_cap_form():
    f = parse_set_function({"type": "cardinality-cap", "caps": {"e": 1, "g": 1}, "global": 1}, ("e", "g"))
    assert dict(f.items()) == dict(example1().constraint.fn.items())


def test_neg_inf_entries():
    doc = _doc()
    doc["valuations"][0]["entries"][0]["value"] = "-inf"
    inst = parse_instance(doc)
    assert len(inst.valuations["1"].fn.domain) == 3
