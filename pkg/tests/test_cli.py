import json
import subprocess
import sys

from polytrade.cli import run
from polytrade.instances import instance_to_json, two_sided_example


def _json(capsys, argv):
    code = run(argv + ["--output", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out), out


def test_cycle_example_end_to_end(capsys):
    code, doc, _ = _json(capsys, ["paper-example1", "--recheck"])
    assert code == 1
    assert doc["solve"]["integral"]["value"] == -1
    assert doc["solve"]["fractional"]["value"] == "-1/2"
    assert doc["solve"]["gap"] is True
    assert doc["certify"]["exists"] is False
    assert doc["certify"]["certificate"]["outcomes"] == [{"e": 0, "g": 0}, {"e": 0, "g": 1}, {"e": 1, "g": 0}]


def test_check_w1(capsys):
    code, doc, _ = _json(capsys, ["check", "--function", "w1", "--property", "msharp-concave"])
    assert code == 0 and doc["holds"] is True


def test_check_complements_negative(capsys):
    code, doc, _ = _json(capsys, ["check", "--function", "complements", "--property", "msharp-concave"])
    assert code == 1 and doc["witness"]["u"] == "a"


def test_extension(capsys):
    code, doc, _ = _json(capsys, ["extension", "--function", "g", "--point", "1/2,1/2"])
    assert code == 0 and doc["value"] == "-1/2"
    assert doc["facet_set"] == [{"e": 0, "g": 0}, {"e": 1, "g": 1}]


def test_solve_one_arc_no_constraint(tmp_path, capsys):
    doc = {
        "agents": ["s", "b"],
        "arcs": [{"id": "e", "seller": "s", "buyer": "b"}],
        "valuations": [
            {"agent": "s", "entries": [{"flows": {"e": 0}, "value": 0}, {"flows": {"e": 1}, "value": -1}]},
            {"agent": "b", "entries": [{"flows": {"e": 0}, "value": 0}, {"flows": {"e": -1}, "value": 2}]},
        ],
    }
    path = tmp_path / "one.json"
    path.write_text(json.dumps(doc))
    code, rep, _ = _json(capsys, ["solve", "--instance", str(path)])
    assert code == 0 and rep["gap"] is False and rep["integral"]["value"] == 1


def test_prices_and_certify_two_sided(tmp_path, capsys):
    path = tmp_path / "two.json"
    path.write_text(json.dumps(instance_to_json(two_sided_example())))
    code, doc, _ = _json(capsys, ["prices", "--instance", str(path), "--rents", "--outcome", "e=1,g=0", "--recheck"])
    assert code == 0 and doc["found"] and doc["verify_ce"]["verdict"]
    assert doc["prices"]["notion"] == "arc-prices+rents"
    code, doc, _ = _json(capsys, ["certify", "--builtin", "two-sided"])
    assert code == 0 and doc["exists"] and doc["outcome"] == {"e": 1, "g": 0}


def test_prices_negative(capsys):
    code, doc, _ = _json(capsys, ["prices", "--outcome", "0,0"])
    assert code == 1 and doc["farkas"]["rows"]


def test_validation_error_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"agents": ["a"]}))
    assert run(["validate", "--instance", str(path)]) == 2
    assert "missing field 'arcs'" in capsys.readouterr().err


def test_usage_errors_exit_2(capsys):
    assert run(["nonsense"]) == 2
    assert run(["extension", "--function", "g", "--point", "1/2"]) == 2
    assert run(["check", "--function", "zz", "--property", "msharp-concave"]) == 2


def test_suite_small_and_deterministic(capsys):
    argv = ["suite", "--name", "integrality", "--count", "5", "--seed", "9"]
    code1, _, out1 = _json(capsys, argv)
    code2, _, out2 = _json(capsys, argv)
    assert code1 == 0 and out1 == out2


def test_byte_identical_json_across_processes():
    argv = [sys.executable, "-m", "polytrade", "paper-example1", "--output", "json"]
    a = subprocess.run(argv, capture_output=True)
    b = subprocess.run(argv, capture_output=True)
    assert a.returncode == 1 and a.stdout == b.stdout


def test_human_mode(capsys):
    assert run(["solve"]) == 1
    out = capsys.readouterr().out
    assert "gap: True" in out and "-1/2" in out
