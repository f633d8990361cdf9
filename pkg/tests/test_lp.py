import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polytrade import lp as L
from polytrade.rational import NEG_INF, Vec, as_rat, format_rat, is_finite


def test_as_rat_and_format():
    assert as_rat("3/6") == F(1, 2)
    assert as_rat(-2) == -2
    assert as_rat("-inf") is NEG_INF
    with pytest.raises(TypeError):
        as_rat(0.5)
    assert format_rat(F(4, 2)) == 2
    assert format_rat(F(-1, 3)) == "-1/3"
    assert format_rat(NEG_INF) == "-inf"


def test_neg_inf_absorbs_and_orders():
    assert NEG_INF + 5 is NEG_INF
    assert 3 + NEG_INF is NEG_INF
    assert NEG_INF < F(-10**9)
    assert not is_finite(NEG_INF)


def test_vec_arithmetic():
    a = Vec.of({"x": 1, "y": 2}, ("x", "y"))
    b = Vec.of({"y": 1, "x": 0}, ("x", "y"))
    assert (a - b).as_dict() == {"x": 1, "y": 1}
    assert a.dot(b) == 2
    with pytest.raises(KeyError):
        Vec.of({"x": 1}, ("x", "y"))


def test_single_bound_dual():
    prog = L.LinearProgram(["x"], {"x": 1}, "max")
    prog.add({"x": 1}, L.LE, 1)
    res = L.solve_lp(prog)
    assert res.optimal and res.optimum == 1 and res.dual == (1,)
    assert L.verify_optimal(prog, res)


def test_infeasible_gives_farkas():
    prog = L.LinearProgram(["x", "y"], {}, "max")
    prog.add({"x": 1, "y": 1}, L.LE, 1)
    prog.add({"x": 1, "y": 1}, L.GE, 2)
    res = L.solve_lp(prog)
    assert res.status == L.INFEASIBLE
    assert res.certificate.verify(prog)
    coeff, rhs = res.certificate.combined(prog)
    assert rhs == -1 and all(a == 0 for a in coeff.values())


def test_infeasible_bounds_only():
    prog = L.LinearProgram(["x"], {}, "max", bounds={"x": (F(2), F(1))})
    res = L.solve_lp(prog)
    assert res.status == L.INFEASIBLE and res.certificate.verify(prog)


def test_unbounded():
    prog = L.LinearProgram(["x", "y"], {"x": 1}, "max", bounds={"x": (0, None)})
    prog.add({"x": 1, "y": -1}, L.LE, 0)
    assert L.solve_lp(prog).status == L.UNBOUNDED


def test_min_with_shifted_bounds():
    prog = L.LinearProgram(["x", "y"], {"x": 1, "y": 1}, "min", bounds={"x": (0, None), "y": (1, 3)})
    prog.add({"x": 1, "y": 1}, L.GE, F(5, 2))
    res = L.solve_lp(prog)
    assert res.optimum == F(5, 2)
    assert L.verify_optimal(prog, res)


def test_degenerate_cycling_prone():
    # a classic degenerate program that cycles under the largest-coefficient rule
    prog = L.LinearProgram(["x1", "x2", "x3", "x4"], {"x1": F(3, 4), "x2": -150, "x3": F(1, 50), "x4": -6},
                           "max", bounds={v: (0, None) for v in ["x1", "x2", "x3", "x4"]})
    prog.add({"x1": F(1, 4), "x2": -60, "x3": F(-1, 25), "x4": 9}, L.LE, 0)
    prog.add({"x1": F(1, 2), "x2": -90, "x3": F(-1, 50), "x4": 3}, L.LE, 0)
    prog.add({"x3": 1}, L.LE, 1)
    res = L.solve_lp(prog)
    assert res.optimum == F(1, 20)
    assert L.verify_optimal(prog, res)


def _vertex_oracle(cons, obj):
    """Optimum of a bounded 2-variable LP by enumerating pairwise line intersections."""
    best = None
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(cons, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        x = F(c1 * b2 - c2 * b1, det)
        y = F(a1 * c2 - a2 * c1, det)
        if all(a * x + b * y <= c for a, b, c in cons):
            v = obj[0] * x + obj[1] * y
            best = v if best is None or v > best else best
    return best


coef = st.integers(-4, 4)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coef, coef, st.integers(-3, 6)), min_size=1, max_size=4), coef, coef)
def test_random_2d_matches_vertex_enumeration(rows, c1, c2):
    box = [(1, 0, 5), (-1, 0, 5), (0, 1, 5), (0, -1, 5)]  # keeps the program bounded
    cons = box + [r for r in rows if r[0] or r[1]]
    prog = L.LinearProgram(["x", "y"], {"x": c1, "y": c2}, "max")
    for a, b, c in cons:
        prog.add({"x": a, "y": b}, L.LE, c)
    res = L.solve_lp(prog)
    expected = _vertex_oracle(cons, (c1, c2))
    if expected is None:
        assert res.status == L.INFEASIBLE
        assert res.certificate.verify(prog)
    else:
        assert res.optimal and res.optimum == expected
        assert L.verify_optimal(prog, res)


def test_stats_count_solves():
    L.reset_stats()
    prog = L.LinearProgram(["x"], {"x": 1}, "max", bounds={"x": (0, 1)})
    L.solve_lp(prog)
    assert L.STATS["solves"] == 1 and L.STATS["duality_checked"] == 1
