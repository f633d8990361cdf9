import itertools
import random

import pytest

import oracles
from polytrade import lp as L
from polytrade.convexity import PointSet, PreconditionError, is_m_convex_set
from polytrade.generators import random_polymatroid
from polytrade.polymatroid import (
    Polymatroid,
    SetFunction,
    SetFunctionError,
    greedy_vertex,
    integer_points,
    is_submodular,
    membership,
    monotone_closure,
    points_from_set_fn,
    polymatroid_lp,
    set_fn_from_mconvex_set,
    tight_face,
    verify_closure_intersection,
)

CAP1 = SetFunction(("e", "g"), {(): 0, ("e",): 1, ("g",): 1, ("e", "g"): 1})


def test_validation_errors():
    with pytest.raises(SetFunctionError):
        SetFunction(("e",), {(): 1, ("e",): 1})
    with pytest.raises(SetFunctionError):
        SetFunction(("e", "g"), {(): 0, ("e",): 1})
    with pytest.raises(SetFunctionError):
        Polymatroid(SetFunction(("e", "g"), {(): 0, ("e",): 1, ("g",): 1, ("e", "g"): 3}))


def test_membership_and_points():
    P = Polymatroid(CAP1)
    assert membership(P, (1, 0)) and not membership(P, (1, 1)) and not membership(P, (-1, 0))
    assert integer_points(P).points == {(0, 0), (1, 0), (0, 1)}


def test_tight_face_lattice():
    P = Polymatroid(CAP1)
    face = tight_face(P, (1, 0))
    assert set(face.tight_sets) == {frozenset(), frozenset({"e"}), frozenset({"e", "g"})}
    assert face.is_lattice()


def test_greedy_on_nonmonotone_table():
    f = SetFunction(("a", "b"), {(): 0, ("a",): 3, ("b",): 2, ("a", "b"): 2})
    P = Polymatroid(f)
    x = greedy_vertex(P, (1, 1))
    assert sum(x.values) == 2 and membership(P, x.values)
    assert monotone_closure(f)(("a",)) == 2


def test_greedy_matches_brute_force():
    rng = random.Random(11)
    for _ in range(60):
        n = rng.randint(1, 4)
        ground = tuple(f"a{k}" for k in range(n))
        P = random_polymatroid(rng, ground, 2)
        w = tuple(rng.randint(-3, 5) for _ in range(n))
        table = dict(P.fn.items())
        best = max(sum(a * b for a, b in zip(w, x)) for x in oracles.polymatroid_points(table, ground, 2))
        x = greedy_vertex(P, w)
        assert sum(a * b for a, b in zip(w, x.values)) == best
        res = L.solve_lp(polymatroid_lp(P, w))
        assert res.optimum == best


def test_generated_functions_are_submodular():
    rng = random.Random(5)
    for _ in range(30):
        ground = tuple("abc")
        P = random_polymatroid(rng, ground, 2)
        assert oracles.submodular(dict(P.fn.items()), ground)
        assert is_submodular(P.fn)


def test_roundtrip_both_ways():
    base = points_from_set_fn(CAP1).base
    assert base.points == {(1, 0), (0, 1)}
    assert set_fn_from_mconvex_set(base) == CAP1


def test_empty_base_raises():
    f = SetFunction(("a", "b"), {(): 0, ("a",): 0, ("b",): 0, ("a", "b"): 1})
    # not submodular, so it cannot define a polymatroid at all
    with pytest.raises(SetFunctionError):
        points_from_set_fn(f)


def test_set_fn_requires_m_convex():
    with pytest.raises(PreconditionError):
        set_fn_from_mconvex_set(PointSet.of(("a", "b"), [(0, 0), (1, 1)]))


def test_closure_intersection_simple():
    B1 = PointSet.of(("a", "b", "c"), [(1, 1, 0), (1, 0, 1), (0, 1, 1)])
    B2 = PointSet.of(("a", "b", "c"), [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)])
    assert is_m_convex_set(B1) and is_m_convex_set(B2)
    assert verify_closure_intersection(B1, B2)


def test_closure_intersection_disjoint():
    B1 = PointSet.of(("a", "b"), [(1, 0)])
    B2 = PointSet.of(("a", "b"), [(0, 1)])
    res = verify_closure_intersection(B1, B2)
    assert res and "disjoint" in res.reason


def test_all_subsets_covered():
    f = SetFunction.additive({"a": 1, "b": 2})
    assert [v for _, v in f.items()] == [0, 1, 2, 3]
    assert all(f(s) == sum({"a": 1, "b": 2}[e] for e in s)
               for k in range(3) for s in itertools.combinations("ab", k))
