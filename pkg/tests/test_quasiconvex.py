from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from charsets.quasiconvex import char_window, is_subgroup, quasi_hull, tolerance
from oracles import hull, window_residues


def classes(w):
    return sorted(c[0] for c in w.residues)


def test_window_examples():
    assert classes(char_window([(F(1, 5),)], 0)) == [0, 1, 4]
    assert classes(char_window([(F(1, 2),)], 0)) == [0]
    w = char_window([(F(0),)], 3)
    assert w.contains((12345,)) and w.contains((-7,))


def test_hull_examples():
    assert quasi_hull([(F(1, 5),)], 0).points == ((0,), (F(1, 5),), (F(4, 5),))
    third = [(F(0),), (F(1, 3),), (F(2, 3),)]
    for m in range(4):
        assert quasi_hull(third, m).points == tuple(sorted(third))
        assert quasi_hull([(F(0),)], m).points == ((0,),)


def test_empty_hull_rejected():
    with pytest.raises(ValueError):
        quasi_hull([], 0)


def test_two_dimensional_subgroup_is_its_own_hull():
    G = [(F(a, 2), F(b, 3)) for a in range(2) for b in range(3)]
    assert is_subgroup(G)
    assert sorted(quasi_hull(G, 1).points) == sorted(G)


def test_tolerance():
    assert tolerance(0) == F(1, 4) and tolerance(3) == F(1, 32)


rational_sets = st.integers(2, 24).flatmap(
    lambda q: st.tuples(st.just(q), st.sets(st.integers(0, q - 1), min_size=1, max_size=4)))


@settings(max_examples=1000, deadline=None)
@given(rational_sets, st.integers(0, 3))
def test_hull_matches_oracle_and_grows(qa, m):
    q, nums = qa
    E = [F(a, q) for a in nums]
    pts = [p[0] for p in quasi_hull([(e,) for e in E], m).points]
    assert pts == hull(E, q, m)
    assert set(E) <= set(pts)
    if m:
        assert set(quasi_hull([(e,) for e in E], m - 1).points) <= {(p,) for p in pts}
    w = char_window([(e,) for e in E], m)
    assert classes(w) == [r for r in window_residues(E, w.modulus, m)]
