from fractions import Fraction as F

import pytest

from charsets.charset import CharSet, from_sequence
from charsets.classic import factorial_charset, prufer_charset
from charsets.torus import parse_circle
from charsets.verifier import (MEMBER, UNDETERMINED, WITNESS, chain_witness_sequence,
                               check_chain_witnesses, check_separation, measure_profile,
                               monte_carlo_measure, recheck_profile, separation_witness,
                               sublevel_measure, tail_profile)
from oracles import arc_measure, rationals


def test_profile_prufer_examples():
    p = tail_profile((F(1, 3),), prufer_charset(2, 10))
    assert set(p.values) == {F(1, 3)} and p.verdict == WITNESS
    assert recheck_profile(p)
    p = tail_profile((F(1, 8),), prufer_charset(2, 10))
    assert p.values[:3] == (F(1, 8), F(1, 4), F(1, 2))
    assert p.verdict == MEMBER and p.quiet_from == 3


def test_profile_factorial_rationals():
    B = factorial_charset(50)
    for x in rationals(50):
        p = tail_profile((x,), B)
        assert p.verdict == MEMBER and p.quiet_from <= x.denominator


def test_profile_undetermined_and_csv():
    p = tail_profile((F(1, 3),), from_sequence([1, 3]))
    assert p.verdict == MEMBER
    p = tail_profile((F(1, 5),), from_sequence([1, 2]))
    assert p.verdict == UNDETERMINED
    csv = p.to_csv().splitlines()
    assert csv[0] == "level,phi,value,err" and len(csv) == 3


def test_profile_irrational():
    x = parse_circle("sqrt(2):0,1,1")
    p = tail_profile((x,), factorial_charset(12))
    assert p.verdict == WITNESS and recheck_profile(p, 256)


def test_measure_examples():
    assert sublevel_measure([(1,)], F(1, 4)).measure == F(1, 2)
    assert sublevel_measure([(1,), (2,)], F(1, 8)).measure == F(1, 8)
    assert sublevel_measure([], F(1, 8)).measure == 1
    with pytest.raises(ValueError):
        sublevel_measure([(1,)], F(1, 2))


def test_measure_matches_breakpoint_oracle():
    for chars in ([3, 5], [2, 7, 12], [6, 10, 15], [4, 9]):
        for delta in (F(1, 8), F(1, 5), F(1, 3)):
            got = sublevel_measure([(c,) for c in chars], delta).measure
            assert got == arc_measure(chars, delta)


def test_measure_profile_decreases():
    reps = measure_profile(factorial_charset(5), F(1, 8))
    ms = [r.measure for r in reps]
    assert all(a > b for a, b in zip(ms, ms[1:]))


def test_monte_carlo_is_seeded():
    a = monte_carlo_measure([(1,), (2,)], F(1, 8), 20000, seed=3)
    b = monte_carlo_measure([(1,), (2,)], F(1, 8), 20000, seed=3)
    assert a == b and abs(a[0] - 0.125) < 4 * a[1] + 1e-3


def test_separation_examples():
    third = [[(F(0),), (F(1, 3),), (F(2, 3),)]] * 4
    s = separation_witness(third, (F(1, 7),))
    assert [w.u for w in s] == [(3,)] * 3 and check_separation(third, (F(1, 7),), s)
    half = [[(F(0),), (F(1, 2),)]] * 3
    assert {w.u for w in separation_witness(half, (F(1, 3),))} == {(2,)}
    dy = [[(F(k, 2 ** (n + 1)),) for k in range(2 ** (n + 1))] for n in range(6)]
    s = separation_witness(dy, (F(1, 3),))
    for w in s:
        v = w.u[0]
        assert v & (v - 1) == 0 and v >= 2 ** (w.n + 1)
    assert check_separation(dy, (F(1, 3),), s)
    with pytest.raises(ValueError):
        separation_witness(third, (F(1, 3),))


def test_chain_witness_examples():
    ch = [[(F(1, 2 ** n),)] for n in range(6)]
    ws = chain_witness_sequence(ch, (F(1, 3),))
    assert [w.u[0] for w in ws] == [2 ** n for n in range(6)]
    assert check_chain_witnesses(ch, (F(1, 3),), ws)
    ch3 = [[(F(1, 3 ** n),)] for n in range(5)]
    ws = chain_witness_sequence(ch3, (F(1, 2),))
    assert [w.u[0] for w in ws] == [3 ** n for n in range(5)]
    assert all(w.value == F(1, 2) for w in ws)
    with pytest.raises(ValueError):
        chain_witness_sequence(ch, (F(1, 32),))
