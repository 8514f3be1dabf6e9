from fractions import Fraction as F

import pytest

from charsets.charset import CharSet, from_sequence
from charsets.classic import prufer_charset
from charsets.fsigma import (INF, ChainError, ChainSpec, check_condition_c, generator_chain,
                             partition_B, pattern_chain, point_distance, refutation_witness,
                             verify_refutation)
from charsets.torus import WEIGHTED

DYADIC = generator_chain([[(F(1, 2 ** n),)] for n in range(6)])


def torus_chain(L):
    # F_n = T^n x 0
    return pattern_chain([["T"] * n + [1] * (L - n) for n in range(L)], L)


def test_condition_c_examples():
    c = check_condition_c(DYADIC)
    assert c.holds and c.m == 0 and set(c.indices) == {2}
    c = check_condition_c(torus_chain(6))
    assert not c.holds and "|F_1:F_0| is infinite" in c.reason
    # T^min(n,3) x 0: infinite indices until stage 3, then constant
    const = pattern_chain([["T"] * min(n, 3) + [1] * (5 - min(n, 3)) for n in range(7)], 5)
    c = check_condition_c(const)
    assert c.holds and c.m == 3 and c.indices[3:] == (1, 1, 1)
    # finite indices throughout: the least such m is 0
    c = check_condition_c(generator_chain([[(F(1, 2 ** min(n, 3)),)] for n in range(7)]))
    assert c.holds and c.m == 0


def test_condition_c_finite_index_rational_chains():
    for a in (2, 3, 5, 6):
        for b in (1, 2, 7):
            ch = generator_chain([[(F(1, b * a ** n),)] for n in range(5)])
            c = check_condition_c(ch)
            assert c.holds and all(i != INF for i in c.indices)


def test_chain_validation():
    with pytest.raises(ChainError):
        generator_chain([[(F(1, 4),)], [(F(1, 2),)]])
    with pytest.raises(ChainError):
        ChainSpec.from_json({"ambient": "omega", "truncation": 2, "stages": [["T", 1], ["T", 1]],
                             "strict": [True]})


def test_partition_examples():
    p = partition_B(from_sequence([2, 4, 8, 3]), DYADIC)
    assert p.levels[:4] == (((3,),), ((2,),), ((4,),), ((8,),))
    p = partition_B(prufer_charset(2, 5), DYADIC)
    assert p.levels[:5] == tuple(((2 ** n,),) for n in range(5))
    odd = CharSet(tuple(((2 * k + 1,),) for k in range(8)), 1)
    p = partition_B(odd, DYADIC)
    assert len(p.levels[0]) == 8
    assert p.violations[1] == tuple(range(1, 9)) and p.verdicts[1] == "growing"


def test_weighted_distance():
    y = (F(0), F(3, 7), F(0))
    assert point_distance(y, ("T", 1, 1), WEIGHTED) == F(1, 2) * F(3, 7)


def test_refutation_coefficient_example():
    L = 7
    ch = torus_chain(L)
    B = CharSet(tuple(((tuple(n + 1 if i == n else 0 for i in range(L)),)) for n in range(L - 1)), L)
    ref = refutation_witness(ch, B)
    assert verify_refutation(ref).ok
    assert ref.ys[0][0] != 0 and all(ref.ys[n][n] != 0 for n in range(len(ref.ys)))


def test_refutation_accepts_hand_picked_values():
    # hand-picked t_0 = 1/4, t_1 = 1/16 satisfy the same checks
    from charsets.fsigma import Refutation
    L = 3
    pats = (("T", 1, 1), ("T", "T", 1), ("T", "T", "T"))
    pats = ((1, 1, 1),) + pats[:2]
    ys = ((F(1, 4), F(0), F(0)), (F(0), F(1, 16), F(0)))
    x = (F(1, 4), F(1, 16), F(0))
    dy = tuple(point_distance(y, p, WEIGHTED) for y, p in zip(ys, pats))
    dx = (point_distance(x, pats[0], WEIGHTED), point_distance(ys[1], pats[1], WEIGHTED))
    ref = Refutation((0, 1, 2), pats, (((1, 0, 0),), ((0, 2, 0),)), ys, x, dy, dx, WEIGHTED)
    chk = verify_refutation(ref)
    assert chk.ok, chk.failures


def test_refutation_empty_and_rejected():
    ref = refutation_witness(torus_chain(5), CharSet((), 5))
    assert verify_refutation(ref).ok
    assert all(d > 0 for d in ref.dist_x)
    with pytest.raises(ChainError, match="condition"):
        refutation_witness(DYADIC, CharSet((), 1))


def test_tampered_refutation_fails():
    L = 5
    ch = torus_chain(L)
    B = CharSet(tuple(((tuple(n + 1 if i == n else 0 for i in range(L)),)) for n in range(L - 1)), L)
    ref = refutation_witness(ch, B)
    from dataclasses import replace
    bad = replace(ref, x=tuple(c + F(1, 3) if i == 0 else c for i, c in enumerate(ref.x)))
    assert not verify_refutation(bad).ok


def test_chain_json():
    ch = ChainSpec.from_json({"ambient": "omega", "truncation": 3,
                              "stages": [[1, 1, 1], ["T", 1, 1], ["T", "T", 1]]})
    assert not check_condition_c(ch).holds
    ch = ChainSpec.from_json({"stages": [{"generators": ["1/2"]}, {"generators": ["1/4"]}]})
    assert check_condition_c(ch).holds
    with pytest.raises(KeyError):
        ChainSpec.from_json({"ambient": "torus"})
