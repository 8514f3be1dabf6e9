"""Randomized property suites, 1000+ cases each."""

from fractions import Fraction as F
from math import gcd

from hypothesis import HealthCheck, given, settings, strategies as st

from charsets.characterizer import build_tower, characterize
from charsets.charset import CharSet
from charsets.lattice import annihilator, closure, det, matmul, snf
from charsets.quasiconvex import char_window, tolerance
from charsets.torus import (SUP, WEIGHTED, Interval, circle, eval_char, metric_d, norm,
                            parse_circle)
from charsets.verifier import tail_profile
from oracles import nrm

MANY = settings(max_examples=1000, deadline=None,
                suppress_health_check=[HealthCheck.too_slow])

rat = st.fractions(min_value=-3, max_value=3, max_denominator=400)
dims = st.integers(1, 4)


def points(d):
    return st.lists(rat, min_size=d, max_size=d).map(lambda v: tuple(circle(c) for c in v))


chars = st.integers(-10 ** 6, 10 ** 6)


# -- norm and metric --------------------------------------------------------

@MANY
@given(rat, rat)
def test_norm_axioms(z, w):
    n = norm(z)
    assert 0 <= n <= F(1, 2)
    assert norm(-z) == n and norm(z + 1) == n
    assert norm(z + w) <= n + norm(w)
    assert n == nrm(z)


@MANY
@given(dims.flatmap(lambda d: st.tuples(points(d), points(d), points(d))),
       st.sampled_from([SUP, WEIGHTED]))
def test_metric_axioms(xyz, m):
    x, y, z = xyz
    dxy = metric_d(x, y, m)
    assert dxy >= 0 and (dxy == 0) == (x == y)
    assert dxy == metric_d(y, x, m)
    assert metric_d(x, z, m) <= dxy + metric_d(y, z, m)
    shift = tuple(circle(a + b) for a, b in zip(x, z))
    shift_y = tuple(circle(a + b) for a, b in zip(y, z))
    assert metric_d(shift, shift_y, m) == dxy


@MANY
@given(dims.flatmap(lambda d: st.tuples(st.lists(chars, min_size=d, max_size=d),
                                        st.lists(chars, min_size=d, max_size=d), points(d),
                                        points(d))))
def test_eval_char_bilinear(data):
    phi, psi, x, y = data
    phi, psi = tuple(phi), tuple(psi)
    s = tuple(a + b for a, b in zip(phi, psi))
    assert eval_char(s, x) == circle(eval_char(phi, x) + eval_char(psi, x))
    xy = tuple(circle(a + b) for a, b in zip(x, y))
    assert eval_char(phi, xy) == circle(eval_char(phi, x) + eval_char(phi, y))


@MANY
@given(st.integers(-10 ** 4, 10 ** 4).filter(bool), st.sampled_from(["sqrt(2):0,1,1",
                                                                     "sqrt(5):-1,1,2",
                                                                     "sqrt(3):-1,1,1"]))
def test_interval_encloses_refined_value(k, text):
    x = parse_circle(text)
    v = norm(eval_char((k,), (x,), 64), 64)
    w = norm(eval_char((k,), (x,), 128), 128)
    lo, hi = (v.lo, v.hi) if isinstance(v, Interval) else v.enclose(64)
    lo2, hi2 = (w.lo, w.hi) if isinstance(w, Interval) else w.enclose(128)
    assert lo <= lo2 <= hi2 <= hi


# -- Smith normal form ------------------------------------------------------

matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.lists(st.integers(-30, 30), min_size=c, max_size=c),
                           min_size=r, max_size=r)))


@MANY
@given(matrices)
def test_snf_contract(M):
    U, D, V = snf(M)
    r, c = len(M), len(M[0])
    assert matmul(matmul(U, M), V) == D
    assert abs(det(U)) == 1 and abs(det(V)) == 1
    diag = [D[i][i] for i in range(min(r, c))]
    assert all(D[i][j] == 0 for i in range(r) for j in range(c) if i != j)
    assert all(v >= 0 for v in diag)
    for a, b in zip(diag, diag[1:]):
        assert (b == 0) if a == 0 else b % a == 0
    if r == c:
        assert abs(det(M)) == abs(det(D))


@MANY
@given(st.integers(1, 3).flatmap(lambda d: st.lists(points(d), min_size=1, max_size=3)))
def test_annihilator_contract(H):
    d = len(H[0])
    basis = annihilator(H, d)
    assert len(basis) == d
    for u in basis:
        assert all(eval_char(u, h) == 0 for h in H)
    # the index of the annihilator lattice is the order of the generated group
    assert abs(det([list(u) for u in basis])) == closure(H, d).order


# -- tail profiles ----------------------------------------------------------

@MANY
@given(st.lists(chars.filter(bool), min_size=1, max_size=12), rat, rat)
def test_profile_subadditive(seq, x, y):
    B = CharSet(tuple(((v,),) for v in seq), 1)
    px = tail_profile((x,), B)
    py = tail_profile((y,), B)
    pxy = tail_profile((circle(x + y),), B)
    for a, b, c in zip(pxy.values, px.values, py.values):
        assert a <= b + c
    if px.quiet_from is not None and py.quiet_from is not None:
        q = max(px.quiet_from, py.quiet_from)
        assert all(v == 0 for lv, v in zip(pxy.levels, pxy.values) if lv >= q)


# -- every character leaves the windows ------------------------------------

def _stage_max(phi, Q):
    """max over e in <1/Q> of ||phi e||."""
    Qp = Q // gcd(phi, Q)
    return F(Qp // 2, Qp)


@MANY
@given(chars.filter(bool), st.sampled_from([2, 3, 5, 6, 10]), st.sampled_from([1, 2, 3, 7]))
def test_every_character_leaves_the_windows(phi, k, num):
    """For the dense tower E_n = <g/k^n>, a fixed phi != 0 is outside A_n for
    all large n, i.e. it lies in only finitely many windows."""
    g = F(num, k) if F(num, k).denominator > 1 else F(1, k)
    inside = []
    for n in range(60):
        Q = circle(g / k ** n).denominator
        m = _stage_max(phi, Q)
        if Q <= 200:
            assert m == max(nrm(phi * F(j, Q)) for j in range(Q))
        inside.append(m <= tolerance(n))
    last = max((n for n, v in enumerate(inside) if v), default=-1)
    assert last < 59
    assert not any(inside[last + 1:])


def test_pipeline_characters_leave_the_windows():
    levels = 6
    r = characterize(build_tower([(F(1, 2),)], levels=levels, refine=2), levels)
    stages = build_tower([(F(1, 2),)], levels=levels + 6, refine=2).stages
    for n, phi in r.charset.leveled():
        assert char_window(stages[n], n).contains(phi)
        assert any(not char_window(stages[m], m).contains(phi) for m in range(n, levels + 6))
