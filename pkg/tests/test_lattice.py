from fractions import Fraction as F

import pytest

from charsets.lattice import (UnsupportedSubgroup, annihilator, closure, det, hnf_rows,
                              identity, integer_kernel, lattice_contains, matmul, snf,
                              subgroup_from_perp)
from charsets.torus import parse_circle


def diag(D):
    return [D[i][i] for i in range(min(len(D), len(D[0])))]


def test_snf_examples():
    U, D, V = snf([[2, 4], [6, 8]])
    assert diag(D) == [2, 4]
    assert matmul(matmul(U, [[2, 4], [6, 8]]), V) == D
    U, D, V = snf(identity(3))
    assert D == identity(3) and U == identity(3) and V == identity(3)
    assert snf([[0]])[1] == [[0]]


def test_annihilator_examples():
    assert annihilator([(F(1, 6),)]) == [(6,)]
    basis = annihilator([(F(1, 2), F(1, 3))])
    assert sorted(basis) == [(0, 3), (2, 0)]
    assert abs(det([list(b) for b in basis])) == 6
    assert sorted(annihilator([(F(0), F(0))])) == [(0, 1), (1, 0)]


def test_closure_examples():
    N = closure([(F(1, 4),)])
    assert N.invariant_factors == (4,) and N.order == 4
    N = closure([(F(1, 2), F(0)), (F(0), F(1, 3))])
    assert N.invariant_factors == (6,) and len(N.elements()) == 6
    N = closure([(parse_circle("sqrt(2):0,1,1"),)], 1, dependency=[])
    assert N.torus_rank == 1 and N.perp == ()


def test_closure_irrational_needs_dependency():
    with pytest.raises(UnsupportedSubgroup):
        closure([(parse_circle("sqrt(2):0,1,1"),)], 1)


def test_kernel_and_membership():
    K = integer_kernel([[2, 4, 6]], 3)
    for v in K:
        assert 2 * v[0] + 4 * v[1] + 6 * v[2] == 0
    assert len(K) == 2
    assert lattice_contains(K, (1, 1, -1))
    assert not lattice_contains([(2, 0), (0, 3)], (1, 0))
    H = hnf_rows([[4, 6], [2, 2]])
    assert all(lattice_contains(H, r) for r in [(4, 6), (2, 2)])


def test_subgroup_restrict_extend_round_trip():
    N = subgroup_from_perp([(0, 1)], 2)          # T x {0}
    assert N.torus_rank == 1 and N.is_connected
    for phi in [(1, 0), (0, 1), (5, 7), (-3, 2)]:
        fin, tor = N.restrict(phi)
        assert not any(fin)
        assert N.restrict(N.extend(tor)) == (fin, tor)
    # finite part of (1/2,0),(0,1/3): restriction lives in Z/6
    G = closure([(F(1, 2), F(0)), (F(0), F(1, 3))])
    fin, tor = G.restrict((1, 1))
    assert tor == () and len(fin) == 2
