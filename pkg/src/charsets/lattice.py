"""Integer lattices on the dual side of T^d.

Smith normal form, annihilators H^perp of finite rational subsets, and closed
subgroups of T^d in normalized coordinates.  Matrices are lists of lists of
Python ints throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import List, Optional, Sequence, Tuple

from .torus import (Character, DimensionMismatch, Quadratic, TorusPoint, circle,
                    eval_char, is_rational, point_is_rational)

Matrix = List[List[int]]


class UnsupportedSubgroup(ValueError):
    """A subgroup that cannot be normalized from the data given."""


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Matrix, B: Matrix) -> Matrix:
    if not A:
        return []
    if len(A[0]) != len(B):
        raise DimensionMismatch("matrix shapes do not match")
    cols = list(zip(*B)) if B else []
    return [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in A]


def det(A: Matrix) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(A)
    if n == 0:
        return 1
    M = [list(r) for r in A]
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k]:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def _snf_full(M: Matrix):
    m = len(M)
    n = len(M[0]) if m else 0
    A = [list(r) for r in M]
    U, V, Vinv = identity(m), identity(n), identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]
        Vinv[i], Vinv[j] = Vinv[j], Vinv[i]

    def add_row(dst, src, k):  # row_dst += k * row_src
        A[dst] = [a + k * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + k * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, k):  # col_dst += k * col_src
        for row in A:
            row[dst] += k * row[src]
        for row in V:
            row[dst] += k * row[src]
        # inverse of the column operation acts on rows of Vinv
        Vinv[src] = [a - k * b for a, b in zip(Vinv[src], Vinv[dst])]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return U, A, V, Vinv
            if best[0] != t:
                swap_rows(t, best[0])
            if best[1] != t:
                swap_cols(t, best[1])
            p = A[t][t]
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
            if any(A[i][t] for i in range(t + 1, m)) or any(A[t][j] for j in range(t + 1, n)):
                continue
            bad = next((i for i in range(t + 1, m)
                        if any(A[i][j] % p for j in range(t + 1, n))), None)
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
    return U, A, V, Vinv


def snf(M: Matrix) -> Tuple[Matrix, Matrix, Matrix]:
    """Smith normal form: returns (U, D, V) with U*M*V = D.

    U and V are unimodular and D is diagonal with d_1 | d_2 | ... >= 0.
    Pivoting always uses the entry of least nonzero absolute value.
    """
    U, D, V, _ = _snf_full(M)
    return U, D, V


def invariant_factors(M: Matrix) -> List[int]:
    _, D, _ = snf(M)
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0)) if D[i][i]]


def hnf_rows(rows: Sequence[Sequence[int]], d: Optional[int] = None) -> Matrix:
    """Row-style Hermite normal form of the lattice spanned by ``rows``.

    Returns a basis in echelon form with positive pivots and the entries above
    each pivot reduced into [0, pivot).  Zero rows are dropped.
    """
    A = [list(r) for r in rows if any(r)]
    if not A:
        return []
    n = len(A[0]) if d is None else d
    out_row = 0
    for col in range(n):
        # gather gcd of column entries from out_row down into A[out_row]
        for i in range(out_row + 1, len(A)):
            while A[i][col]:
                if out_row >= len(A):
                    break
                q = A[out_row][col] // A[i][col]
                A[out_row] = [a - q * b for a, b in zip(A[out_row], A[i])]
                A[out_row], A[i] = A[i], A[out_row]
        if out_row < len(A) and A[out_row][col]:
            if A[out_row][col] < 0:
                A[out_row] = [-a for a in A[out_row]]
            p = A[out_row][col]
            for i in range(out_row):
                q = A[i][col] // p
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[out_row])]
            out_row += 1
            if out_row == len(A):
                break
    return [r for r in A[:out_row] if any(r)]


def _common_denominator(points: Sequence[TorusPoint]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b),
                  (c.denominator for x in points for c in x), 1)


def annihilator(H: Sequence[TorusPoint], d: Optional[int] = None) -> List[Character]:
    """Basis (HNF) of {phi in Z^d : phi(h) = 0 mod 1 for all h in H}."""
    H = [tuple(x) for x in H]
    if d is None:
        if not H:
            raise ValueError("dimension needed for an empty generator list")
        d = len(H[0])
    for x in H:
        if len(x) != d:
            raise DimensionMismatch("generators of mixed dimension")
        if not point_is_rational(x):
            raise UnsupportedSubgroup("annihilator needs rational generators")
    q = _common_denominator(H)
    gens = [[q * int(i == j) for j in range(d)] for i in range(d)]
    gens += [[int(c * q) % q for c in x] for x in H]
    # square basis of q*(Z^d + <H>) first, so the SNF stays d x d
    _, D, V, _ = _snf_full(hnf_rows(gens, d))
    basis = []
    for i in range(d):
        di = D[i][i]
        basis.append([(q // di) * V[r][i] for r in range(d)])
    basis = [tuple(r) for r in hnf_rows(basis, d)]
    for phi in basis:
        for x in H:
            if eval_char(phi, x) != 0:
                raise ArithmeticError("annihilator basis check failed")
    return basis


def integer_kernel(rows: Sequence[Sequence[int]], d: int) -> List[Character]:
    """Basis of {phi in Z^d : sum_c row[c] * phi[c] = 0 for every row}."""
    A = [list(r) for r in rows if any(r)]
    if not A:
        return [tuple(r) for r in identity(d)]
    _, D, V, _ = _snf_full(A)
    rank = sum(1 for i in range(min(len(D), d)) if D[i][i])
    basis = [[V[r][i] for r in range(d)] for i in range(rank, d)]
    return [tuple(r) for r in hnf_rows(basis, d)]


def lattice_contains(basis: Sequence[Character], phi: Character) -> bool:
    """Membership of phi in the lattice spanned by an HNF basis."""
    v = list(phi)
    for row in basis:
        col = next(j for j, a in enumerate(row) if a)
        if v[col] % row[col]:
            return False
        k = v[col] // row[col]
        v = [a - k * b for a, b in zip(v, row)]
    return not any(v)


@dataclass(frozen=True)
class ClosedSubgroup:
    """A closed subgroup N of T^d in normalized form.

    With x = V x', N is {x' : d_i x'_i = 0 mod 1 for i < rank} where the
    remaining ``torus_rank`` coordinates are free.  ``factors`` holds all d_i
    (ones included); ``invariant_factors`` only those > 1.
    """

    dim: int
    perp: Tuple[Character, ...]
    coords: Tuple[Tuple[int, ...], ...]
    coords_inv: Tuple[Tuple[int, ...], ...]
    factors: Tuple[int, ...]
    generators_given: Tuple[TorusPoint, ...] = ()

    @property
    def torus_rank(self) -> int:
        return self.dim - len(self.factors)

    @property
    def invariant_factors(self) -> Tuple[int, ...]:
        return tuple(f for f in self.factors if f > 1)

    @property
    def is_finite(self) -> bool:
        return self.torus_rank == 0

    @property
    def components(self) -> int:
        return math.prod(self.factors)

    @property
    def order(self):
        return self.components if self.is_finite else math.inf

    @property
    def is_connected(self) -> bool:
        return not self.invariant_factors

    def generators(self) -> List[TorusPoint]:
        """Rational generators of the finite part (the torus part has none)."""
        V = self.coords
        out = []
        for i, f in enumerate(self.factors):
            if f > 1:
                out.append(tuple(circle(Fraction(V[r][i], f)) for r in range(self.dim)))
        return out

    def elements(self) -> List[TorusPoint]:
        if not self.is_finite:
            raise ValueError("infinite closed subgroup has no element list")
        V = self.coords
        pts = set()
        for ks in itertools.product(*(range(f) for f in self.factors)):
            pts.add(tuple(circle(sum(Fraction(V[r][i] * k, f)
                                     for i, (k, f) in enumerate(zip(ks, self.factors))))
                          for r in range(self.dim)))
        return sorted(pts)

    def contains(self, x: TorusPoint) -> bool:
        if len(x) != self.dim:
            raise DimensionMismatch("point dimension")
        for phi in self.perp:
            v = eval_char(phi, x)
            if not isinstance(v, (Fraction, Quadratic)):
                raise UnsupportedSubgroup("membership of an interval point is undecidable")
            if v != 0:
                return False
        return True

    def annihilates(self, phi: Character) -> bool:
        return lattice_contains(self.perp, phi)

    def restrict(self, phi: Character):
        """phi restricted to N, in normalized coordinates.

        Returns (finite_part, torus_part): residues mod each factor and the
        integer coefficients on the free coordinates.
        """
        V = self.coords
        psi = [sum(phi[r] * V[r][i] for r in range(self.dim)) for i in range(self.dim)]
        k = len(self.factors)
        return tuple(p % f for p, f in zip(psi[:k], self.factors)), tuple(psi[k:])

    def extend(self, psi: Sequence[int]) -> Character:
        """A character of T^d whose restriction to N has torus part psi and
        trivial finite part."""
        if len(psi) != self.torus_rank:
            raise DimensionMismatch("extension needs one coefficient per free coordinate")
        row = [0] * len(self.factors) + list(psi)
        W = self.coords_inv
        return tuple(sum(row[i] * W[i][c] for i in range(self.dim)) for c in range(self.dim))


def subgroup_from_perp(perp: Sequence[Character], d: int, generators=()) -> ClosedSubgroup:
    """The closed subgroup {x : phi(x) = 0 for phi in perp}."""
    basis = [tuple(r) for r in hnf_rows(perp, d)]
    if basis:
        _, D, V, Vinv = _snf_full([list(r) for r in basis])
        rank = sum(1 for i in range(min(len(D), d)) if D[i][i])
        factors = tuple(D[i][i] for i in range(rank))
    else:
        V, Vinv, factors = identity(d), identity(d), ()
    return ClosedSubgroup(d, tuple(basis), tuple(map(tuple, V)), tuple(map(tuple, Vinv)),
                          factors, tuple(generators))


def closure(H: Sequence[TorusPoint], d: Optional[int] = None,
            dependency: Optional[Sequence[Character]] = None) -> ClosedSubgroup:
    """Smallest closed subgroup of T^d containing H.

    Irrational generators need ``dependency``: a basis of the integer vectors
    annihilating all of them (an empty list means no relations at all).  It is
    checked exactly where possible.
    """
    H = [tuple(x) for x in H]
    if d is None:
        if not H:
            raise ValueError("dimension needed for an empty generator list")
        d = len(H[0])
    rational = [x for x in H if point_is_rational(x)]
    irrational = [x for x in H if not point_is_rational(x)]
    if not irrational:
        perp = annihilator(rational, d) if rational else [tuple(r) for r in identity(d)]
        return subgroup_from_perp(perp, d, H)
    if dependency is None:
        raise UnsupportedSubgroup("irrational generators need a declared dependency lattice")
    C = [tuple(int(v) for v in row) for row in hnf_rows(dependency, d)]
    for phi in C:
        for x in irrational:
            v = eval_char(phi, x)
            if isinstance(v, (Fraction, Quadratic)) and v != 0:
                raise UnsupportedSubgroup(f"declared relation {phi} does not vanish on {x}")
    if not C:
        return subgroup_from_perp([], d, H)
    s = len(C)
    images = [tuple(eval_char(phi, x) for phi in C) for x in rational]
    ts = annihilator(images, s) if images else [tuple(r) for r in identity(s)]
    perp = [tuple(sum(t[i] * C[i][c] for i in range(s)) for c in range(d)) for t in ts]
    return subgroup_from_perp(perp, d, H)


def lattice_shell(basis: Sequence[Character], radius: int):
    """Lattice vectors t*basis with max|t_i| == radius (radius >= 1)."""
    r = len(basis)
    if r == 0:
        return []
    d = len(basis[0])
    out = set()
    for t in itertools.product(range(-radius, radius + 1), repeat=r):
        if max(abs(v) for v in t) != radius:
            continue
        out.add(tuple(sum(t[i] * basis[i][c] for i in range(r)) for c in range(d)))
    return sorted(out, key=lambda v: (max(abs(a) for a in v), v))


def canonical_sign(phi: Character) -> Character:
    for a in phi:
        if a:
            return phi if a > 0 else tuple(-v for v in phi)
    return phi


def is_rational_point(x) -> bool:
    return all(is_rational(c) for c in x)
