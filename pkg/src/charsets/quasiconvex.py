"""Character windows A = {phi : ||phi(e)|| <= 2**-(m+2) for e in E} and the
m-quasi-convex hulls q_m(E) of finite rational subsets of T^d."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import FrozenSet, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .lattice import canonical_sign, closure
from .torus import (Character, TorusPoint, circle, eval_char, format_point,
                    norm_cmp, point_is_rational)

_CHUNK = 1 << 22


def tolerance(m: int) -> Fraction:
    return Fraction(1, 1 << (m + 2))


def _lcm(values) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


def numerators(E: Sequence[TorusPoint], q: int) -> np.ndarray:
    return np.array([[int(c * q) % q for c in e] for e in E], dtype=np.int64).reshape(len(E), -1)


def _all_residues(q: int, d: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(q, dtype=np.int64)] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _small(values: np.ndarray, q: int, scale: int) -> np.ndarray:
    """Elementwise ||v/q|| <= 1/scale for integer residues v."""
    v = values % q
    return scale * np.minimum(v, q - v) <= q


def is_subgroup(E: Sequence[TorusPoint]) -> bool:
    pts = {tuple(e) for e in E}
    if not all(point_is_rational(e) for e in pts):
        return False
    return closure(list(pts)).order == len(pts)


@dataclass(frozen=True)
class CharWindow:
    """The window of level m over E.

    For rational E with common denominator ``modulus`` membership depends only
    on phi mod modulus, and ``residues`` lists the admissible classes.  For
    irrational E ``residues`` is None and membership is tested per phi.
    """

    E: Tuple[TorusPoint, ...]
    m: int
    modulus: Optional[int]
    residues: Optional[FrozenSet[Tuple[int, ...]]]
    dim: int = 1
    _sorted: Tuple[Tuple[int, ...], ...] = field(default=(), compare=False, repr=False)

    @property
    def tol(self) -> Fraction:
        return tolerance(self.m)

    def contains(self, phi: Character) -> bool:
        if self.residues is not None:
            return tuple(p % self.modulus for p in phi) in self.residues
        return all(norm_cmp(eval_char(phi, e), self.tol) <= 0 for e in self.E)

    def contains_exact(self, phi: Character) -> bool:
        """Membership straight from the definition (no residue table)."""
        return all(norm_cmp(eval_char(phi, e), self.tol) <= 0 for e in self.E)

    def members(self, limit: Optional[int] = None, max_coef: Optional[int] = None
                ) -> Iterator[Character]:
        """Nonzero members up to sign, ordered by max |coefficient| then
        lexicographically."""
        count = 0
        if self.dim == 1 and self.residues is not None:
            rs = sorted(r[0] for r in self.residues)
            for k in itertools.count():
                for r in rs:
                    v = k * self.modulus + r
                    if v == 0:
                        continue
                    if max_coef is not None and v > max_coef:
                        return
                    yield (v,)
                    count += 1
                    if limit is not None and count >= limit:
                        return
        for s in itertools.count(1):
            if max_coef is not None and s > max_coef:
                return
            for phi in _shell(self.dim, s):
                if self.contains(phi):
                    yield phi
                    count += 1
                    if limit is not None and count >= limit:
                        return

    def to_json(self) -> dict:
        out = {"E": [format_point(e) for e in self.E], "m": self.m}
        if self.residues is not None:
            classes = sorted(self.residues)
            out["residues"] = {"modulus": self.modulus,
                               "classes": [c[0] if self.dim == 1 else list(c) for c in classes]}
        return out


def _shell(d: int, s: int) -> List[Character]:
    """Canonical-sign vectors with max |coefficient| exactly s, sorted."""
    out = []
    for v in itertools.product(range(-s, s + 1), repeat=d):
        if max(abs(a) for a in v) == s and canonical_sign(v) == v:
            out.append(v)
    return sorted(out)


def char_window(E: Sequence[TorusPoint], m: int) -> CharWindow:
    """Exact residue description of the level-m window over E."""
    E = tuple(sorted({tuple(circle(c) for c in e) for e in E}, key=_point_key))
    if not E:
        raise ValueError("window over an empty set; use {0}")
    d = len(E[0])
    if not all(point_is_rational(e) for e in E):
        return CharWindow(E, m, None, None, d)
    q = _lcm(c.denominator for e in E for c in e)
    nums = numerators(E, q)
    if is_subgroup(E):
        # a nontrivial finite subgroup of T has an element of norm >= 1/3 > 2**-(m+2),
        # so the window is exactly the annihilator
        gens = closure(list(E)).generators() or [E[0]]
        gnums = numerators(gens, q)
        ok_rows = []
        for res in _residue_chunks(q, d):
            ok = np.all((res @ gnums.T) % q == 0, axis=1)
            ok_rows.append(res[ok])
    else:
        scale = 1 << (m + 2)
        ok_rows = []
        for res in _residue_chunks(q, d, len(E)):
            ok = np.all(_small(res @ nums.T, q, scale), axis=1)
            ok_rows.append(res[ok])
    rows = np.concatenate(ok_rows) if ok_rows else np.zeros((0, d), dtype=np.int64)
    residues = frozenset(tuple(int(v) for v in r) for r in rows)
    return CharWindow(E, m, q, residues, d)


def _residue_chunks(q: int, d: int, width: int = 1):
    total = q ** d
    step = max(1, _CHUNK // max(width, 1))
    if d == 1:
        for start in range(0, total, step):
            yield np.arange(start, min(total, start + step), dtype=np.int64).reshape(-1, 1)
        return
    allres = _all_residues(q, d)
    for start in range(0, total, step):
        yield allres[start:start + step]


def _point_key(x: TorusPoint):
    return tuple(x)


@dataclass(frozen=True)
class QuasiHull:
    E: Tuple[TorusPoint, ...]
    m: int
    points: Tuple[TorusPoint, ...]
    bound: int
    orders: Tuple[int, ...]
    complete: bool = True

    def to_json(self) -> dict:
        return {"E": [format_point(e) for e in self.E], "m": self.m,
                "hull": [format_point(x) for x in self.points],
                "coefficient_bound": self.bound}


def quasi_hull(E: Sequence[TorusPoint], m: int, window: Optional[CharWindow] = None) -> QuasiHull:
    """q_m(E) for finite rational E.

    Candidates are sum nu_j a_j over a cyclic decomposition a_1..a_n of <E>
    with |nu_j| <= 2**(m+1) M, M the largest order; since that box covers every
    residue of nu_j mod o(a_j) the candidates are enumerated modulo the orders.
    Each candidate is tested against every residue class of the window.
    """
    E = tuple(sorted({tuple(circle(c) for c in e) for e in E}, key=_point_key))
    if not E:
        raise ValueError("quasi-hull of an empty set")
    if not all(point_is_rational(e) for e in E):
        raise ValueError("quasi_hull needs rational points; see bounded_quasi_hull")
    d = len(E[0])
    if window is None:
        window = char_window(E, m)
    q = window.modulus
    N = closure(list(E))
    gens = N.generators()
    orders = tuple(f for f in N.factors if f > 1)
    M = max(orders, default=1)
    bound = (1 << (m + 1)) * M
    if gens:
        gnums = numerators(gens, q)
        coeffs = np.array(list(itertools.product(*(range(o) for o in orders))), dtype=np.int64)
        cands = (coeffs @ gnums) % q
    else:
        cands = np.zeros((1, d), dtype=np.int64)
    R = np.array(sorted(window.residues), dtype=np.int64).reshape(-1, d)
    keep = np.ones(len(cands), dtype=bool)
    step = max(1, _CHUNK // max(len(cands), 1))
    for start in range(0, len(R), step):
        block = R[start:start + step]
        keep &= np.all(_small(block @ cands.T, q, 4), axis=0)
    pts = sorted({tuple(Fraction(int(v), q) for v in row) for row in cands[keep]})
    n = len(orders)
    if n and len(pts) > ((1 << (m + 2)) * M + 1) ** n:
        raise ArithmeticError("hull exceeds the finiteness bound")
    return QuasiHull(E, m, tuple(pts), bound, orders, True)


def bounded_quasi_hull(generators: Sequence[TorusPoint], words: Sequence[Sequence[int]],
                       m: int, budget: int = 64) -> QuasiHull:
    """Semidecided q_m(E) for E given as integer words in free generators.

    Candidates sum nu_j g_j with |nu_j| <= 2**(m+1) M; a candidate is dropped
    only when a window member phi (searched up to ``budget`` members) shows
    ||phi(x)|| > 1/4.  Kept candidates are therefore a superset of q_m(E)
    inside the box and the result is flagged incomplete.
    """
    gens = [tuple(g) for g in generators]
    d = len(gens[0])
    E = tuple(_word_point(gens, w, d) for w in words)
    window = char_window(E, m)
    M = max((abs(c) for w in words for c in w), default=1) or 1
    bound = (1 << (m + 1)) * M
    members = list(window.members(limit=budget))
    kept = []
    for nu in itertools.product(range(-bound, bound + 1), repeat=len(gens)):
        x = _word_point(gens, nu, d)
        if any(norm_cmp(eval_char(phi, x), Fraction(1, 4)) > 0 for phi in members):
            continue
        kept.append(x)
    uniq = []
    for x in kept:
        if x not in uniq:
            uniq.append(x)
    return QuasiHull(E, m, tuple(uniq), bound, (), False)


def _word_point(gens, word, d):
    acc = [Fraction(0)] * d
    for k, g in zip(word, gens):
        for i in range(d):
            acc[i] = acc[i] + g[i] * k
    return tuple(circle(c) for c in acc)
