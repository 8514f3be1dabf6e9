"""Increasing chains of closed subgroups F_0 <= F_1 <= ...: the finite-index
condition, the partition B_n = B cap F_n^perp minus F_{n+1}^perp, and an
explicit point x = sum y_k that no leveled B can exclude when the indices
are infinite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .charset import CharSet
from .lattice import (ClosedSubgroup, closure, lattice_contains, subgroup_from_perp)
from .torus import (SUP, WEIGHTED, Character, Metric, TorusPoint, circle, eval_char,
                    format_character, format_circle, format_point, norm, parse_character,
                    parse_point)

INF = math.inf
Pattern = Tuple[Union[str, int], ...]   # per coordinate: "T" or k for (1/k)Z/Z


class ChainError(ValueError):
    pass


def _pattern_perp(pattern: Pattern, L: int) -> List[Character]:
    perp = []
    for c, s in enumerate(pattern):
        if s != "T":
            perp.append(tuple(int(s) if i == c else 0 for i in range(L)))
    return perp


def _norm_pattern(pattern, L) -> Pattern:
    out = []
    for s in pattern:
        if isinstance(s, str) and s.upper() == "T":
            out.append("T")
        else:
            k = int(s)
            if k == 0:
                k = 1
            if k < 0:
                raise ChainError("pattern entries are 'T' or positive integers")
            out.append(k)
    if len(out) > L:
        raise ChainError(f"pattern longer than the truncation {L}")
    return tuple(out + [1] * (L - len(out)))


@dataclass(frozen=True)
class ChainSpec:
    """F_0 <= F_1 <= ... inside T^d, a truncated T^omega, or a product of
    cyclic groups (embedded in T^r as prod (1/m_i)Z/Z).

    Each stage is a :class:`ClosedSubgroup`; ``patterns`` keeps the
    coordinate-product description when one was given (needed for exact
    point-to-subgroup distances).
    """

    ambient: str
    dim: int
    stages: Tuple[ClosedSubgroup, ...]
    patterns: Tuple[Optional[Pattern], ...] = ()
    factors: Tuple[int, ...] = ()
    strict: Tuple[bool, ...] = ()

    def __post_init__(self):
        if self.ambient not in ("torus", "omega", "cyclic"):
            raise ChainError(f"unsupported ambient group {self.ambient!r}")
        for n in range(len(self.stages) - 1):
            if not contains(self.stages[n + 1], self.stages[n]):
                raise ChainError(f"F_{n} is not contained in F_{n + 1}")
        for n, s in enumerate(self.strict):
            if s and n + 1 < len(self.stages) and index(self.stages[n], self.stages[n + 1]) == 1:
                raise ChainError(f"F_{n} = F_{n + 1} although claimed strict")

    @property
    def metric(self) -> Metric:
        return WEIGHTED if self.ambient == "omega" else SUP

    def __len__(self):
        return len(self.stages)

    @classmethod
    def from_json(cls, obj: dict) -> "ChainSpec":
        if "stages" not in obj:
            raise KeyError("stages")
        ambient = obj.get("ambient", "torus")
        factors = tuple(int(m) for m in obj.get("factors", ()))
        if ambient == "omega":
            L = int(obj.get("truncation", obj.get("dim", 0)))
        elif ambient == "cyclic":
            L = len(factors)
        else:
            L = int(obj.get("dim", 1))
        if L < 1:
            raise KeyError("truncation")
        stages, patterns = [], []
        for i, st in enumerate(obj["stages"]):
            if isinstance(st, list):
                st = {"pattern": st}
            if "pattern" in st:
                p = _norm_pattern(st["pattern"], L)
                stages.append(subgroup_from_perp(_pattern_perp(p, L), L))
                patterns.append(p)
            elif "generators" in st:
                gens = [parse_point(g) for g in st["generators"]]
                gens = [g if len(g) == L else None for g in gens]
                if any(g is None for g in gens):
                    raise ChainError(f"stages[{i}].generators: wrong dimension")
                if ambient == "cyclic":
                    for g in gens:
                        for c, m in zip(g, factors):
                            if (c * m).denominator != 1:
                                raise ChainError(f"stages[{i}]: {format_point(g)} not in the group")
                stages.append(closure(gens, L) if gens else subgroup_from_perp(
                    _pattern_perp((1,) * L, L), L))
                patterns.append(None)
            elif "perp" in st:
                perp = [parse_character(p) for p in st["perp"]]
                perp = [p if isinstance(p, tuple) else (p,) for p in perp]
                stages.append(subgroup_from_perp(perp, L))
                patterns.append(None)
            else:
                raise KeyError(f"stages[{i}]")
        strict = tuple(bool(s) for s in obj.get("strict", ()))
        return cls(ambient, L, tuple(stages), tuple(patterns), factors, strict)


def pattern_chain(patterns: Sequence[Sequence], truncation: int, ambient: str = "omega") -> ChainSpec:
    pats = [_norm_pattern(p, truncation) for p in patterns]
    stages = tuple(subgroup_from_perp(_pattern_perp(p, truncation), truncation) for p in pats)
    return ChainSpec(ambient, truncation, stages, tuple(pats))


def generator_chain(stages: Sequence[Sequence[TorusPoint]], dim: int = 1) -> ChainSpec:
    subs = tuple(closure([tuple(g) for g in gens], dim) if gens else
                 subgroup_from_perp(_pattern_perp((1,) * dim, dim), dim) for gens in stages)
    return ChainSpec("torus", dim, subs, (None,) * len(subs))


def contains(big: ClosedSubgroup, small: ClosedSubgroup) -> bool:
    """small <= big, i.e. big^perp inside small^perp."""
    return all(lattice_contains(small.perp, v) for v in big.perp)


def index(small: ClosedSubgroup, big: ClosedSubgroup):
    """|big : small| (math.inf when the torus rank grows)."""
    if big.torus_rank > small.torus_rank:
        return INF
    q, r = divmod(big.components, small.components)
    if r:
        raise ChainError("component counts do not divide")
    return q


def restrict_character(phi: Character, N: ClosedSubgroup):
    """phi restricted to N in its normalized coordinates (finite, torus parts)."""
    return N.restrict(tuple(phi))


# -- finite-index condition ------------------------------------------------

@dataclass(frozen=True)
class ConditionC:
    holds: bool
    m: Optional[int]
    indices: Tuple[object, ...]
    metrizable: bool = True
    reason: str = ""

    def to_json(self) -> dict:
        return {"holds": self.holds, "m": self.m,
                "indices": ["inf" if i == INF else i for i in self.indices],
                "metrizable": self.metrizable, "reason": self.reason}


def check_condition_c(chain: ChainSpec) -> ConditionC:
    """Least m after which every index |F_{n+1}:F_n| is finite, judged on the
    given prefix (the chain is taken to continue as its last step does).

    The quotients X/F_m are metrizable for every supported ambient group.
    """
    idx = tuple(index(chain.stages[n], chain.stages[n + 1]) for n in range(len(chain) - 1))
    if not idx:
        return ConditionC(True, 0, idx)
    if idx[-1] == INF:
        first = next(n for n in range(len(idx) - 1, -1, -1)
                     if n == 0 or idx[n - 1] != INF)
        return ConditionC(False, None, idx, True,
                          f"|F_{first + 1}:F_{first}| is infinite")
    m = len(idx)
    while m > 0 and idx[m - 1] != INF:
        m -= 1
    return ConditionC(True, m, idx)


# -- partition of B ---------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    levels: Tuple[Tuple[Character, ...], ...]   # B_n for n < len(chain) - 1
    outside: Tuple[Character, ...]              # not annihilating F_0
    beyond: Tuple[Character, ...]               # annihilating every stage given
    violations: Tuple[Tuple[int, ...], ...]     # [n][k]: non-annihilators of F_n in the first k+1 levels of B
    verdicts: Tuple[str, ...]

    def to_json(self) -> dict:
        return {"B": [[format_character(p) for p in lv] for lv in self.levels],
                "outside": [format_character(p) for p in self.outside],
                "beyond": [format_character(p) for p in self.beyond],
                "violations": [list(v) for v in self.violations],
                "verdicts": list(self.verdicts)}


def _annihilates(N: ClosedSubgroup, phi) -> bool:
    return lattice_contains(N.perp, tuple(phi))


def _pad(phi, L):
    phi = tuple(phi)
    if len(phi) > L:
        if any(phi[L:]):
            raise ChainError(f"character {phi} reaches past the truncation")
        return phi[:L]
    return phi + (0,) * (L - len(phi))


def partition_B(B: CharSet, chain: ChainSpec) -> Partition:
    """B_n = B cap F_n^perp minus F_{n+1}^perp, with violation counters.

    A subgroup F_n can only sit inside C_B if all but finitely many phi in B
    annihilate it; the counter for F_n records the non-annihilators among
    the first k levels of B.  "growing" means the last level added one.
    """
    S = len(chain)
    levels = [[] for _ in range(max(S - 1, 0))]
    outside, beyond = [], []
    counts = [0] * S
    violations = [[] for _ in range(S)]
    for level in B.levels:
        for phi in level:
            phi = _pad(phi, chain.dim)
            ann = [_annihilates(N, phi) for N in chain.stages]
            for n in range(S):
                if not ann[n]:
                    counts[n] += 1
            if not ann[0]:
                outside.append(phi)
            elif all(ann):
                beyond.append(phi)
            else:
                n = next(i for i in range(S - 1) if ann[i] and not ann[i + 1])
                levels[n].append(phi)
        for n in range(S):
            violations[n].append(counts[n])
    verdicts = []
    for n in range(S):
        v = violations[n]
        if len(v) >= 2 and v[-1] > v[-2]:
            verdicts.append("growing")
        else:
            verdicts.append("bounded-so-far")
    return Partition(tuple(tuple(l) for l in levels), tuple(outside), tuple(beyond),
                     tuple(tuple(v) for v in violations), tuple(verdicts))


# -- the refutation witness -------------------------------------------------

def _coord_dist(t: Fraction, s) -> Fraction:
    """Distance from t in T to the coordinate set s ("T" or (1/k)Z/Z)."""
    if s == "T":
        return Fraction(0)
    k = int(s)
    r = circle(t * k)
    return min(r, 1 - r) / k


def _weight(c: int, metric: Metric) -> Fraction:
    return Fraction(1, 1 << c) if metric.kind == "weighted" else Fraction(1)


def point_distance(x: TorusPoint, pattern: Pattern, metric: Metric) -> Fraction:
    """Exact d(x, F) for a coordinate-product F (both metrics separate)."""
    ds = [_weight(c, metric) * _coord_dist(t, s) for c, (t, s) in enumerate(zip(x, pattern))]
    if metric.kind == "weighted":
        return sum(ds, Fraction(0))
    return max(ds, default=Fraction(0))


@dataclass(frozen=True)
class Refutation:
    chain_stages: Tuple[int, ...]        # original indices of the working chain G_k
    patterns: Tuple[Pattern, ...]
    levels: Tuple[Tuple[Character, ...], ...]
    ys: Tuple[TorusPoint, ...]
    x: TorusPoint
    dist_y: Tuple[Fraction, ...]         # d(y_n, G_n)
    dist_x: Tuple[Fraction, ...]         # d(x_n, G_n), x_n = sum_{k >= n} y_k
    metric: Metric = WEIGHTED

    def to_json(self) -> dict:
        return {"x": [format_circle(c) for c in self.x],
                "y": [[format_circle(c) for c in y] for y in self.ys],
                "stages": list(self.chain_stages),
                "patterns": [list(p) for p in self.patterns],
                "B": [[format_character(p) for p in lv] for lv in self.levels],
                "d_y": [format_circle(v) for v in self.dist_y],
                "d_x": [format_circle(v) for v in self.dist_x],
                "metric": self.metric.kind}


def _working_chain(chain: ChainSpec) -> List[int]:
    """Stage indices with every consecutive index infinite, starting at the
    first stage of the trailing run of infinite indices."""
    cond = check_condition_c(chain)
    if cond.holds:
        raise ChainError("every later index is finite (the finite-index condition holds); "
                         "see check_condition_c")
    idx = cond.indices
    start = len(idx)
    while start > 0 and idx[start - 1] == INF:
        start -= 1
    work = [start]
    for n in range(start + 1, len(chain)):
        if index(chain.stages[work[-1]], chain.stages[n]) == INF:
            work.append(n)
    return work


def _scan_t(k_old, weight, limit, chars_c, n, max_den):
    """Smallest-denominator t = a/s (then smallest a) with t outside (1/k)Z,
    weight*||t|| <= limit and ||phi_c t|| <= 2**-n for the given coefficients."""
    tol = Fraction(1, 1 << n)
    for s in range(2, max_den + 1):
        if limit is not None:
            amax = math.floor(limit * s / weight)
            if amax < 1:
                continue
            cands = list(range(1, min(amax, s - 1) + 1))
            cands += [a for a in range(max(s - amax, amax + 1), s)]
        else:
            cands = range(1, s)
        for a in cands:
            if math.gcd(a, s) != 1:
                continue
            t = Fraction(a, s)
            if (t * k_old).denominator == 1:
                continue
            if all(min(circle(t * f), 1 - circle(t * f)) <= tol for f in chars_c):
                return t
    raise ChainError(f"no admissible y_{n} with denominator <= {max_den}")


def refutation_witness(chain: ChainSpec, B: CharSet, levels: Optional[int] = None,
                       max_den: int = 1 << 20) -> Refutation:
    """x = sum y_n with y_n in G_{n+1} minus G_n supported on one new coordinate,
    ||phi(y_n)|| <= 2**-n for phi in B_0..B_n and d(y_{n+1}, 0) <= d(y_n, G_n)/3.

    Needs coordinate-product stages.  The partition of B is taken against the
    working chain G (a re-indexing with all indices infinite); characters not
    annihilating G_0 join B_0.
    """
    work = _working_chain(chain)
    pats = [chain.patterns[i] if chain.patterns else None for i in work]
    if any(p is None for p in pats):
        raise ChainError("refutation needs coordinate-product stages")
    L = chain.dim
    metric = chain.metric
    G = ChainSpec(chain.ambient, L, tuple(chain.stages[i] for i in work), tuple(pats))
    part = partition_B(B, G)
    steps = len(work) - 1 if levels is None else min(levels, len(work) - 1)
    lv = [list(l) for l in part.levels[:steps]]
    if lv:
        lv[0] = list(part.outside) + lv[0]
    ys, dys = [], []
    active: List[Character] = []
    for n in range(steps):
        active.extend(lv[n])
        old, new = pats[n], pats[n + 1]
        c = next((i for i in range(L) if new[i] == "T" and old[i] != "T"), None)
        if c is None:
            raise ChainError(f"no new torus coordinate between G_{n} and G_{n + 1}")
        limit = dys[-1] / 3 if dys else None
        t = _scan_t(int(old[c]), _weight(c, metric), limit, [phi[c] for phi in active], n, max_den)
        y = tuple(t if i == c else Fraction(0) for i in range(L))
        ys.append(y)
        dys.append(point_distance(y, old, metric))
    x = tuple(circle(sum((y[i] for y in ys), Fraction(0))) for i in range(L))
    dxs = []
    for n in range(steps):
        xn = tuple(circle(sum((y[i] for y in ys[n:]), Fraction(0))) for i in range(L))
        dxs.append(point_distance(xn, pats[n], metric))
    return Refutation(tuple(work[:steps + 1]), tuple(pats[:steps + 1]),
                      tuple(tuple(l) for l in lv), tuple(ys), x, tuple(dys), tuple(dxs), metric)


@dataclass(frozen=True)
class RefutationCheck:
    ok: bool
    failures: Tuple[str, ...]


def verify_refutation(ref: Refutation) -> RefutationCheck:
    """Re-check both certificate families exactly, plus the construction's
    own inequalities (membership, contraction, geometric decay)."""
    bad = []
    m = ref.metric
    L = len(ref.x)
    steps = len(ref.ys)
    for n in range(steps):
        y = ref.ys[n]
        old, new = ref.patterns[n], ref.patterns[n + 1]
        if point_distance(y, new, m) != 0:
            bad.append(f"y_{n} not in G_{n + 1}")
        dy = point_distance(y, old, m)
        if dy != ref.dist_y[n] or dy <= 0:
            bad.append(f"d(y_{n}, G_{n}) wrong or zero")
        if n + 1 < steps and point_distance(ref.ys[n + 1], (1,) * L, m) * 3 > dy:
            bad.append(f"d(y_{n + 1}, 0) > d(y_{n}, G_{n})/3")
        for k in range(n + 1, steps):
            if point_distance(ref.ys[k], (1,) * L, m) * 3 ** (k - n) > dy:
                bad.append(f"decay fails between y_{n} and y_{k}")
        xn = tuple(circle(sum((yy[i] for yy in ref.ys[n:]), Fraction(0))) for i in range(L))
        dx = point_distance(xn, old, m)
        if dx != ref.dist_x[n] or not (2 * dx >= dy > 0):
            bad.append(f"d(x_{n}, G_{n}) < d(y_{n}, G_{n})/2")
        if point_distance(ref.x, old, m) != dx:
            bad.append(f"x and x_{n} differ modulo G_{n}")
    for n, level in enumerate(ref.levels):
        bound = Fraction(2, 1 << n)
        for phi in level:
            for k in range(n, steps):
                if norm(eval_char(phi, ref.ys[k])) > Fraction(1, 1 << k):
                    bad.append(f"||{format_character(phi)}(y_{k})|| > 2^-{k}")
            v = norm(eval_char(phi, ref.x))
            if v > bound:
                bad.append(f"||{format_character(phi)}(x)|| = {v} > 2^(1-{n})")
    x_sum = tuple(circle(sum((y[i] for y in ref.ys), Fraction(0))) for i in range(L))
    if x_sum != ref.x:
        bad.append("x is not the sum of the y_n")
    return RefutationCheck(not bad, tuple(bad))
