"""From a countable subgroup, given as a tower of finite stages, to a
characterizing set of characters with per-level covering certificates.

Per level n:  F_n = q_n(E_n), A_n = window of E_n at tolerance 2**-(n+2),
eps_n from the hull tower, and a finite B_n inside A_n such that every x at
distance >= eps_n from F_n has ||phi(x)|| > 1/4 for some phi in B_n.
Non-dense towers are handled inside the closure N and lifted back.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .charset import CharSet
from .lattice import (ClosedSubgroup, UnsupportedSubgroup, annihilator, canonical_sign,
                      closure, integer_kernel, lattice_shell, subgroup_from_perp)
from .quasiconvex import (CharWindow, bounded_quasi_hull, char_window, is_subgroup,
                          quasi_hull, tolerance)
from .torus import (QUARTER, SUP, Character, Metric, Quadratic, TorusPoint, circle,
                    eval_char, format_character, format_circle, format_point, metric_d,
                    norm, norm_cmp, parse_character, parse_circle, parse_point,
                    point_is_rational, zero)

THREE_QUARTERS = Fraction(3, 4)


class CoveringFailure(RuntimeError):
    """No cover found within budget; ``uncovered`` lists what is left."""

    def __init__(self, message, uncovered=()):
        super().__init__(message)
        self.uncovered = list(uncovered)


class CertificateError(ValueError):
    pass


# -- towers -----------------------------------------------------------------

def _normalize_stage(points, d) -> Tuple[TorusPoint, ...]:
    pts = {zero(d)}
    for x in points:
        x = tuple(circle(c) for c in x)
        if len(x) != d:
            raise ValueError("stage points of mixed dimension")
        pts.add(x)
        pts.add(tuple(circle(-c) for c in x))
    return tuple(sorted(pts, key=_sort_key))


def _sort_key(x):
    return tuple(float(c) for c in x), tuple(str(c) for c in x)


@dataclass(frozen=True)
class Tower:
    """E_0 <= E_1 <= ... with each stage symmetric and containing 0.

    ``finite`` marks towers whose union is the finite group closure(last stage).
    ``perp`` is a basis of the annihilator of the union (empty: dense).
    """

    stages: Tuple[Tuple[TorusPoint, ...], ...]
    dim: int = 1
    finite: bool = False
    perp: Tuple[Character, ...] = ()
    generators: Tuple[TorusPoint, ...] = ()
    words: Tuple[Tuple[Tuple[int, ...], ...], ...] = ()

    def __post_init__(self):
        stages = tuple(_normalize_stage(s, self.dim) for s in self.stages)
        for n in range(1, len(stages)):
            prev = set(stages[n - 1])
            if not prev <= set(stages[n]):
                raise ValueError(f"stage {n - 1} is not contained in stage {n}")
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "perp", tuple(tuple(p) for p in self.perp))

    @property
    def rational(self) -> bool:
        return all(point_is_rational(x) for s in self.stages for x in s)

    def to_json(self) -> dict:
        out = {"dim": self.dim, "stages": [[format_point(x) for x in s] for s in self.stages]}
        if self.finite:
            out["finite"] = True
        if self.perp:
            out["perp"] = [format_character(p) for p in self.perp]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Tower":
        if "stages" not in obj and "generators" not in obj:
            raise KeyError("stages")
        d = int(obj.get("dim", 1))
        perp = obj.get("perp")
        perp = None if perp is None else [parse_character(p) for p in perp]
        if "stages" in obj:
            stages = [[_point(x, d) for x in s] for s in obj["stages"]]
            return build_tower(stages=stages, dim=d, finite=bool(obj.get("finite", False)),
                               perp=perp)
        gens = [_point(x, d) for x in obj["generators"]]
        return build_tower(gens, levels=int(obj.get("levels", 8)), dim=d,
                           refine=obj.get("refine"), perp=perp,
                           dependency=obj.get("dependency"))


def _point(x, d):
    p = parse_point(x)
    if len(p) != d:
        raise ValueError(f"point {x!r} is not of dimension {d}")
    return p


def _word_points(gens, n, d):
    s = len(gens)
    words, pts = [], []
    for w in itertools.product(range(-n, n + 1), repeat=s):
        if sum(abs(k) for k in w) > n:
            continue
        acc = [Fraction(0)] * d
        for k, g in zip(w, gens):
            if k:
                for i in range(d):
                    acc[i] = acc[i] + g[i] * k
        words.append(w)
        pts.append(tuple(circle(c) for c in acc))
    return words, pts


def build_tower(generators: Optional[Sequence[TorusPoint]] = None, levels: int = 8,
                stages: Optional[Sequence[Sequence[TorusPoint]]] = None, dim: Optional[int] = None,
                refine: Optional[int] = None, finite: Optional[bool] = None,
                perp: Optional[Sequence[Character]] = None,
                dependency: Optional[Sequence[Character]] = None) -> Tower:
    """Build a tower.

    * ``stages``: explicit, checked for inclusion after normalization.
    * ``refine=k``: stage n is the subgroup generated by g/k**n for g in
      ``generators`` (rational only); e.g. 1/2 with k = 2 gives the dyadic
      tower <1/2>, <1/4>, ...
    * otherwise stage n holds all words of length <= n in the generators.

    The annihilator of the union is computed where possible: for finite
    unions it is the annihilator of the group; for refinement towers it is the
    integer kernel of the generator numerators; for irrational generators it
    is the declared ``dependency`` lattice (default: none, i.e. dense).
    """
    if stages is not None:
        stages = [[tuple(x) for x in s] for s in stages]
        d = dim if dim is not None else len(next(x for s in stages for x in s))
        fin = bool(finite)
        if perp is None and fin:
            perp = annihilator([x for x in stages[-1]], d)
        return Tower(tuple(stages), d, fin, tuple(perp or ()))
    if not generators:
        raise ValueError("need generators or stages")
    gens = [tuple(circle(c) for c in g) for g in generators]
    d = len(gens[0])
    if any(len(g) != d for g in gens):
        raise ValueError("generators of mixed dimension")
    rational = all(point_is_rational(g) for g in gens)
    if refine is not None:
        if not rational:
            raise ValueError("refinement towers need rational generators")
        k = int(refine)
        if k < 2:
            raise ValueError("refinement factor must be >= 2")
        out = []
        for n in range(levels + 1):
            sub = closure([tuple(c / k ** n for c in g) for g in gens], d)
            out.append(sub.elements())
        if perp is None:
            q = math.lcm(*(c.denominator for g in gens for c in g))
            perp = integer_kernel([[int(c * q) for c in g] for g in gens], d)
            if len(perp) == d:
                perp = [tuple(r) for r in perp]
        return Tower(tuple(out), d, False, tuple(perp), tuple(gens))
    words, out = [], []
    for n in range(levels + 1):
        w, pts = _word_points(gens, n, d)
        words.append(tuple(w))
        out.append(pts)
    if rational:
        fin = True if finite is None else finite
        if perp is None:
            perp = annihilator(gens, d)
    else:
        fin = False
        if perp is None:
            perp = closure(gens, d, dependency=dependency or []).perp
    return Tower(tuple(out), d, fin, tuple(perp), tuple(gens), tuple(words))


# -- epsilon schedule -------------------------------------------------------

@dataclass(frozen=True)
class EpsilonSchedule:
    eps: Tuple[Fraction, ...]
    deltas: Tuple[Optional[Fraction], ...]

    def __getitem__(self, n):
        return self.eps[n]

    def __len__(self):
        return len(self.eps)


def min_distance(F: Sequence[TorusPoint], metric: Metric = SUP):
    """Least distance between two distinct points of F (None for |F| < 2)."""
    F = list(F)
    if len(F) < 2:
        return None
    if len(set(F)) < len(F):
        raise ValueError("hull with duplicate points")
    d = len(F[0])
    if d == 1:
        xs = sorted(x[0] for x in F)
        gaps = [b - a for a, b in zip(xs, xs[1:])] + [xs[0] + 1 - xs[-1]]
        best = gaps[0]
        for g in gaps[1:]:
            if g < best:
                best = g
        return best
    if all(point_is_rational(x) for x in F):
        if is_subgroup(F):
            return min(metric_d(x, zero(d), metric) for x in F if any(x))
        if metric.kind == "sup":
            q = math.lcm(*(c.denominator for x in F for c in x))
            A = np.array([[int(c * q) for c in x] for x in F], dtype=object)
            best = None
            for i in range(len(F)):
                diff = (A[i + 1:] - A[i]) % q
                nd = np.minimum(diff, q - diff).max(axis=1) if len(diff) else []
                for v in nd:
                    if best is None or v < best:
                        best = v
            return Fraction(int(best), q)
    best = None
    for x, y in itertools.combinations(F, 2):
        v = metric_d(x, y, metric)
        v = v.lo if hasattr(v, "lo") else v
        if best is None or v < best:
            best = v
    return best


def _rational_below(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    lo, _ = v.enclose(64) if isinstance(v, Quadratic) else (v, None)
    return lo


def epsilons(hulls: Sequence[Sequence[TorusPoint]], metric: Metric = SUP) -> EpsilonSchedule:
    """eps_n = min(eps_{n-1}/2, Delta_{n+1}/4), eps_{-1} = 1/4.

    Delta_{n+1} is the least distance inside F_{n+1}; a singleton hull makes
    it vacuous.  Irrational distances are replaced by a rational lower bound,
    which keeps 2 eps_n < Delta_{n+1}.
    """
    eps, deltas = [], []
    prev = Fraction(1, 4)
    for n in range(len(hulls) - 1):
        delta = min_distance(hulls[n + 1], metric)
        e = prev / 2
        if delta is not None:
            bound = _rational_below(delta * Fraction(1, 4))
            if bound < e:
                e = bound
        if e <= 0:
            raise ValueError("degenerate hull distance")
        eps.append(e)
        deltas.append(delta)
        prev = e
    return EpsilonSchedule(tuple(eps), tuple(deltas))


# -- covering in dimension 1 ------------------------------------------------

@dataclass(frozen=True)
class Budget:
    pool: int = 16          # initial candidate pool
    max_pool: int = 4096    # pool doubling stops here
    max_coef: int = 10 ** 6  # largest |coefficient| searched in a window
    max_depth: int = 14     # quadtree depth in dimension 2
    max_cells: int = 200000


def _balls_1d(F, eps):
    """Open arcs (lo, hi) inside the eps-neighbourhood of F, rational ends."""
    out = []
    for (f,) in F:
        if isinstance(f, Fraction):
            out.append((f - eps, f + eps))
        else:
            lo, hi = f.enclose(64) if isinstance(f, Quadratic) else (f.lo, f.hi)
            if hi - lo >= eps:
                raise CoveringFailure("point enclosure wider than eps")
            out.append((hi - eps, lo + eps))
    return out


def complement_arcs(balls) -> List[Tuple[Fraction, Fraction]]:
    """Closed arcs of T not covered by the open arcs ``balls``.

    Arcs are (lo, hi) on the real line with 0 <= lo < 1 and lo <= hi < lo + 1.
    """
    if not balls:
        return [(Fraction(0), Fraction(1))]
    iv = []
    for a, b in balls:
        if b - a > 1:
            return []
        k = math.floor(a)
        iv.append((a - k, b - k))
    iv.sort()
    merged = [list(iv[0])]
    for a, b in iv[1:]:
        if a < merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    while len(merged) > 1 and merged[-1][1] > merged[0][0] + 1:
        first = merged.pop(0)
        merged[-1][1] = max(merged[-1][1], first[1] + 1)
    gaps = []
    for (a1, b1), (a2, b2) in zip(merged, merged[1:]):
        gaps.append((b1, a2))
    a0, b_last = merged[0][0], merged[-1][1]
    if b_last - (merged[-1][0]) > 1 and len(merged) == 1:
        return []
    if b_last <= a0 + 1:
        gaps.append((b_last, a0 + 1))
    out = []
    for lo, hi in gaps:
        k = math.floor(lo)
        out.append((lo - k, hi - k))
    return sorted(out)


def _good_component(a: int, p: Fraction):
    """The open component of {||a x|| > 1/4} holding p, or None (a > 0)."""
    t = a * p
    j = math.floor(t)
    r = t - j
    if QUARTER < r < THREE_QUARTERS:
        return (j + QUARTER) / a, (j + THREE_QUARTERS) / a
    return None


def _good_measure_units(T: np.ndarray, Q4: int) -> np.ndarray:
    """4Q * M(t) for t = T/(4Q), M(t) = measure of {s < t : frac(s) in (1/4, 3/4)}."""
    fl = T // Q4
    r = T - fl * Q4
    q = Q4 // 4
    return fl * (2 * q) + np.clip(r - q, 0, 2 * q)


def _subtract(arcs, a):
    """arcs minus the open set {||a x|| > 1/4}."""
    out = []
    for lo, hi in arcs:
        j_min = math.floor(a * lo - THREE_QUARTERS) + 1
        j_max = math.ceil(a * hi - QUARTER) - 1
        cur = lo
        for j in range(j_min, j_max + 1):
            ol, oh = (j + QUARTER) / a, (j + THREE_QUARTERS) / a
            if ol >= cur:
                out.append((cur, min(ol, hi)))
            if oh > cur:
                cur = oh
            if cur > hi:
                break
        if cur <= hi:
            out.append((cur, hi))
    return out


def _gains(arcs, pool, skip):
    """(measure numerator, point count) per candidate, exact integers."""
    if not arcs:
        return [(0, 0)] * len(pool)
    Q = math.lcm(*(x.denominator for arc in arcs for x in arc))
    lo = np.array([int(a * Q) for a, _ in arcs], dtype=object)
    hi = np.array([int(b * Q) for _, b in arcs], dtype=object)
    points = lo == hi
    big = max(abs(p[0]) for p in pool) * Q * 16 < 2 ** 62
    if big:
        lo, hi = lo.astype(np.int64), hi.astype(np.int64)
    L = math.lcm(*(abs(p[0]) for p in pool))
    out = []
    for phi in pool:
        a = abs(phi[0])
        if phi in skip or a == 0:
            out.append((-1, -1))
            continue
        Q4 = 4 * Q
        m = _good_measure_units(4 * a * hi, Q4) - _good_measure_units(4 * a * lo, Q4)
        meas = int(m.sum()) * (L // a)  # common scale across candidates
        if points.any():
            r = (a * lo[points]) % Q
            cnt = int(((4 * r > Q) & (4 * r < 3 * Q)).sum())
        else:
            cnt = 0
        out.append((meas, cnt))
    return out


def _chain_pieces(lo, hi, chosen):
    """Split [lo, hi] into closed pieces, each inside one good component."""
    def best_at(p):
        best = None
        for phi in chosen:
            comp = _good_component(abs(phi[0]), p)
            if comp is not None and (best is None or comp[1] > best[1][1]):
                best = (phi, comp)
        return best

    pieces = []
    pos = lo
    cur = best_at(pos)
    if cur is None:
        raise CoveringFailure(f"point {pos} uncovered", [(pos, pos)])
    while True:
        phi, (a, b) = cur
        if b > hi:
            pieces.append((pos, hi, phi))
            return pieces
        nxt = best_at(b)
        if nxt is None:
            raise CoveringFailure(f"point {b} uncovered", [(b, b)])
        mid = (max(nxt[1][0], pos) + b) / 2
        pieces.append((pos, mid, phi))
        pos = mid
        cur = nxt


@dataclass(frozen=True)
class CoveringCertificate:
    """Evidence that T^d minus the open eps-neighbourhood of F is covered by
    the good sets {||phi x|| > 1/4}, phi in B, with B inside the window."""

    n: int
    dim: int
    E: Tuple[TorusPoint, ...]
    F: Tuple[TorusPoint, ...]
    eps: Fraction
    B: Tuple[Character, ...]
    balls: Tuple = ()       # d = 1: open arcs (lo, hi)
    arcs: Tuple = ()        # d = 1: closed pieces (lo, hi, phi)
    cells: Tuple = ()       # d = 2: DFS leaves (depth, kind, ref)

    def to_json(self) -> dict:
        out = {"n": self.n, "dim": self.dim,
               "E": [format_point(x) for x in self.E],
               "F": [format_point(x) for x in self.F],
               "eps": format_circle(self.eps),
               "B": [format_character(p) for p in self.B]}
        if self.dim == 1:
            out["balls"] = [[format_circle(a), format_circle(b)] for a, b in self.balls]
            out["arcs"] = [[format_circle(a), format_circle(b), format_character(p)]
                           for a, b, p in self.arcs]
        else:
            out["cells"] = [[dep, kind, ref if kind == "ball" else list(ref)]
                            for dep, kind, ref in self.cells]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "CoveringCertificate":
        for key in ("n", "F", "eps", "B"):
            if key not in obj:
                raise KeyError(key)
        d = int(obj.get("dim", 1))
        E = tuple(parse_point(x) for x in obj.get("E", []))
        F = tuple(parse_point(x) for x in obj["F"])
        B = tuple(parse_character(p) for p in obj["B"])
        B = tuple(p if isinstance(p, tuple) else (p,) for p in B)
        eps = parse_circle(obj["eps"], reduce=False)
        if d == 1:
            balls = tuple((parse_circle(a, False), parse_circle(b, False))
                          for a, b in obj.get("balls", []))
            arcs = tuple((parse_circle(a, False), parse_circle(b, False),
                          _as_char(parse_character(p))) for a, b, p in obj["arcs"])
            return cls(int(obj["n"]), 1, E, F, eps, B, balls, arcs)
        cells = tuple((int(dep), kind, ref if kind == "ball" else tuple(ref))
                      for dep, kind, ref in obj["cells"])
        return cls(int(obj["n"]), d, E, F, eps, B, cells=cells)


def _as_char(p):
    return p if isinstance(p, tuple) else (p,)


def covering(F: Sequence[TorusPoint], eps: Fraction, window: CharWindow,
             budget: Budget = Budget(), n: int = 0) -> CoveringCertificate:
    """Greedy finite cover of the closed complement of N(F, eps) by good sets.

    Candidates come from the window in ascending max-coefficient order; each
    round picks the candidate covering most uncovered measure (then most
    leftover endpoints), ties to the earlier candidate.
    """
    F = tuple(tuple(x) for x in F)
    d = len(F[0]) if F else window.dim
    if d == 1:
        return _covering_1d(F, eps, window, budget, n)
    if d == 2:
        return _covering_2d(F, eps, window, budget, n)
    raise ValueError("coverings are implemented for d = 1, 2")


def _pool(window, size, budget):
    return list(window.members(limit=size, max_coef=budget.max_coef))


def _covering_1d(F, eps, window, budget, n):
    balls = _balls_1d(F, eps)
    comp = complement_arcs(balls)
    remaining = list(comp)
    chosen: List[Character] = []
    size = budget.pool
    pool = _pool(window, size, budget)
    while remaining:
        gains = _gains(remaining, pool, set(chosen))
        best, best_gain = None, (0, 0)
        for phi, g in zip(pool, gains):
            if g > best_gain:
                best, best_gain = phi, g
        if best is None:
            if size >= budget.max_pool:
                raise CoveringFailure(f"level {n}: no cover within a pool of {size}", remaining)
            size *= 2
            bigger = _pool(window, size, budget)
            if len(bigger) == len(pool):
                raise CoveringFailure(f"level {n}: window exhausted at max_coef", remaining)
            pool = bigger
            continue
        chosen.append(best)
        remaining = _subtract(remaining, abs(best[0]))
    order = {phi: i for i, phi in enumerate(pool)}
    B = tuple(sorted(chosen, key=lambda p: order[p]))
    pieces = []
    for lo, hi in comp:
        pieces.extend(_chain_pieces(lo, hi, B))
    return CoveringCertificate(n, 1, tuple(window.E), F, eps, B, tuple(balls), tuple(pieces))


# -- covering in dimension 2 ------------------------------------------------

def _in_open_box(c0, h, f, eps):
    k = math.floor(f - eps - c0) + 1
    return c0 + k + h < f + eps


def _cell_in_ball(x0, y0, h, F, eps):
    for i, f in enumerate(F):
        if _in_open_box(x0, h, f[0], eps) and _in_open_box(y0, h, f[1], eps):
            return i
    return None


def _cell_good(x0, y0, h, phi):
    a, b = phi
    lo = a * x0 + b * y0 + h * (min(a, 0) + min(b, 0))
    hi = lo + h * (abs(a) + abs(b))
    k = math.floor(lo)
    return lo - k > QUARTER and hi - k < THREE_QUARTERS


def _children(x0, y0, h):
    g = h / 2
    return [(x0, y0), (x0 + g, y0), (x0, y0 + g), (x0 + g, y0 + g)]


def _covering_2d(F, eps, window, budget, n):
    if not all(point_is_rational(x) for x in F):
        raise UnsupportedSubgroup("dimension-2 coverings need rational hulls")
    chosen: List[Character] = []
    size = budget.pool
    pool = _pool(window, size, budget)
    work = 2
    pending = []   # (x0, y0, depth)

    def settle(cells):
        out = []
        stack = list(cells)
        while stack:
            x0, y0, dep = stack.pop()
            h = Fraction(1, 1 << dep)
            if _cell_in_ball(x0, y0, h, F, eps) is not None:
                continue
            if any(_cell_good(x0, y0, h, p) for p in chosen):
                continue
            if dep < work:
                stack.extend((cx, cy, dep + 1) for cx, cy in _children(x0, y0, h))
            else:
                out.append((x0, y0, dep))
            if len(out) > budget.max_cells:
                raise CoveringFailure(f"level {n}: too many cells", out)
        return out

    pending = settle([(Fraction(0), Fraction(0), 0)])
    while pending:
        best, best_gain = None, 0
        for phi in pool:
            if phi in chosen:
                continue
            g = sum(Fraction(1, 1 << (2 * dep)) for x0, y0, dep in pending
                    if _cell_good(x0, y0, Fraction(1, 1 << dep), phi))
            if g > best_gain:
                best, best_gain = phi, g
        if best is not None:
            chosen.append(best)
            pending = settle(pending)
            continue
        if work < budget.max_depth:
            work += 1
            pending = settle([(cx, cy, dep + 1) for x0, y0, dep in pending
                              for cx, cy in _children(x0, y0, Fraction(1, 1 << dep))])
            continue
        if size >= budget.max_pool:
            raise CoveringFailure(f"level {n}: no cover at depth {work}", pending)
        size *= 2
        bigger = _pool(window, size, budget)
        if len(bigger) == len(pool):
            raise CoveringFailure(f"level {n}: window exhausted", pending)
        pool = bigger
    order = {phi: i for i, phi in enumerate(pool)}
    B = tuple(sorted(chosen, key=lambda p: order[p]))
    leaves = []

    def emit(x0, y0, dep):
        h = Fraction(1, 1 << dep)
        i = _cell_in_ball(x0, y0, h, F, eps)
        if i is not None:
            leaves.append((dep, "ball", i))
            return
        for p in B:
            if _cell_good(x0, y0, h, p):
                leaves.append((dep, "phi", p))
                return
        if dep >= work:
            raise CoveringFailure(f"level {n}: cell left at depth {dep}", [(x0, y0, dep)])
        for cx, cy in _children(x0, y0, h):
            emit(cx, cy, dep + 1)

    emit(Fraction(0), Fraction(0), 0)
    return CoveringCertificate(n, 2, tuple(window.E), F, eps, B, cells=tuple(leaves))


# -- certificate checking ---------------------------------------------------

def verify_certificate(cert: CoveringCertificate, deep: bool = False) -> None:
    """Re-check a certificate from scratch; raise CertificateError on failure.

    Checks: B inside the window of E at level n (straight from the definition),
    E inside F, the ball list inside the true eps-neighbourhood of F, and
    exact coverage of the complement.  ``deep`` also recomputes the hull.
    """
    tol = tolerance(cert.n)
    for phi in cert.B:
        if len(phi) != cert.dim:
            raise CertificateError(f"character {phi} has wrong dimension")
        for e in cert.E:
            if norm_cmp(eval_char(phi, e), tol) > 0:
                raise CertificateError(f"phi={format_character(phi)} is not in the level-{cert.n} "
                                       f"window: ||phi({format_point(e)})|| > {tol}")
    Fset = set(cert.F)
    for e in cert.E:
        if e not in Fset:
            raise CertificateError(f"E point {format_point(e)} missing from F")
    if deep and cert.E and all(point_is_rational(e) for e in cert.E):
        hull = quasi_hull(cert.E, cert.n)
        if set(hull.points) != Fset:
            raise CertificateError("F is not the quasi-convex hull of E")
    if cert.eps <= 0:
        raise CertificateError("eps must be positive")
    if cert.dim == 1:
        _verify_1d(cert)
    elif cert.dim == 2:
        _verify_2d(cert)
    else:
        raise CertificateError("unsupported dimension")


def verify_certificates(certs: Sequence[CoveringCertificate], deep: bool = False) -> None:
    """Check each certificate, then the links between consecutive levels:
    levels numbered consecutively, eps at least halving, E growing."""
    for c in certs:
        verify_certificate(c, deep)
        # the schedule starts at 1/4 and at least halves each level
        if c.eps > Fraction(1, 1 << (c.n + 3)):
            raise CertificateError(f"level {c.n}: eps={format_circle(c.eps)} exceeds 2^-{c.n + 3}")
    for a, b in zip(certs, certs[1:]):
        if b.n != a.n + 1:
            raise CertificateError(f"level {b.n} follows level {a.n}")
        if 2 * b.eps > a.eps:
            raise CertificateError(f"level {b.n}: eps does not halve")
        if not set(a.E) <= set(b.E):
            raise CertificateError(f"level {b.n}: stage does not contain stage {a.n}")


def _verify_1d(cert):
    fs = sorted(circle(f[0]) for f in cert.F)
    for i, (a, b) in enumerate(cert.balls):
        # if any point of F works, so does the nearest one on that side
        j = bisect.bisect_right(fs, circle((a + b) / 2))
        near = {fs[j - 1], fs[j % len(fs)]} if fs else set()
        if not any(_inside_ball(a, b, f, cert.eps) for f in near):
            raise CertificateError(f"ball #{i} ({format_circle(a)},{format_circle(b)}) "
                                   f"is not inside the eps-neighbourhood of F")
    Bset = set(cert.B)
    for i, (lo, hi, phi) in enumerate(cert.arcs):
        if phi not in Bset:
            raise CertificateError(f"piece #{i} uses phi={format_character(phi)} outside B")
        if lo > hi:
            raise CertificateError(f"piece #{i} is empty")
        comp = _good_component(abs(phi[0]), lo) if phi[0] else None
        if comp is None or not hi < comp[1]:
            raise CertificateError(
                f"piece #{i} [{format_circle(lo)},{format_circle(hi)}] is not inside "
                f"{{||{format_character(phi)} x|| > 1/4}}")
    pieces = sorted((lo, hi) for lo, hi, _ in cert.arcs)
    merged = []
    for lo, hi in pieces:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    starts = [m[0] for m in merged]
    for lo, hi in complement_arcs(list(cert.balls)):
        j = bisect.bisect_right(starts, lo) - 1
        if j < 0 or not hi <= merged[j][1]:
            raise CertificateError(f"arc [{format_circle(lo)},{format_circle(hi)}] "
                                   f"is not covered")


def _floor(v) -> int:
    return v.floor() if isinstance(v, Quadratic) else math.floor(v)


def _inside_ball(a, b, f, eps):
    """(a, b) inside (f - eps, f + eps) mod 1."""
    lo = f - eps
    lo = lo + _floor(a - lo)
    return lo <= a and b <= lo + 2 * eps


def _verify_2d(cert):
    stack = [(Fraction(0), Fraction(0), 0)]
    Bset = set(cert.B)
    for i, (dep, kind, ref) in enumerate(cert.cells):
        if not stack:
            raise CertificateError(f"cell #{i}: tree already complete")
        x0, y0, cd = stack.pop()
        while cd < dep:
            h = Fraction(1, 1 << cd)
            kids = _children(x0, y0, h)
            stack.extend((cx, cy, cd + 1) for cx, cy in reversed(kids[1:]))
            (x0, y0), cd = kids[0], cd + 1
        if cd != dep:
            raise CertificateError(f"cell #{i}: malformed subdivision")
        h = Fraction(1, 1 << dep)
        if kind == "ball":
            if not (0 <= ref < len(cert.F)):
                raise CertificateError(f"cell #{i}: no such ball")
            f = cert.F[ref]
            if not (_in_open_box(x0, h, f[0], cert.eps) and _in_open_box(y0, h, f[1], cert.eps)):
                raise CertificateError(f"cell #{i} ({x0},{y0})@{dep} not inside ball {ref}")
        elif kind == "phi":
            phi = tuple(ref)
            if phi not in Bset:
                raise CertificateError(f"cell #{i} uses phi outside B")
            if not _cell_good(x0, y0, h, phi):
                raise CertificateError(f"cell #{i} ({x0},{y0})@{dep} not inside "
                                       f"{{||{format_character(phi)} x|| > 1/4}}")
        else:
            raise CertificateError(f"cell #{i}: unknown evidence {kind!r}")
    if stack:
        raise CertificateError("subdivision does not cover the torus")


# -- the pipeline -----------------------------------------------------------

@dataclass(frozen=True)
class Characterization:
    charset: CharSet
    certificates: Tuple[CoveringCertificate, ...]
    mode: str                                  # dense | closed | lifted
    subgroup: Optional[ClosedSubgroup] = None
    hulls: Tuple[Tuple[TorusPoint, ...], ...] = ()
    schedule: Optional[EpsilonSchedule] = None
    complete: bool = True

    def certs_json(self) -> dict:
        out = {"mode": self.mode, "dim": self.charset.dim,
               "levels": [c.to_json() for c in self.certificates]}
        if self.subgroup is not None:
            out["perp"] = [format_character(p) for p in self.subgroup.perp]
        return out


def characterize(tower: Tower, levels: Optional[int] = None, metric: Metric = SUP,
                 budget: Budget = Budget()) -> Characterization:
    """Build B with C_B = union of the tower (finite prefix of ``levels`` levels)."""
    if levels is None:
        levels = len(tower.stages) - 1
    d = tower.dim
    if tower.finite:
        return _closed_case(tower, levels)
    if tower.perp:
        N = subgroup_from_perp(tower.perp, d)
        if N.is_finite:
            return _closed_case(tower, levels)
        if not N.is_connected:
            raise UnsupportedSubgroup("closure of the union is not connected")
        sub = _restrict_tower(tower, N)
        inner = characterize(sub, levels, metric, budget)
        D = lift_charset(inner.charset, N)
        return Characterization(D, inner.certificates, "lifted", N, inner.hulls,
                                inner.schedule, inner.complete)
    if d not in (1, 2):
        raise ValueError("dense pipeline runs in dimension 1 or 2")
    return _dense(tower, levels, metric, budget)


def _closed_case(tower, levels):
    """H finite (closed): B = H^perp minus 0, shell by shell."""
    H = [x for x in tower.stages[-1]]
    perp = annihilator(H, tower.dim)
    N = subgroup_from_perp(perp, tower.dim, H)
    out = []
    seen = set()
    for r in range(1, levels + 1):
        row = []
        for phi in lattice_shell(perp, r):
            phi = canonical_sign(phi)
            if any(phi) and phi not in seen:
                seen.add(phi)
                row.append(phi)
        out.append(tuple(row))
    return Characterization(CharSet(tuple(out), tower.dim, 0, "closed"), (), "closed", N)


def _restrict_tower(tower, N: ClosedSubgroup) -> Tower:
    k = len(N.factors)
    W = N.coords_inv
    stages = []
    for s in tower.stages:
        pts = []
        for x in s:
            if not N.contains(x):
                raise ValueError(f"stage point {format_point(x)} outside the declared closure")
            xp = [circle(sum(W[i][c] * x[c] for c in range(N.dim))) for i in range(N.dim)]
            pts.append(tuple(xp[k:]))
        stages.append(pts)
    return Tower(tuple(stages), N.torus_rank, False, ())


def _dense(tower, levels, metric, budget):
    if len(tower.stages) < levels + 1:
        raise ValueError(f"tower has {len(tower.stages)} stages, need {levels + 1}")
    hulls, windows = [], []
    complete = True
    for n in range(levels + 1):
        E = tower.stages[n]
        if all(point_is_rational(x) for x in E):
            w = char_window(E, n)
            h = quasi_hull(E, n, w).points
        else:
            if not tower.words:
                raise UnsupportedSubgroup("irrational stages need word data")
            w = char_window(E, n)
            h = bounded_quasi_hull(tower.generators, tower.words[n], n).points
            complete = False
        if hulls and not set(hulls[-1]) <= set(h):
            raise ArithmeticError(f"hull {n - 1} not inside hull {n}")
        hulls.append(tuple(h))
        windows.append(w)
    sched = epsilons(hulls, metric)
    certs, levels_out = [], []
    for n in range(levels):
        cert = covering(hulls[n], sched[n], windows[n], budget, n)
        certs.append(cert)
        levels_out.append(cert.B)
    B = CharSet(tuple(levels_out), tower.dim, 0, "characterize")
    return Characterization(B, tuple(certs), "dense", None, tuple(hulls), sched, complete)


def lift_charset(B: CharSet, N: ClosedSubgroup) -> CharSet:
    """Characters of T^d from characters of the closed subgroup N.

    Level n holds the extensions of level n of B followed by the annihilator
    vectors of N of max-coefficient n + 1 (canonical sign), so the result
    enumerates B's extensions together with all of N^perp.
    """
    if N.is_finite:
        raise ValueError("N is finite: its dual has no countably infinite subsets")
    if not N.perp:
        if B.dim != N.dim:
            raise ValueError("dimension mismatch")
        return B
    if not N.is_connected:
        raise UnsupportedSubgroup("lifting from a disconnected subgroup")
    if B.dim != N.torus_rank:
        raise ValueError("B must live on the torus part of N")
    out = []
    for i, level in enumerate(B.levels):
        row = [N.extend(psi) for psi in level]
        row += [canonical_sign(v) for v in lattice_shell(list(N.perp), i + 1)]
        out.append(tuple(row))
    return CharSet(tuple(out), N.dim, B.start, "lifted")


# -- sequences and sets -----------------------------------------------------

@dataclass(frozen=True)
class Conversion:
    charset: Optional[CharSet]
    sequence: Optional[Tuple[Character, ...]]
    closed_case: bool = False
    kernel_of: Optional[Character] = None


def seq_set_convert(obj, dim: int = 1, tail: int = 4) -> Conversion:
    """CharSet -> its one-to-one enumeration; sequence -> deduplicated set.

    A sequence whose last ``tail`` terms are all equal is flagged as the
    closed case (the limit set is a kernel) and not converted.
    """
    if isinstance(obj, CharSet):
        return Conversion(obj, tuple(obj))
    seq = [parse_character(p) for p in obj]
    seq = [p if isinstance(p, tuple) else (p,) for p in seq]
    if len(seq) >= tail and len(set(seq[-tail:])) == 1:
        return Conversion(None, tuple(seq), True, seq[-1])
    uniq = list(dict.fromkeys(seq))
    return Conversion(CharSet(tuple((p,) for p in uniq), dim), tuple(seq))
