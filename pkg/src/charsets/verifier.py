"""Finite-stage evidence about C_B: tail profiles, exact sublevel measures,
and separating characters for points outside a subgroup."""

from __future__ import annotations

import csv
import io
import itertools
import math
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .charset import CharSet
from .lattice import annihilator, canonical_sign, closure, lattice_shell
from .quasiconvex import tolerance
from .torus import (QUARTER, Character, Interval, PrecisionExhausted, TorusPoint, circle,
                    compare, eval_char, format_character, format_circle, format_point, norm,
                    point_is_rational)

MEMBER = "member-so-far"
WITNESS = "witness-found"
UNDETERMINED = "undetermined"


# -- tail profiles ----------------------------------------------------------

@dataclass(frozen=True)
class ProfileEntry:
    level: int
    phi: Character
    value: object            # Fraction, or Interval enclosing ||phi(x)||
    witness: Optional[bool]  # None when the comparison with 1/4 was undecided

    @property
    def err(self) -> Fraction:
        return self.value.width if isinstance(self.value, Interval) else Fraction(0)


@dataclass(frozen=True)
class TailProfile:
    """Parallel tuples (levels, phis, values, flags) for the first N characters."""

    x: TorusPoint
    N: int
    levels: Tuple[int, ...]
    phis: Tuple[Character, ...]
    values: Tuple[object, ...]
    flags: Tuple[Optional[bool], ...]
    tail_max: Tuple[object, ...]
    verdict: str
    witnesses: Tuple[int, ...]
    quiet_from: Optional[int] = None   # first level of the small tail

    @property
    def entries(self) -> List[ProfileEntry]:
        return [ProfileEntry(*t) for t in zip(self.levels, self.phis, self.values, self.flags)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "phi", "value", "err"])
        for e in self.entries:
            v = e.value
            mid = (v.lo + v.hi) / 2 if isinstance(v, Interval) else v
            w.writerow([e.level, format_character(e.phi), f"{float(mid):.17g}",
                        f"{float(e.err):.3g}"])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"x": format_point(self.x), "N": self.N, "verdict": self.verdict,
                "witnesses": list(self.witnesses), "quiet_from": self.quiet_from,
                "values": [_fmt_value(v) for v in self.values]}


def _fmt_value(v):
    return format_circle(v) if isinstance(v, Fraction) else str(v)


def _upper(v):
    return v.hi if isinstance(v, Interval) else v


@lru_cache(maxsize=16)
def _flatten(B: CharSet, N: Optional[int]):
    pairs = list(itertools.islice(B.leveled(), N))
    return tuple(lv for lv, _ in pairs), tuple(phi for _, phi in pairs)


@lru_cache(maxsize=64)
def _residues(phis: Tuple[Character, ...], q: int) -> np.ndarray:
    return np.array([phi[0] % q for phi in phis], dtype=object if q > 2 ** 31 else np.int64)


@lru_cache(maxsize=256)
def _fractions(q: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(m, q) for m in range(q // 2 + 1))


def tail_profile(x: TorusPoint, B: CharSet, N: Optional[int] = None, W: int = 3,
                 windowed: bool = False, bits: int = 64) -> TailProfile:
    """Values ||phi_k(x)|| for the first N characters of B and a verdict.

    member-so-far: the last levels form a tail where every value is 0 (or,
    with ``windowed``, at most 2**-(level+2), the bound characters of a
    pipeline-built B satisfy on the tower).  witness-found: otherwise, at
    least W values verified >= 1/4.  Never a membership claim.
    """
    x = tuple(circle(c) for c in x)
    if len(x) != B.dim:
        raise ValueError("dimension mismatch")
    levels, phis = _flatten(B, N)
    N = len(phis)
    if point_is_rational(x) and B.dim == 1:
        q, p = x[0].denominator, x[0].numerator
        r = (_residues(phis, q) * p) % q
        mins = np.minimum(r, q - r)
        table = _fractions(q)
        m = mins.tolist()
        values = tuple(table[v] for v in m)
        flags = tuple((4 * mins >= q).tolist())
        tail = tuple(table[v] for v in np.maximum.accumulate(mins[::-1])[::-1].tolist())
        i = N
        while i > 0 and (m[i - 1] == 0 or (windowed and m[i - 1] << (levels[i - 1] + 2) <= q)):
            i -= 1
    else:
        vals, fl = [], []
        for phi in phis:
            v = norm(eval_char(phi, x, bits), bits)
            try:
                wit = compare(v, QUARTER) >= 0
            except PrecisionExhausted:
                wit = None
            vals.append(v)
            fl.append(wit)
        values, flags = tuple(vals), tuple(fl)
        uppers = [_upper(v) for v in values]
        tail = [None] * N
        acc = None
        for i in range(N - 1, -1, -1):
            acc = uppers[i] if acc is None or uppers[i] > acc else acc
            tail[i] = acc
        tail = tuple(tail)
        i = N
        while i > 0 and uppers[i - 1] <= (tolerance(levels[i - 1]) if windowed else 0):
            i -= 1
    # the quiet run has to start at a level boundary
    while 0 < i < N and levels[i] == levels[i - 1]:
        i += 1
    quiet = levels[i] if i < N else None
    witnesses = tuple(k for k, f in enumerate(flags) if f)
    if quiet is not None:
        verdict = MEMBER
    elif len(witnesses) >= W:
        verdict = WITNESS
    else:
        verdict = UNDETERMINED
    return TailProfile(x, N, levels, phis, values, flags, tail, verdict, witnesses, quiet)


def recheck_profile(profile: TailProfile, bits: int = 128) -> bool:
    """Every witness re-verified at a fresh (doubled) precision."""
    for k in profile.witnesses:
        v = norm(eval_char(profile.phis[k], profile.x, bits), bits)
        if compare(v, QUARTER) < 0:
            return False
    return True


# -- sublevel measure -------------------------------------------------------

@dataclass(frozen=True)
class MeasureReport:
    N: int
    delta: Fraction
    measure: Fraction
    arcs: Tuple[Tuple[Fraction, Fraction], ...]

    def to_json(self) -> dict:
        return {"N": self.N, "delta": format_circle(self.delta),
                "measure": format_circle(self.measure) if self.measure < 1 else "1",
                "arcs": [[format_circle(a), str(b)] for a, b in self.arcs]}


def _restrict_arcs(arcs, a, delta):
    """arcs intersected with {x : ||a x|| <= delta} (a > 0), zero-length pieces dropped."""
    out = []
    for lo, hi in arcs:
        j0 = math.ceil(a * lo - delta)
        j1 = math.floor(a * hi + delta)
        for j in range(j0, j1 + 1):
            s, t = max(lo, (j - delta) / a), min(hi, (j + delta) / a)
            if s < t:
                out.append((s, t))
    return out


def sublevel_measure(chars: Sequence[Character], delta: Fraction,
                     arcs=None) -> MeasureReport:
    """Exact Haar measure of {x in T : ||phi x|| <= delta for all phi}.

    Arcs live in [0, 1]; points (measure zero) are dropped along the way.
    """
    delta = Fraction(delta)
    if not 0 < delta < Fraction(1, 2):
        raise ValueError("delta must lie in (0, 1/2)")
    if arcs is None:
        arcs = [(Fraction(0), Fraction(1))]
    count = 0
    for phi in chars:
        if len(phi) != 1:
            raise ValueError("exact measure only in dimension 1; use monte_carlo_measure")
        count += 1
        a = abs(phi[0])
        if a:
            arcs = _restrict_arcs(arcs, a, delta)
    return MeasureReport(count, delta, sum((b - a for a, b in arcs), Fraction(0)), tuple(arcs))


def measure_profile(B: CharSet, delta: Fraction, levels: Optional[int] = None) -> List[MeasureReport]:
    """One report per prefix of whole levels."""
    reports = []
    arcs = None
    count = 0
    for i, level in enumerate(B.levels[:levels]):
        rep = sublevel_measure(level, delta, arcs)
        arcs = list(rep.arcs)
        count += rep.N
        reports.append(MeasureReport(count, rep.delta, rep.measure, rep.arcs))
    return reports


def monte_carlo_measure(chars: Sequence[Character], delta: Fraction, samples: int = 10 ** 6,
                        seed: int = 0, dim: int = 1) -> Tuple[float, float]:
    """(estimate, standard error) of the sublevel measure from uniform samples."""
    rng = np.random.default_rng(seed)
    x = rng.random((samples, dim))
    ok = np.ones(samples, dtype=bool)
    d = float(delta)
    for phi in chars:
        t = x @ np.array(phi, dtype=float)
        f = t - np.floor(t)
        ok &= np.minimum(f, 1 - f) <= d
    p = ok.mean()
    return float(p), float(math.sqrt(p * (1 - p) / samples))


# -- separating characters --------------------------------------------------

@dataclass(frozen=True)
class Separation:
    n: int
    u: Character
    value: object      # ||u(x)||
    worst: Fraction    # max over the stage of ||u(e)||
    bound: Fraction    # 1/n
    method: str


def _search_shells(basis, test, max_radius):
    seen = set()
    for r in range(1, max_radius + 1):
        shell = sorted({canonical_sign(u) for u in lattice_shell(basis, r)} - seen,
                       key=lambda u: (max(abs(a) for a in u), u))
        for u in shell:
            if any(u) and test(u):
                return u
        seen.update(shell)
    return None


def _rational_stage(stage):
    return [e for e in stage if point_is_rational(e)]


def separation_witness(stages: Sequence[Sequence[TorusPoint]], x: TorusPoint,
                       levels: Optional[int] = None, max_radius: int = 64) -> List[Separation]:
    """For n = 1..levels a u_n with ||u_n(x)|| > 1/4 and ||u_n(e)|| < 1/n on stage n.

    Searched first in the annihilator lattice of the stage (then ||u_n(e)|| = 0),
    then over all of Z^d by max-coefficient shells.
    """
    x = tuple(circle(c) for c in x)
    d = len(x)
    levels = len(stages) - 1 if levels is None else levels
    out = []
    for n in range(1, levels + 1):
        E = list(stages[min(n, len(stages) - 1)])
        if any(tuple(e) == x for e in E):
            raise ValueError(f"x lies in stage {n}")
        bound = Fraction(1, n)

        def good(u):
            if compare(norm(eval_char(u, x)), QUARTER) <= 0:
                return False
            return all(compare(norm(eval_char(u, e)), bound) < 0 for e in E)

        u, method = None, ""
        rat = _rational_stage(E)
        if len(rat) == len(E):
            u = _search_shells(annihilator(rat, d), good, max_radius)
            method = "annihilator"
        if u is None:
            std = [tuple(int(i == j) for j in range(d)) for i in range(d)]
            u = _search_shells(std, good, max_radius)
            method = "search"
        if u is None:
            raise RuntimeError(f"no separating character for stage {n} within radius {max_radius}")
        worst = max((_upper(norm(eval_char(u, e))) for e in E), default=Fraction(0))
        out.append(Separation(n, u, norm(eval_char(u, x)), worst, bound, method))
    return out


def check_separation(stages, x, seps: Sequence[Separation]) -> bool:
    x = tuple(circle(c) for c in x)
    for s in seps:
        E = stages[min(s.n, len(stages) - 1)]
        if compare(norm(eval_char(s.u, x)), QUARTER) <= 0:
            return False
        if any(compare(norm(eval_char(s.u, e)), Fraction(1, s.n)) >= 0 for e in E):
            return False
    return True


@dataclass(frozen=True)
class ChainWitness:
    n: int
    u: Character
    value: Fraction


def chain_witness_sequence(chain: Sequence[Sequence[TorusPoint]], x: TorusPoint,
                           max_radius: int = 64) -> List[ChainWitness]:
    """u_n in F_n^perp with ||u_n(x)|| >= 1/4 for finite rational F_n (given by
    generators), searched by shells of the annihilator lattice."""
    x = tuple(circle(c) for c in x)
    d = len(x)
    out = []
    for n, gens in enumerate(chain):
        gens = [tuple(g) for g in gens] or [tuple(Fraction(0) for _ in range(d))]
        N = closure(gens, d)
        if point_is_rational(x) and N.contains(x):
            raise ValueError(f"x lies in F_{n}")
        u = _search_shells(list(N.perp),
                           lambda u: compare(norm(eval_char(u, x)), QUARTER) >= 0, max_radius)
        if u is None:
            raise RuntimeError(f"no witness in F_{n}^perp within radius {max_radius}")
        out.append(ChainWitness(n, u, norm(eval_char(u, x))))
    return out


def check_chain_witnesses(chain, x, ws: Sequence[ChainWitness]) -> bool:
    x = tuple(circle(c) for c in x)
    for w in ws:
        if any(eval_char(w.u, tuple(g)) != 0 for g in chain[w.n]):
            return False
        if compare(norm(eval_char(w.u, x)), QUARTER) < 0:
            return False
    return True
