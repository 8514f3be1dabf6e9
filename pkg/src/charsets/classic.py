"""Explicit characterizing sets: {k*n! : 0 < k <= n}, {p^n}, and continued
fraction denominators, plus factorial digit expansions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .charset import CharSet
from .torus import (QUARTER, CircleValue, Interval, PrecisionExhausted, Quadratic,
                    cf_convergents, circle, compare, eval_char, norm, norm_cmp)


def factorial_charset(n_max: int) -> CharSet:
    """Level n (1 <= n <= n_max) is {k*n! : 0 < k <= n}."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    levels = []
    f = 1
    for n in range(1, n_max + 1):
        f *= n
        levels.append(tuple((k * f,) for k in range(1, n + 1)))
    return CharSet(tuple(levels), 1, start=1, provenance=f"factorial:{n_max}")


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % i for i in range(2, math.isqrt(p) + 1))


def prufer_charset(p: int, n_max: int) -> CharSet:
    """{p^n : 0 <= n < n_max}, one power per level."""
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return CharSet(tuple(((p ** n,),) for n in range(n_max)), 1, 0, f"prufer:{p}:{n_max}")


def cyclic_cf_charset(alpha: Quadratic, k_max: int) -> CharSet:
    """Denominators q_0, q_1, ... of the convergents of alpha (repeats dropped)."""
    if not isinstance(alpha, Quadratic):
        raise TypeError("needs a quadratic irrational")
    qs = []
    for _, q in cf_convergents(alpha, k_max):
        if q not in qs:
            qs.append(q)
    return CharSet(tuple(((q,),) for q in qs), 1, 0, f"cf:{alpha}:{k_max}")


def cf_profile(alpha: Quadratic, k: int):
    """(q_i, ||q_i alpha||) for the first k convergents, each checked exactly
    against ||q_i alpha|| < 1/q_{i+1}."""
    convs = cf_convergents(alpha, k + 1)
    rows = []
    for (_, q), (_, qn) in zip(convs, convs[1:]):
        z = eval_char((q,), (alpha,))
        if norm_cmp(z, Fraction(1, qn)) >= 0:
            raise ArithmeticError(f"||{q} alpha|| >= 1/{qn}")
        rows.append((q, norm(z)))
    return rows


@dataclass(frozen=True)
class FactorialDigits:
    """Digits c_1..c_N of x = sum c_n/(n+1)!, with 0 <= c_n <= n.

    ``remainder`` is (N+1)! * (x - partial sum), in [0, 1); ``exact`` means the
    expansion terminated (remainder exactly 0).
    """

    x: CircleValue
    digits: Tuple[int, ...]
    exact: bool
    remainder: object

    def digit(self, n: int) -> int:
        return self.digits[n - 1]

    def partial_sum(self, N: Optional[int] = None) -> Fraction:
        N = len(self.digits) if N is None else N
        total, f = Fraction(0), 1
        for n, c in enumerate(self.digits[:N], start=1):
            f *= n + 1
            total += Fraction(c, f)
        return total


def _floor(v) -> int:
    if isinstance(v, Fraction):
        return math.floor(v)
    if isinstance(v, Quadratic):
        return v.floor()
    lo, hi = math.floor(v.lo), math.floor(v.hi)
    if lo != hi:
        raise PrecisionExhausted(f"digit undetermined for interval {v}")
    return lo


def factorial_expand(x: CircleValue, N: int) -> FactorialDigits:
    """Greedy factorial digits of x in [0, 1) to depth N."""
    y = circle(x)
    digits = []
    exact = False
    for n in range(1, N + 1):
        t = y * (n + 1)
        c = _floor(t)
        if not 0 <= c <= n:
            raise ArithmeticError("digit out of range")
        digits.append(c)
        y = t - c
        if isinstance(y, Fraction) and y == 0:
            exact = True
    return FactorialDigits(x, tuple(digits), exact, y)


@dataclass(frozen=True)
class WitnessPair:
    """||k * n! * x|| >= 1/4, with the verified enclosure of the norm."""

    k: int
    n: int
    value: object
    digit: int
    y_bounds_hold: bool


def witness_pair(x: CircleValue, n: int, digits: Optional[FactorialDigits] = None,
                 require_digit: bool = False) -> Optional[WitnessPair]:
    """First k in 1..n with ||k n! x|| >= 1/4 (interval-verified), or None.

    Whenever the digit c_n is neither 0 nor n a hit is guaranteed, because then
    frac(n! x) lies in [1/(n+1), n/(n+1)].  With ``require_digit`` the scan
    only runs in that case.
    """
    if digits is None or len(digits.digits) < n:
        digits = factorial_expand(x, n)
    c = digits.digit(n)
    guaranteed = c not in (0, n)
    if require_digit and not guaranteed:
        return None
    f = math.factorial(n)
    y = eval_char((f,), (circle(x),))
    y_ok = compare(y, Fraction(1, n + 1)) >= 0 and compare(y, Fraction(n, n + 1)) <= 0
    for k in range(1, n + 1):
        value = norm(eval_char((k * f,), (circle(x),)))
        if compare(value, QUARTER) >= 0:
            return WitnessPair(k, n, value, c, y_ok)
    if guaranteed:
        raise ArithmeticError(f"no witness at n={n} although c_n={c}")
    return None


def witness_pairs(x: CircleValue, n_max: int, require_digit: bool = False) -> List[WitnessPair]:
    digits = factorial_expand(x, n_max)
    out = []
    for n in range(1, n_max + 1):
        w = witness_pair(x, n, digits, require_digit)
        if w is not None:
            out.append(w)
    return out


def recheck_witness(x: CircleValue, w: WitnessPair, bits: int = 128) -> bool:
    """Re-verify a witness at a fresh precision."""
    value = norm(eval_char((w.k * math.factorial(w.n),), (circle(x),)), bits)
    if isinstance(value, Interval):
        return value.lo >= QUARTER
    return value >= QUARTER
