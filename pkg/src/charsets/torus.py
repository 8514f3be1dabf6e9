"""Exact points of the circle T = R/Z and of finite tori, and characters on them.

A circle value is one of three things:

* a :class:`fractions.Fraction` (exact rational),
* a :class:`Quadratic` number ``(a + b*sqrt(D))/c`` (exact, comparisons decided
  with integer arithmetic),
* an :class:`Interval` with dyadic endpoints (verified enclosure).

Points of T^d are plain tuples of circle values and characters are tuples of
ints.  Everything here is immutable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple, Union

DEFAULT_BITS = 64
PRECISION_CAP = 2 ** 14

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


class PrecisionExhausted(ArithmeticError):
    """An interval comparison could not be decided within the precision cap."""


class DimensionMismatch(ValueError):
    pass


def _squarefree(D: int) -> Tuple[int, int]:
    """Return (k, s) with D = k*k*s and s square-free."""
    k, s, i = 1, D, 2
    while i * i <= s:
        while s % (i * i) == 0:
            s //= i * i
            k *= i
        i += 1
    return k, s


def _sign_surd(u: int, v: int, D: int) -> int:
    """Sign of u + v*sqrt(D) for a non-square D > 0."""
    if u >= 0 and v >= 0:
        return 1 if (u or v) else 0
    if u <= 0 and v <= 0:
        return -1
    t = u * u - v * v * D
    # t != 0 because D is not a square and v != 0 here
    return (1 if t > 0 else -1) if u > 0 else (1 if t < 0 else -1)


@dataclass(frozen=True)
class Quadratic:
    """The real number (a + b*sqrt(D))/c with b != 0 and D square-free.

    Use :func:`quadratic` to build one; it normalizes and collapses b == 0 to
    a Fraction.
    """

    a: int
    b: int
    c: int
    D: int

    def __post_init__(self):
        if self.c <= 0 or self.b == 0 or self.D <= 1:
            raise ValueError("unnormalized Quadratic; use quadratic()")

    # -- arithmetic -----------------------------------------------------
    def __neg__(self):
        return quadratic(-self.a, -self.b, self.c, self.D)

    def __add__(self, other):
        if isinstance(other, int):
            other = Fraction(other)
        if isinstance(other, Fraction):
            p, q = other.numerator, other.denominator
            return quadratic(self.a * q + p * self.c, self.b * q, self.c * q, self.D)
        if isinstance(other, Quadratic):
            if other.D != self.D:
                return NotImplemented
            return quadratic(self.a * other.c + other.a * self.c,
                             self.b * other.c + other.b * self.c,
                             self.c * other.c, self.D)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Quadratic)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        if isinstance(k, int):
            return quadratic(self.a * k, self.b * k, self.c, self.D)
        if isinstance(k, Fraction):
            return quadratic(self.a * k.numerator, self.b * k.numerator,
                             self.c * k.denominator, self.D)
        return NotImplemented

    __rmul__ = __mul__

    # -- order ----------------------------------------------------------
    def sign(self) -> int:
        return _sign_surd(self.a, self.b, self.D)

    def cmp(self, other) -> int:
        """Exact sign of self - other (other rational or same-D quadratic)."""
        diff = self - other
        if isinstance(diff, Fraction):
            return (diff > 0) - (diff < 0)
        return diff.sign()

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    def floor(self) -> int:
        r = math.isqrt(self.b * self.b * self.D)
        fb = r if self.b > 0 else -r - 1
        return (self.a + fb) // self.c

    def frac(self) -> "Quadratic":
        return self - self.floor()

    def enclose(self, bits: int = DEFAULT_BITS) -> Tuple[Fraction, Fraction]:
        """Dyadic (lo, hi) with lo < self < hi and hi - lo = 2**-bits."""
        s = 1 << bits
        lo = Fraction(quadratic(self.a * s, self.b * s, self.c, self.D).floor(), s)
        return lo, lo + Fraction(1, s)

    def __float__(self):
        return (self.a + self.b * math.sqrt(self.D)) / self.c

    def __str__(self):
        return f"sqrt({self.D}):{self.a},{self.b},{self.c}"


def quadratic(a: int, b: int, c: int, D: int) -> Union[Fraction, Quadratic]:
    """Normalized (a + b*sqrt(D))/c; a Fraction when the surd vanishes."""
    if c == 0:
        raise ZeroDivisionError("quadratic with c = 0")
    if D < 0:
        raise ValueError("negative discriminant")
    k, D = _squarefree(D) if D > 0 else (0, 1)
    b *= k
    if D == 1:
        return Fraction(a + b, c)
    if b == 0:
        return Fraction(a, c)
    if c < 0:
        a, b, c = -a, -b, -c
    g = math.gcd(math.gcd(a, b), c)
    return Quadratic(a // g, b // g, c // g, D)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] on the real line, lo <= hi.

    ``refine`` (if present) recomputes the same quantity at a higher bit
    precision; comparisons use it before giving up.
    """

    lo: Fraction
    hi: Fraction
    bits: int = DEFAULT_BITS
    refine: Optional[Callable[[int], "Interval"]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval with lo > hi")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            return Interval(self.lo + other, self.hi + other, self.bits)
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi, min(self.bits, other.bits))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo, self.bits)

    def __mul__(self, k):
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        lo, hi = self.lo * k, self.hi * k
        return Interval(min(lo, hi), max(lo, hi), self.bits)

    __rmul__ = __mul__

    def contains(self, value) -> bool:
        if isinstance(value, Quadratic):
            return value.cmp(self.lo) >= 0 and value.cmp(self.hi) <= 0
        return self.lo <= value <= self.hi

    def __float__(self):
        return float((self.lo + self.hi) / 2)

    def __str__(self):
        return f"[{self.lo},{self.hi}]@{self.bits}"


CircleValue = Union[Fraction, Quadratic, Interval]
TorusPoint = Tuple[CircleValue, ...]
Character = Tuple[int, ...]


@dataclass(frozen=True)
class Metric:
    """Invariant metric on T^d: ``sup`` (max of norms) or ``weighted``
    (sum of 2**-i times the i-th coordinate norm, for T^omega truncations)."""

    kind: str = "sup"

    def __post_init__(self):
        if self.kind not in ("sup", "weighted"):
            raise ValueError(f"unknown metric kind {self.kind!r}")


SUP = Metric("sup")
WEIGHTED = Metric("weighted")


# -- parsing / formatting ---------------------------------------------------

_QUAD_RE = re.compile(r"^\s*sqrt\((\d+)\):(-?\d+),(-?\d+),(-?\d+)\s*$")
_INTERVAL_RE = re.compile(r"^\s*\[([^,\]]+),([^,\]]+)\]@(\d+)\s*$")


def parse_circle(text: str, reduce: bool = True) -> CircleValue:
    """Parse "p/q", "sqrt(D):a,b,c" or "[lo,hi]@bits"."""
    if isinstance(text, (int, Fraction)):
        value = Fraction(text)
        return circle(value) if reduce else value
    m = _QUAD_RE.match(text)
    if m:
        D, a, b, c = (int(g) for g in m.groups())
        value = quadratic(a, b, c, D)
    else:
        m = _INTERVAL_RE.match(text)
        if m:
            value = Interval(Fraction(m.group(1).strip()), Fraction(m.group(2).strip()),
                             int(m.group(3)))
        else:
            try:
                value = Fraction(text.strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"cannot parse circle value {text!r}") from exc
    return circle(value) if reduce else value


def format_circle(z: CircleValue) -> str:
    return str(z)


def parse_point(obj) -> TorusPoint:
    """A point from "1/3", ["1/2", "1/3"] or "(1/2,1/3)"."""
    if isinstance(obj, str):
        s = obj.strip()
        if s.startswith("(") and s.endswith(")"):
            parts = _split_top(s[1:-1])
            return tuple(parse_circle(p) for p in parts)
        return (parse_circle(s),)
    if isinstance(obj, (int, Fraction)):
        return (circle(Fraction(obj)),)
    return tuple(parse_circle(p) for p in obj)


def _split_top(s: str):
    # split on commas not inside [] or ()
    parts, depth, cur = [], 0, ""
    for ch in s:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [p.strip() for p in parts if p.strip()]


def format_point(x: TorusPoint):
    """JSON form: a string in dimension 1, a list of strings otherwise."""
    if len(x) == 1:
        return str(x[0])
    return [str(c) for c in x]


def parse_character(obj) -> Character:
    if isinstance(obj, int):
        return (obj,)
    if isinstance(obj, str):
        s = obj.strip().strip("()")
        return tuple(int(p) for p in s.split(",") if p.strip())
    return tuple(int(v) for v in obj)


def format_character(phi: Character):
    return phi[0] if len(phi) == 1 else list(phi)


# -- core operations --------------------------------------------------------

def frac(q: Fraction) -> Fraction:
    return q - (q.numerator // q.denominator)


def circle(z) -> CircleValue:
    """Canonical representative in [0, 1)."""
    if isinstance(z, int):
        return Fraction(0)
    if isinstance(z, Fraction):
        return frac(z)
    if isinstance(z, Quadratic):
        return z.frac()
    if isinstance(z, Interval):
        k = z.lo.numerator // z.lo.denominator
        if k == 0:
            return z
        return Interval(z.lo - k, z.hi - k, z.bits, _shift_refine(z.refine, -k))
    raise TypeError(f"not a circle value: {z!r}")


def _shift_refine(refine, k):
    if refine is None:
        return None
    return lambda bits: refine(bits) + k


def is_rational(z) -> bool:
    return isinstance(z, (int, Fraction))


def point_is_rational(x: TorusPoint) -> bool:
    return all(is_rational(c) for c in x)


def _quad_interval(z: Quadratic, bits: int) -> Interval:
    lo, hi = z.enclose(bits)
    return Interval(lo, hi, bits, lambda b: _quad_interval(z, b))


def norm(z: CircleValue, bits: int = DEFAULT_BITS):
    """Distance to the nearest integer.

    Exact Fraction for rational input, an :class:`Interval` of width at most
    2**-bits otherwise.
    """
    if isinstance(z, int):
        return Fraction(0)
    if isinstance(z, Fraction):
        f = frac(z)
        return min(f, 1 - f)
    if isinstance(z, Quadratic):
        f = z.frac()
        g = f if f.cmp(HALF) < 0 else 1 - f
        return _quad_interval(g, bits)
    if isinstance(z, Interval):
        return _interval_norm(z)
    raise TypeError(f"not a circle value: {z!r}")


def _interval_norm(z: Interval) -> Interval:
    if z.width >= HALF:
        raise PrecisionExhausted(f"interval {z} too wide for a norm bound")
    k = math.floor(z.lo)
    lo, hi = z.lo - k, z.hi - k
    if lo <= HALF <= hi and lo != hi:
        raise PrecisionExhausted(f"interval {z} straddles 1/2")
    refine = None
    if z.refine is not None:
        refine = lambda b, r=z.refine: _interval_norm(r(b))
    if hi <= HALF:
        return Interval(lo, hi, z.bits, refine)
    if lo >= HALF and hi <= 1:
        return Interval(1 - hi, 1 - lo, z.bits, refine)
    # hi > 1: the interval contains an integer
    return Interval(Fraction(0), max(HALF - abs(HALF - lo), hi - 1), z.bits, refine)


def compare(value, r: Fraction, cap: Optional[int] = None) -> int:
    """Sign of value - r, exact for rationals and quadratics.

    Intervals are refined by doubling their precision (when they know how)
    up to ``cap`` bits; an undecided comparison raises PrecisionExhausted.
    """
    if isinstance(value, (int, Fraction)):
        return (value > r) - (value < r)
    if isinstance(value, Quadratic):
        return value.cmp(r)
    if cap is None:
        cap = PRECISION_CAP
    if isinstance(value, Interval):
        iv = value
        while True:
            if iv.lo > r:
                return 1
            if iv.hi < r:
                return -1
            if iv.lo == iv.hi == r:
                return 0
            if iv.refine is None or iv.bits * 2 > cap:
                raise PrecisionExhausted(f"cannot compare {iv} with {r}")
            iv = iv.refine(iv.bits * 2)
    raise TypeError(f"cannot compare {value!r}")


def norm_cmp(z: CircleValue, r: Fraction, cap: Optional[int] = None) -> int:
    """Sign of ||z|| - r, decided exactly whenever z is rational or quadratic."""
    if isinstance(z, Quadratic):
        f = z.frac()
        g = f if f.cmp(HALF) < 0 else 1 - f
        return g.cmp(r)
    return compare(norm(z), r, cap)


def _check_dims(phi: Sequence, x: Sequence):
    if len(phi) != len(x):
        raise DimensionMismatch(f"character of length {len(phi)} on point of dimension {len(x)}")


def eval_char(phi: Character, x: TorusPoint, bits: int = DEFAULT_BITS) -> CircleValue:
    """sum(phi_i * x_i) mod 1.

    Stays exact while the coordinates are rationals and quadratics sharing one
    discriminant; otherwise the result is an Interval with a refine hook.
    """
    _check_dims(phi, x)
    total: Union[Fraction, Quadratic] = Fraction(0)
    for k, c in zip(phi, x):
        if k == 0:
            continue
        if isinstance(c, Interval):
            return _eval_interval(phi, x, bits)
        if isinstance(c, Quadratic) and isinstance(total, Quadratic) and total.D != c.D:
            return _eval_interval(phi, x, bits)
        total = total + c * k
    return circle(total)


def _eval_interval(phi, x, bits):
    lo = hi = Fraction(0)
    width_bits = []
    for k, c in zip(phi, x):
        if k == 0:
            continue
        if isinstance(c, Fraction):
            lo, hi = lo + k * c, hi + k * c
            continue
        if isinstance(c, Quadratic):
            extra = max(abs(k).bit_length() + len(phi).bit_length(), 1)
            clo, chi = c.enclose(bits + extra)
        else:
            clo, chi = c.lo, c.hi
            width_bits.append(c.bits)
        a, b = k * clo, k * chi
        lo, hi = lo + min(a, b), hi + max(a, b)
    refine = None
    if not width_bits:
        refine = lambda b: _eval_interval(phi, x, b)
    out_bits = min(width_bits) if width_bits else bits
    return circle(Interval(lo, hi, out_bits, refine))


def char_add(phi: Character, psi: Character) -> Character:
    _check_dims(phi, psi)
    return tuple(a + b for a, b in zip(phi, psi))


def point_add(x: TorusPoint, y: TorusPoint) -> TorusPoint:
    _check_dims(x, y)
    return tuple(circle(a + b) for a, b in zip(x, y))


def point_neg(x: TorusPoint) -> TorusPoint:
    return tuple(circle(-a) for a in x)


def point_scale(x: TorusPoint, k: int) -> TorusPoint:
    return tuple(circle(a * k) for a in x)


def zero(d: int) -> TorusPoint:
    return (Fraction(0),) * d


def metric_d(x: TorusPoint, y: TorusPoint, metric: Metric = SUP):
    """Invariant distance between two points: exact on rationals."""
    _check_dims(x, y)
    norms = [norm(circle(a - b)) for a, b in zip(x, y)]
    if metric.kind == "sup":
        if all(isinstance(n, Fraction) for n in norms):
            return max(norms)
        ivs = [n if isinstance(n, Interval) else Interval(n, n) for n in norms]
        return Interval(max(i.lo for i in ivs), max(i.hi for i in ivs), min(i.bits for i in ivs))
    total = Fraction(0)
    for i, n in enumerate(norms):
        total = total + n * Fraction(1, 1 << i)
    return total


# -- continued fractions ----------------------------------------------------

def _surd_form(alpha: Quadratic):
    """(P, Q, d) with alpha = (P + sqrt(d))/Q and Q | d - P*P."""
    a, b, c, D = alpha.a, alpha.b, alpha.c, alpha.D
    if b < 0:
        a, b, c = -a, -b, -c
    P, Q, d = a, c, b * b * D
    if (d - P * P) % Q:
        P, d, Q = P * abs(Q), d * Q * Q, Q * abs(Q)
    return P, Q, d


def cf_expansion(alpha: Quadratic):
    """Eventually periodic continued fraction of alpha: (preperiod, period)."""
    if not isinstance(alpha, Quadratic):
        raise TypeError("continued fraction needs a quadratic irrational")
    P, Q, d = _surd_form(alpha)
    seen = {}
    terms = []
    while (P, Q) not in seen:
        seen[(P, Q)] = len(terms)
        a = quadratic(P, 1, Q, d).floor() if Q > 0 else quadratic(-P, -1, -Q, d).floor()
        terms.append(a)
        P = a * Q - P
        Q = (d - P * P) // Q
    start = seen[(P, Q)]
    return terms[:start], terms[start:]


def cf_terms(alpha: Quadratic, k: int):
    pre, per = cf_expansion(alpha)
    out = list(pre[:k])
    while len(out) < k:
        out.extend(per[: k - len(out)])
    return out


def cf_convergents(alpha: Quadratic, k: int, verify: bool = True):
    """First k convergents (p_i, q_i) of alpha.

    With ``verify`` each |alpha - p_i/q_i| < 1/(q_i q_{i+1}) is checked exactly.
    """
    if not isinstance(alpha, Quadratic):
        raise TypeError("continued fraction needs a quadratic irrational")
    if k <= 0:
        return []
    terms = cf_terms(alpha, k + 1)
    convs = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    for a in terms:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        convs.append((p1, q1))
    if verify:
        for (p, q), (_, qn) in zip(convs, convs[1:]):
            err = alpha - Fraction(p, q)
            bound = Fraction(1, q * qn)
            if not (err.cmp(bound) < 0 and err.cmp(-bound) > 0):
                raise ArithmeticError(f"convergent {p}/{q} fails the error bound")
    return convs[:k]
