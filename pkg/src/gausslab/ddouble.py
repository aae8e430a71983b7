"""Software double-double arithmetic (about 31 significant digits).

Only what the determinant and factorization checks need: the four
arithmetic operations, comparison, and exact conversion from fractions.
"""

from __future__ import annotations

import math
from fractions import Fraction

_SPLITTER = 134217729.0  # 2**27 + 1
U_DD = 2.0**-104  # unit roundoff of the format


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    return s, b - (s - a)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


class DD:
    """An unevaluated sum hi + lo with |lo| <= ulp(hi)/2."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi: float = 0.0, lo: float = 0.0):
        self.hi, self.lo = _quick_two_sum(float(hi), float(lo)) if lo else (float(hi), 0.0)

    @classmethod
    def from_fraction(cls, q: Fraction) -> "DD":
        hi = float(q)
        return cls(hi, float(q - Fraction(hi)))

    @staticmethod
    def coerce(x) -> "DD":
        if isinstance(x, DD):
            return x
        if isinstance(x, Fraction):
            return DD.from_fraction(x)
        if isinstance(x, int) and abs(x) > 2**53:
            return DD.from_fraction(Fraction(x))
        return DD(float(x))

    def __float__(self) -> float:
        return self.hi + self.lo

    def to_fraction(self) -> Fraction:
        return Fraction(self.hi) + Fraction(self.lo)

    def __repr__(self) -> str:
        return f"DD({self.hi!r}, {self.lo!r})"

    def __neg__(self) -> "DD":
        out = DD.__new__(DD)
        out.hi, out.lo = -self.hi, -self.lo
        return out

    def __abs__(self) -> "DD":
        return -self if self.hi < 0 or (self.hi == 0 and self.lo < 0) else self

    def __add__(self, other) -> "DD":
        o = DD.coerce(other)
        s, e = _two_sum(self.hi, o.hi)
        t, f = _two_sum(self.lo, o.lo)
        e += t
        s, e = _quick_two_sum(s, e)
        e += f
        out = DD.__new__(DD)
        out.hi, out.lo = _quick_two_sum(s, e)
        return out

    __radd__ = __add__

    def __sub__(self, other) -> "DD":
        return self + (-DD.coerce(other))

    def __rsub__(self, other) -> "DD":
        return DD.coerce(other) + (-self)

    def __mul__(self, other) -> "DD":
        o = DD.coerce(other)
        p, e = _two_prod(self.hi, o.hi)
        e += self.hi * o.lo + self.lo * o.hi
        out = DD.__new__(DD)
        out.hi, out.lo = _quick_two_sum(p, e)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other) -> "DD":
        o = DD.coerce(other)
        q1 = self.hi / o.hi
        r = self - o * q1
        q2 = r.hi / o.hi
        r = r - o * q2
        q3 = r.hi / o.hi
        out = DD(q1, q2)
        return out + q3

    def __rtruediv__(self, other) -> "DD":
        return DD.coerce(other) / self

    def _cmp(self, other) -> int:
        d = self - DD.coerce(other)
        return (d.hi > 0 or (d.hi == 0 and d.lo > 0)) - (d.hi < 0 or (d.hi == 0 and d.lo < 0))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.hi, self.lo))

    def sqrt(self) -> "DD":
        if self.hi <= 0.0:
            if self.hi == 0.0:
                return DD(0.0)
            raise ValueError("sqrt of negative double-double")
        x = math.sqrt(self.hi)
        # one Newton step doubles the precision
        r = self - DD(*_two_prod(x, x))
        return DD(x) + r.hi / (2.0 * x)


# pi to double-double precision
PI = DD(3.141592653589793, 1.2246467991473532e-16)


def dd_pow(x: DD, n: int) -> DD:
    result = DD(1.0)
    base = x
    while n:
        if n & 1:
            result = result * base
        base = base * base
        n >>= 1
    return result
