"""Hurwitz zeta, polygamma and related special values with error bounds.

Every value is returned as a :class:`SpecialValue` carrying an absolute error
bound.  The Hurwitz zeta tail is bracketed between two integrals of the
(convex, decreasing) summand, so the bound is a genuine enclosure and no
asymptotic expansion is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import BudgetExhaustedError, DomainError, PoleProximityError

EPS = np.finfo(float).eps
POLE_GUARD = 1e-8

# chunk size for the direct summation (bounds peak memory)
_CHUNK = 1 << 20


@dataclass(frozen=True)
class PrecisionBudget:
    rel_tol: float = 1e-14
    max_terms: int = 10**7

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise DomainError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_terms < 16:
            raise DomainError(f"max_terms must be >= 16, got {self.max_terms}")


DEFAULT_BUDGET = PrecisionBudget()


@dataclass(frozen=True)
class SpecialValue:
    value: float
    error_bound: float

    def __float__(self) -> float:
        return self.value

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound


def _tail_bracket(s: float, a: float) -> tuple[float, float]:
    """Enclosure of sum_{k>=0} (a+k)^{-s} for a > 1/2.

    For a convex decreasing summand f the trapezoid rule overestimates and the
    midpoint rule underestimates the integral, which gives

        int_a^inf f + f(a)/2  <=  sum_{k>=0} f(a+k)  <=  int_{a-1/2}^inf f.
    """
    lo = a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s)
    hi = (a - 0.5) ** (1.0 - s) / (s - 1.0)
    return lo, hi


def _direct_sum(s: float, x: float, K: int) -> float:
    partials = []
    for start in range(0, K, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, K), dtype=float)
        partials.append(math.fsum(np.power(x + k, -s)))
    return math.fsum(partials)


@lru_cache(maxsize=65536)
def _hurwitz_cached(s: float, x: float, rel_tol: float, max_terms: int) -> SpecialValue:
    # lower bound on the result: the first term, and the integral from 0
    floor_value = max(x ** (-s), x ** (1.0 - s) / (s - 1.0))
    target = rel_tol * floor_value
    if target <= 8.0 * EPS * floor_value:
        raise BudgetExhaustedError(f"rel_tol={rel_tol} is below the rounding floor")
    # half-width of the bracket is ~ s (x+K)^{-s-1} / 16; solve for K, then verify
    guess = (s / (16.0 * 0.5 * target)) ** (1.0 / (s + 1.0)) - x
    K = max(int(math.ceil(guess)), 1)
    while True:
        if K > max_terms:
            raise BudgetExhaustedError(
                f"zeta({s}, {x}) needs more than max_terms={max_terms} terms for rel_tol={rel_tol}"
            )
        lo, hi = _tail_bracket(s, x + K)
        half_width = 0.5 * (hi - lo)
        if half_width <= 0.5 * target:
            break
        K = int(K * 1.5) + 1
    head = _direct_sum(s, x, K)
    value = head + 0.5 * (lo + hi)
    # fsum rounds the computed terms exactly; each power carries a few ulps
    rounding = 4.0 * EPS * abs(value)
    return SpecialValue(float(value), float(half_width + rounding))


def hurwitz_zeta(s: float, x: float, budget: PrecisionBudget = DEFAULT_BUDGET) -> SpecialValue:
    """zeta(s, x) = sum_{k>=0} (x+k)^{-s} for s >= 2, x > 0."""
    s = float(s)
    x = float(x)
    if not s >= 2.0:
        raise DomainError(f"hurwitz_zeta requires s >= 2, got s={s}")
    if not x > 0.0:
        raise DomainError(f"hurwitz_zeta requires x > 0, got x={x}")
    return _hurwitz_cached(s, x, budget.rel_tol, budget.max_terms)


def polygamma(m: int, x: float, budget: PrecisionBudget = DEFAULT_BUDGET) -> SpecialValue:
    """psi^(m)(x) = (-1)^(m+1) m! zeta(m+1, x) for integer m >= 1."""
    if int(m) != m or m < 1:
        raise DomainError(f"polygamma order must be an integer >= 1, got {m}")
    m = int(m)
    z = hurwitz_zeta(m + 1, x, budget)
    scale = math.factorial(m)
    sign = 1.0 if m % 2 == 1 else -1.0
    return SpecialValue(sign * scale * z.value, scale * z.error_bound)


def lambda_tau(tau: float, s: float, budget: PrecisionBudget = DEFAULT_BUDGET) -> SpecialValue:
    """(1-tau)^s {2 zeta(s,1) - zeta(s,2-tau) - zeta(s,1+tau)} for 0 < tau <= 1/2, s >= 3."""
    if not 0.0 < tau <= 0.5:
        raise DomainError(f"lambda_tau requires 0 < tau <= 1/2, got {tau}")
    if not s >= 3.0:
        raise DomainError(f"lambda_tau requires s >= 3, got {s}")
    return _lambda_combination(tau, s, budget)


def _lambda_combination(tau: float, s: float, budget: PrecisionBudget) -> SpecialValue:
    # shared with the Taylor-coefficient code, which also needs s = 2
    z1 = hurwitz_zeta(s, 1.0, budget)
    z2 = hurwitz_zeta(s, 2.0 - tau, budget)
    z3 = hurwitz_zeta(s, 1.0 + tau, budget)
    scale = (1.0 - tau) ** s
    bracket = 2.0 * z1.value - z2.value - z3.value
    err = scale * (2.0 * z1.error_bound + z2.error_bound + z3.error_bound)
    err += 4.0 * EPS * scale * (2.0 * z1.value + z2.value + z3.value)
    return SpecialValue(float(scale * bracket), float(err))


def _reduce_mod2(x):
    """Representative of x modulo 2 in [-1, 1]."""
    return x - 2.0 * np.round(np.asarray(x, dtype=float) / 2.0)


def cot_half_pi(x, guard: float = POLE_GUARD):
    """(pi/2) cot(pi x / 2), refusing arguments within `guard` of an even integer.

    Works elementwise on arrays; scalars come back as float.
    """
    r = _reduce_mod2(x)
    if np.any(np.abs(r) < guard):
        raise PoleProximityError(f"cot_half_pi argument within {guard} of an even integer")
    out = (math.pi / 2.0) / np.tan(0.5 * math.pi * r)
    return float(out) if np.ndim(out) == 0 else out


# zeta(2n) / pi^(2n) for n = 1..6
_ZETA_EVEN_OVER_PI = (
    1.0 / 6.0,
    1.0 / 90.0,
    1.0 / 945.0,
    1.0 / 9450.0,
    1.0 / 93555.0,
    691.0 / 638512875.0,
)
_ZETA_EVEN = tuple(c * math.pi ** (2 * (n + 1)) for n, c in enumerate(_ZETA_EVEN_OVER_PI))
REMOVABLE_WINDOW = 1e-3


def cot_half_pi_regular(y):
    """(pi/2) cot(pi y / 2) - 1/y, analytic on |y| < 2.

    Inside the removable window around 0 a six-term Taylor expansion replaces
    the cancelling difference.  Equals the symmetric lattice sum
    sum_{j != 0} 1/(y + 2j).
    """
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    near = np.abs(y) < REMOVABLE_WINDOW
    if np.any(near):
        h = 0.5 * y[near]
        acc = np.zeros_like(h)
        for n in range(len(_ZETA_EVEN), 0, -1):
            acc = acc * h * h + _ZETA_EVEN[n - 1]
        out[near] = -acc * h
    far = ~near
    if np.any(far):
        yf = y[far]
        r = _reduce_mod2(yf)
        if np.any(np.abs(r) < POLE_GUARD):
            raise PoleProximityError("cot_half_pi_regular argument at a pole (even integer != 0)")
        out[far] = (math.pi / 2.0) / np.tan(0.5 * math.pi * r) - 1.0 / yf
    return float(out) if out.ndim == 0 else out


_BERNOULLI = [Fraction(1)]


def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n (B_1 = -1/2) as an exact fraction."""
    for m in range(len(_BERNOULLI), n + 1):
        acc = sum(math.comb(m + 1, k) * _BERNOULLI[k] for k in range(m))
        _BERNOULLI.append(-acc / (m + 1))
    return _BERNOULLI[n]


def zeta_even_rational(n: int) -> Fraction:
    """The rational r with zeta(2n) = r * pi^(2n), n >= 1."""
    if n < 1:
        raise DomainError("zeta_even_rational needs n >= 1")
    b = bernoulli(2 * n)
    r = abs(b) * Fraction(2) ** (2 * n - 1) / math.factorial(2 * n)
    return r
