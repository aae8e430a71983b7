"""Total positivity of the coefficient matrix B, sign-change counting and the class of descending series."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .ddouble import DD, PI, U_DD, dd_pow
from .errors import ClassificationError, DomainError, PrecisionError
from .specfun import DEFAULT_BUDGET, PrecisionBudget, hurwitz_zeta, zeta_even_rational

EPS = float(np.finfo(float).eps)
MODES = ("standard", "extended")
TOL_SIGN = 1e-12


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise DomainError(f"precision mode must be one of {MODES}, got {mode!r}")


def _zeta_even_dd(n: int) -> DD:
    """zeta(2n) in double-double from the exact Bernoulli rational."""
    return DD.from_fraction(zeta_even_rational(n)) * dd_pow(PI, 2 * n)


# ---------------------------------------------------------------------------
# Entries


def b_entry(j: int, k: int, budget: PrecisionBudget = DEFAULT_BUDGET, mode: str = "standard"):
    """b_{j,k} = psi^(m)(1) / (2^m (2j+2)! (2k+1)!), m = 2j+2k+3.

    Since psi^(m)(1) = m! zeta(m+1) this is binom(m, 2k+1) zeta(m+1) / 2^m,
    the coefficient of x^(2k+1) in T_1 applied to x^(2j+1).
    Standard mode returns a float, extended mode a :class:`DD`.
    """
    _check_mode(mode)
    if j < 0 or k < 0:
        raise DomainError("b_entry indices must be >= 0")
    if j + k > 60:
        raise DomainError("b_entry is limited to j + k <= 60")
    m = 2 * j + 2 * k + 3
    if mode == "extended":
        return DD.from_fraction(Fraction(math.comb(m, 2 * k + 1), 2**m)) * _zeta_even_dd((m + 1) // 2)
    z = hurwitz_zeta(m + 1, 1.0, budget)
    return math.comb(m, 2 * k + 1) * z.value / 2.0**m


def hankel_moment(j: int, budget: PrecisionBudget = DEFAULT_BUDGET, mode: str = "standard"):
    """c_j = psi^(2j+3)(1) = (2j+3)! zeta(2j+4)."""
    _check_mode(mode)
    if not 0 <= j <= 60:
        raise DomainError("hankel_moment needs 0 <= j <= 60")
    if mode == "extended":
        return DD.from_fraction(Fraction(math.factorial(2 * j + 3))) * _zeta_even_dd(j + 2)
    return math.factorial(2 * j + 3) * hurwitz_zeta(2 * j + 4, 1.0, budget).value


def _entry_rel_error(mode: str, m: int) -> float:
    # relative error of one stored entry: from the zeta value (pi power) and the scalings
    return (4.0 * (m + 4) * U_DD) if mode == "extended" else 4.0 * EPS


@dataclass(frozen=True)
class MatrixSection:
    """A square section of B or of a moment Hankel matrix, with a per-entry relative error."""

    kind: str  # "B" or "hankel"
    size: int
    shift: int
    precision_mode: str
    entries: tuple
    entry_rel_error: float

    def as_float(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])


def HankelSection(size: int, shift: int = 0, precision_mode: str = "extended",
                  budget: PrecisionBudget = DEFAULT_BUDGET) -> MatrixSection:
    """The section {c_{j+l+shift}}_{j,l < size}; symmetric by construction."""
    _check_mode(precision_mode)
    if shift not in (0, 1):
        raise DomainError("Hankel shift must be 0 or 1")
    moments = [hankel_moment(i, budget, precision_mode) for i in range(2 * size - 1 + shift)]
    entries = tuple(tuple(moments[j + l + shift] for l in range(size)) for j in range(size))
    return MatrixSection("hankel", size, shift, precision_mode, entries,
                         _entry_rel_error(precision_mode, 4 * size + 4))


def b_section(size: int, precision_mode: str = "extended", budget: PrecisionBudget = DEFAULT_BUDGET) -> MatrixSection:
    """Leading size x size section of B (rows j, columns k)."""
    _check_mode(precision_mode)
    entries = tuple(tuple(b_entry(j, k, budget, precision_mode) for k in range(size)) for j in range(size))
    return MatrixSection("B", size, 0, precision_mode, entries, _entry_rel_error(precision_mode, 4 * size + 3))


# ---------------------------------------------------------------------------
# Minors


def _det(rows: list[list], zero, unit: float) -> tuple[object, float]:
    """Gaussian elimination; no pivoting while pivots stay positive, partial pivoting otherwise.

    Returns the determinant and the number of elimination stages.
    """
    a = [list(r) for r in rows]
    n = len(a)
    sign = 1
    det = None
    for c in range(n):
        p = c
        if not a[c][c] > 0:
            p = max(range(c, n), key=lambda r: abs(a[r][c]))
            if p != c:
                a[c], a[p] = a[p], a[c]
                sign = -sign
        piv = a[c][c]
        if piv == zero:
            return zero, n
        det = piv if det is None else det * piv
        for r in range(c + 1, n):
            f = a[r][c] / piv
            if f != zero:
                for cc in range(c + 1, n):
                    a[r][cc] = a[r][cc] - f * a[c][cc]
    return (det if sign > 0 else -det), n


def minor_value(section: MatrixSection, rows: Sequence[int], cols: Sequence[int]) -> tuple[float, float]:
    """(determinant, error estimate) of the minor with the given index sets.

    The estimate ((1 + delta)^r - 1) * prod(row 1-norms) bounds the effect of
    relative perturbations delta of every entry and of every elimination step
    (it is a permanent bound, which dominates the determinant's sensitivity).
    """
    r = len(rows)
    if r != len(cols) or r == 0:
        raise DomainError("minor needs equally many rows and columns")
    sub = [[section.entries[i][j] for j in cols] for i in rows]
    extended = section.precision_mode == "extended"
    zero = DD(0.0) if extended else 0.0
    unit = U_DD if extended else EPS / 2
    det, _ = _det(sub, zero, unit)
    delta = section.entry_rel_error + 3 * r * unit
    norms = math.prod(sum(abs(float(v)) for v in row) for row in sub)
    err = math.expm1(r * math.log1p(delta)) * norms
    return float(det), err


@dataclass(frozen=True)
class MinorRecord:
    order: int
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    value: float
    error_estimate: float

    @property
    def margin(self) -> float:
        return self.value - self.error_estimate


@dataclass(frozen=True)
class MinorVerdict:
    positive: bool
    worst: MinorRecord
    count: int
    indeterminate: tuple[MinorRecord, ...] = ()
    records: tuple[MinorRecord, ...] = field(default=(), repr=False, compare=False)
    exhaustive_up_to: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["order", "row_set", "col_set", "minor_value", "error_estimate"])
        for m in self.records:
            w.writerow([m.order, " ".join(map(str, m.rows)), " ".join(map(str, m.cols)), repr(m.value), repr(m.error_estimate)])
        return buf.getvalue()


EXHAUSTIVE_ORDER = 5


def minors_positive(section: MatrixSection, max_order: int, raise_on_indeterminate: bool = True) -> MinorVerdict:
    """Check every square minor up to ``max_order`` for positivity beyond its error estimate.

    All index sets are enumerated up to order 5; above that only contiguous
    minors are examined.  The worst minor is the one with the smallest ratio
    of value to error estimate.
    """
    limit = 7 if section.precision_mode == "extended" else 5
    if not 1 <= max_order <= min(limit, section.size):
        raise DomainError(f"max_order must lie in [1, {min(limit, section.size)}] for this section")
    n = section.size
    recs: list[MinorRecord] = []
    for r in range(1, max_order + 1):
        if r <= EXHAUSTIVE_ORDER:
            sets = list(itertools.combinations(range(n), r))
            pairs = itertools.product(sets, sets)
        else:
            sets = [tuple(range(s, s + r)) for s in range(n - r + 1)]
            pairs = itertools.product(sets, sets)
        for rows, cols in pairs:
            v, e = minor_value(section, rows, cols)
            recs.append(MinorRecord(r, rows, cols, v, e))
    bad = tuple(m for m in recs if abs(m.value) <= m.error_estimate)
    worst = min(recs, key=lambda m: m.value / m.error_estimate if m.error_estimate > 0 else math.inf)
    if bad and raise_on_indeterminate:
        m = bad[0]
        raise PrecisionError(f"minor rows={m.rows} cols={m.cols} = {m.value:.3e} is within its error estimate {m.error_estimate:.3e}")
    positive = not bad and all(m.value > m.error_estimate for m in recs)
    return MinorVerdict(positive, worst, len(recs), bad, tuple(recs), min(max_order, EXHAUSTIVE_ORDER))


def cholesky_positive(section: MatrixSection) -> tuple[bool, float]:
    """Symmetric positive-definite factorization; (success, smallest relative pivot margin).

    A pivot counts only if it exceeds its rounding estimate, so success
    certifies strict positive definiteness.
    """
    n = section.size
    extended = section.precision_mode == "extended"
    a = [list(r) for r in section.entries]
    unit = U_DD if extended else EPS / 2
    worst = math.inf
    for c in range(n):
        d = a[c][c]
        for k in range(c):
            d = d - a[c][k] * a[c][k]
        scale = abs(float(a[c][c])) + sum(float(a[c][k]) ** 2 for k in range(c))
        err = (section.entry_rel_error + (c + 3) * unit) * scale
        margin = (float(d) - err) / scale
        worst = min(worst, margin)
        if not float(d) > err:
            return False, margin
        root = d.sqrt() if extended else math.sqrt(d)
        a[c][c] = root
        for r in range(c + 1, n):
            s = a[r][c]
            for k in range(c):
                s = s - a[r][k] * a[c][k]
            a[r][c] = s / root
    return True, worst


# ---------------------------------------------------------------------------
# Sign changes


@dataclass(frozen=True)
class SignVerdict:
    s_minus: int
    s_plus: int
    pattern: str
    indeterminate: bool = False

    def plus_to_minus(self) -> bool:
        """At most one weak change, and every '+' entry precedes every '-' entry."""
        if self.s_plus > 1:
            return False
        last_pos = self.pattern.rfind("+")
        first_neg = self.pattern.find("-")
        return last_pos == -1 or first_neg == -1 or last_pos < first_neg

    def last_nonnegative(self) -> int:
        """Index of the last entry of the leading '+'/'0' block (-1 if the sequence starts with '-')."""
        first_neg = self.pattern.find("-")
        return (len(self.pattern) if first_neg == -1 else first_neg) - 1


def _thresholds(seq: np.ndarray, tol_sign: float, abs_tol) -> np.ndarray:
    scale = float(np.max(np.abs(seq))) if seq.size else 0.0
    thr = np.full(seq.shape, tol_sign * scale)
    if abs_tol is not None:
        thr = np.maximum(thr, np.broadcast_to(np.asarray(abs_tol, dtype=float), seq.shape))
    return thr


def sign_changes(seq: Sequence[float], tol_sign: float = TOL_SIGN, abs_tol=None) -> SignVerdict:
    """Strong (S-) and weak (S+) sign-change counts.

    Entries with |a| <= tol_sign * max|a| (or below ``abs_tol``) are treated
    as zeros: discarded for S-, assigned adversarially for S+.
    """
    if tol_sign < 0:
        raise DomainError("tol_sign must be >= 0")
    a = np.asarray(seq, dtype=float)
    thr = _thresholds(a, tol_sign, abs_tol)
    signs = np.where(a > thr, 1, np.where(a < -thr, -1, 0))
    pattern = "".join({1: "+", -1: "-", 0: "0"}[int(s)] for s in signs)
    strong = [s for s in signs if s != 0]
    s_minus = sum(1 for u, v in zip(strong, strong[1:]) if u != v)
    # best[0]: max changes ending with '+', best[1]: ending with '-'
    neg_inf = -(10**9)
    best = None
    for s in signs:
        allowed = (s >= 0, s <= 0)
        if best is None:
            best = [0 if allowed[0] else neg_inf, 0 if allowed[1] else neg_inf]
            continue
        best = [
            max(best[0], best[1] + 1) if allowed[0] else neg_inf,
            max(best[1], best[0] + 1) if allowed[1] else neg_inf,
        ]
    s_plus = max(best) if best is not None else 0
    near = (np.abs(a) > thr) & (np.abs(a) <= 10 * thr)
    return SignVerdict(int(s_minus), int(s_plus), pattern, bool(np.any(near)))


@dataclass(frozen=True)
class ClassVerdict:
    variant: str  # all_nonneg, all_nonpos, descending, not_member
    j0: Optional[int] = None

    @property
    def member(self) -> bool:
        return self.variant != "not_member"


def classify_down_class(coeffs: Sequence[float], tol_sign: float = TOL_SIGN) -> ClassVerdict:
    """Membership of a coefficient list in the descending class, with maximal j0 for case (c)."""
    a = np.asarray(coeffs, dtype=float)
    thr = _thresholds(a, tol_sign, None)
    pos = np.nonzero(a > thr)[0]
    neg = np.nonzero(a < -thr)[0]
    if neg.size == 0:
        return ClassVerdict("all_nonneg")
    if pos.size == 0:
        return ClassVerdict("all_nonpos")
    if pos[-1] < neg[0]:
        return ClassVerdict("descending", int(neg[0]) - 1)
    return ClassVerdict("not_member")


# ---------------------------------------------------------------------------
# Variation diminishing


def variation_diminishing_F(coeffs: Sequence[float], N: int = 12, budget: PrecisionBudget = DEFAULT_BUDGET,
                            tol_sign: float = TOL_SIGN) -> tuple[list[float], SignVerdict]:
    """F[k] = sum_{j<=N} b_{j,k} coeffs[j] for k = 0..N, computed in double-double.

    Entries within their error estimate of 0 count as zeros for S+; if that
    changes the verdict a :class:`PrecisionError` is raised.
    """
    c = [float(v) for v in coeffs]
    if len(c) > N + 1:
        raise DomainError("more coefficients than N + 1")
    if sign_changes(c, tol_sign).s_minus > 1:
        raise DomainError("variation_diminishing_F expects at most one strong sign change in coeffs")
    c += [0.0] * (N + 1 - len(c))
    section = b_section(N + 1, "extended", budget)
    F, err = [], []
    for k in range(N + 1):
        acc = DD(0.0)
        mag = 0.0
        for j in range(N + 1):
            if c[j] != 0.0:
                term = section.entries[j][k] * c[j]
                acc = acc + term
                mag += abs(float(term))
        F.append(float(acc))
        err.append((section.entry_rel_error + 4 * (N + 1) * U_DD) * mag + EPS * abs(float(acc)))
    plain = sign_changes(F, tol_sign)
    guarded = sign_changes(F, tol_sign, abs_tol=err)
    if (plain.s_plus <= 1 and plain.plus_to_minus()) != (guarded.s_plus <= 1 and guarded.plus_to_minus()):
        raise PrecisionError("an entry of F is not resolved by its error estimate and flips the verdict")
    return F, guarded


# ---------------------------------------------------------------------------
# Zeros of descending-class series


def one_zero_locate(f: Callable, gamma: float, samples: int = 2001) -> Optional[float]:
    """The unique sign change of f on (0, gamma), if any.

    A second bracket, or a change from negative to positive, contradicts the
    class membership and raises :class:`ClassificationError`.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    xs = np.linspace(0.0, gamma, samples + 2)[1:-1]
    v = np.asarray(f(xs), dtype=float)
    s = np.sign(v)
    nz = np.nonzero(s)[0]
    if nz.size == 0:
        return None
    changes = [i for i, k in zip(nz, nz[1:]) if s[i] != s[k]]
    if not changes:
        return None
    if len(changes) > 1:
        raise ClassificationError(f"{len(changes)} sign changes on (0, {gamma})")
    i = changes[0]
    k = nz[nz > i][0]
    if s[i] < 0:
        raise ClassificationError("sign change from negative to positive")
    root = brentq(lambda t: float(f(np.asarray(t))), xs[i], xs[k], xtol=1e-15)
    left, right = v[xs < root], v[xs > root]
    if np.any(left < 0) or np.any(right > 0):
        raise ClassificationError("values on the sample grid contradict a single + to - crossing")
    return float(root)
