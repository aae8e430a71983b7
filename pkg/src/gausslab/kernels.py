"""The Hilbert kernel K_1(t, x) = t/(1+tx), its dynamically reduced form, and related checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import MapParam
from .errors import DomainError, PoleProximityError
from .funcrep import NamedKernel
from .specfun import (
    DEFAULT_BUDGET,
    POLE_GUARD,
    PrecisionBudget,
    _lambda_combination,
    cot_half_pi_regular,
    hurwitz_zeta,
)
from .transfer import SUBTRANSFER, StepRecord, iterate_on_grid

PARTS = ("full", "I", "II")
NEUMANN_ORDER = 128


@dataclass(frozen=True)
class KernelParam:
    t: float

    def __post_init__(self):
        if not -1.0 < self.t <= 1.0:
            raise DomainError(f"kernel parameter t must lie in (-1, 1], got {self.t}")


def _ret(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def _check_part(part: str) -> None:
    if part not in PARTS:
        raise DomainError(f"kernel part must be one of {PARTS}, got {part!r}")


def hilbert_kernel(part: str, kp: KernelParam, x, guard: float = POLE_GUARD):
    """K_1 = t/(1+tx), K_1^I = t/(1-t^2x^2), K_1^II = t^2 x/(1-t^2x^2); K_1 = K_1^I - K_1^II."""
    _check_part(part)
    x = np.asarray(x, dtype=float)
    t = kp.t
    if part == "full":
        d = 1.0 + t * x
        if np.any(np.abs(d) < guard):
            raise PoleProximityError("K_1 evaluated at its pole x = -1/t")
        return _ret(t / d)
    d = 1.0 - (t * x) ** 2
    if np.any(np.abs(d) < guard):
        raise PoleProximityError("K_1 parts evaluated at |t x| = 1")
    return _ret(t / d if part == "I" else t * t * x / d)


def _k1_full(t: float, x: np.ndarray) -> np.ndarray:
    # D(x) - D(x-t) + t/(1+tx), with D(y) = (pi/2) cot(pi y/2) - 1/y regular at 0
    if t == 1.0:
        # odd in x; evaluate on x >= 0 where no cancelling poles sit nearby
        a = np.abs(x)
        val = cot_half_pi_regular(a) - np.asarray(cot_half_pi_regular(a - 1.0)) + 1.0 / (1.0 + a)
        return np.sign(x) * val
    d = 1.0 + t * x
    if np.any(np.abs(d) < POLE_GUARD):
        raise PoleProximityError("reduced kernel evaluated at x = -1/t")
    return np.asarray(cot_half_pi_regular(x)) - np.asarray(cot_half_pi_regular(x - t)) + t / d


def reduced_kernel(part: str, kp: KernelParam, x):
    """k_1(t, .) = (id - T_1) K_1(t, .) and its parts.

    k_1^I is the even part and k_1^II = (k_1(t,-x) - k_1(t,x))/2, so that
    k_1 = k_1^I - k_1^II like the unreduced kernel.
    """
    _check_part(part)
    x = np.asarray(x, dtype=float)
    t = kp.t
    if part == "full":
        return _ret(_k1_full(t, x))
    plus = _k1_full(t, x)
    minus = _k1_full(t, -x)
    if part == "I":
        return _ret(0.5 * (plus + minus))
    return _ret(0.5 * (minus - plus))


def reduced_kernel_series(t: float, x, terms: int = 200):
    """Odd part k_1^II(t, x) from its lattice series (independent of the cotangent form)."""
    x = np.asarray(x, dtype=float)
    j = np.arange(1, terms + 1, dtype=float).reshape((-1,) + (1,) * x.ndim)
    acc = 2 * x / (4 * j**2 - x**2) - x / ((2 * j - t) ** 2 - x**2) - x / ((2 * j + t) ** 2 - x**2)
    return _ret(t * t * x / (1 - t * t * x * x) + np.sum(acc, axis=0))


def kappa_alpha(alpha: float, x, guard: float = POLE_GUARD):
    """kappa_alpha(x) = alpha / (alpha^2 - x^2)."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(np.abs(x) - alpha) < guard):
        raise PoleProximityError(f"kappa_alpha evaluated within {guard} of +-{alpha}")
    return _ret(alpha / (alpha * alpha - x * x))


# ---------------------------------------------------------------------------
# Taylor coefficients of the odd reduced kernel


@dataclass(frozen=True)
class TaylorSeq:
    """Coefficients of k_1^II(t, x) = sum_j raw[j] x^(2j+1), and (2-t)^(2j+2) raw[j]."""

    t: float
    raw: tuple[float, ...]
    scaled: tuple[float, ...]
    scaled_error: tuple[float, ...] = field(default=(), compare=False)

    @property
    def jmax(self) -> int:
        return len(self.raw) - 1

    def strictly_decreasing_from(self, j0: int = 1) -> bool:
        s = self.scaled
        e = self.scaled_error or (0.0,) * len(s)
        return all(s[j + 1] + e[j + 1] < s[j] - e[j] for j in range(j0, len(s) - 1))

    def distance_to_limit(self) -> float:
        """|scaled[jmax] + 1|; the scaled sequence tends to -1."""
        return abs(self.scaled[-1] + 1.0)


def kappa0_closed(t: float) -> float:
    """pi^2/12 + 1/t^2 - (pi^2/4)/sin^2(pi t/2) + t^2."""
    return math.pi**2 / 12 + 1 / t**2 - (math.pi**2 / 4) / math.sin(math.pi * t / 2) ** 2 + t**2


def taylor_kappa(kp: KernelParam, jmax: int, budget: PrecisionBudget = DEFAULT_BUDGET) -> TaylorSeq:
    """Taylor coefficients from Hurwitz zeta values.

    raw[j] = t^s - (2-t)^-s + 2^-s {2 zeta(s,1) - zeta(s,2-t/2) - zeta(s,1+t/2)}, s = 2j+2,
    and scaled[j] = (t(2-t))^s - 1 + Lambda_{t/2}(s).
    """
    t = kp.t
    if not 0.0 < t < 1.0:
        raise DomainError("taylor_kappa needs 0 < t < 1")
    if jmax < 1:
        raise DomainError("jmax must be >= 1")
    raw, scaled, err = [], [], []
    for j in range(jmax + 1):
        s = 2.0 * j + 2.0
        z1 = hurwitz_zeta(s, 1.0, budget)
        z2 = hurwitz_zeta(s, 2.0 - t / 2, budget)
        z3 = hurwitz_zeta(s, 1.0 + t / 2, budget)
        bracket = 2 * z1.value - z2.value - z3.value
        raw.append(t**s - (2.0 - t) ** (-s) + 2.0 ** (-s) * bracket)
        lam = _lambda_combination(t / 2, s, budget)
        scaled.append((t * (2.0 - t)) ** s - 1.0 + lam.value)
        err.append(lam.error_bound + 4 * np.finfo(float).eps)
    return TaylorSeq(t, tuple(raw), tuple(scaled), tuple(err))


# ---------------------------------------------------------------------------
# Neumann decomposition


@dataclass
class _Iterates:
    series: list
    bounds: list


def _iterates(fn, n: int, N: int, order: int) -> _Iterates:
    records: list[StepRecord] = []
    grids = iterate_on_grid(
        SUBTRANSFER, MapParam(1.0), fn, n, N, order=order, tail_fraction=None, records=records
    )
    series = [fn] + [g.to_chebseries() for g in grids[1:]]
    return _Iterates(series, [r.accumulated_bound for r in records])


def neumann_partial(t: float, n: int, x, N: int = 2000, order: int = NEUMANN_ORDER):
    """(lhs, rhs, bound) for sum_{j<n} T_1^j k_1^II(t,.) = K_1^II(t,.) - T_1^n K_1^II(t,.).

    Both sides are computed independently by grid iteration; ``bound`` adds up
    the propagated truncation and refitting bounds of the two computations.
    """
    if not 1 <= n <= 8:
        raise DomainError("neumann_partial needs 1 <= n <= 8")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 0.9 + 1e-15):
        raise DomainError("neumann_partial evaluates on I_0.9")
    kp = KernelParam(t)
    small = _iterates(NamedKernel("k1_II", t=t), n - 1, N, order)
    lhs = sum(np.asarray(s(x)) for s in small.series)
    big = _iterates(NamedKernel("K1_II", t=t), n, N, order)
    rhs = np.asarray(hilbert_kernel("II", kp, x)) - np.asarray(big.series[n](x))
    bound = sum(small.bounds) + big.bounds[n]
    return _ret(lhs), _ret(rhs), float(bound)


@dataclass(frozen=True)
class Figure1Data:
    t: float
    x: tuple[float, ...]
    k1ii: tuple[float, ...]
    partial_sums: tuple[tuple[float, ...], ...]
    deviations: tuple[float, ...]
    bounds: tuple[float, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "K1II"] + [f"partial_sum_N{k}" for k in range(len(self.partial_sums))])
        for i, xv in enumerate(self.x):
            w.writerow([repr(xv), repr(self.k1ii[i])] + [repr(ps[i]) for ps in self.partial_sums])
        return buf.getvalue()

    def strictly_decreasing(self) -> bool:
        d = self.deviations
        return all(d[k + 1] < d[k] for k in range(len(d) - 1))

    def final_ratio(self) -> float:
        return self.deviations[-1] / self.deviations[0]


def figure1(t: float = 0.5, n_max: int = 5, eta: float = 0.9, points: int = 181, N: int = 2000,
            order: int = NEUMANN_ORDER) -> Figure1Data:
    """K_1^II(t, .) and the partial sums sum_{j<=n} T_1^j k_1^II(t, .), n = 0..n_max, on I_eta.

    ``deviations[n]`` is the sup over the sample points of |K_1^II - partial sum n|.
    """
    xs = np.linspace(-eta, eta, points)
    it = _iterates(NamedKernel("k1_II", t=t), n_max, N, order)
    K = np.asarray(hilbert_kernel("II", KernelParam(t), xs))
    partial, sums, devs = np.zeros_like(xs), [], []
    for s in it.series:
        partial = partial + np.asarray(s(xs))
        sums.append(tuple(partial.tolist()))
        devs.append(float(np.max(np.abs(K - partial))))
    bounds = tuple(float(sum(it.bounds[: k + 1])) for k in range(n_max + 1))
    return Figure1Data(t, tuple(xs.tolist()), tuple(K.tolist()), tuple(sums), tuple(devs), bounds)


# ---------------------------------------------------------------------------
# Uniform control of summands


@dataclass(frozen=True)
class SummandVerdict:
    t: float
    j_max: int
    positive: bool
    dominated: bool
    monotone_difference: bool
    min_positivity_margin: float
    min_domination_margin: float
    max_numerical_bound: float

    @property
    def passed(self) -> bool:
        return self.positive and self.dominated and self.monotone_difference


def default_summand_grid(points: int = 99) -> np.ndarray:
    return np.linspace(0.01, 0.99, points)


def summand_bounds_check(t: float, j_max: int = 6, grid=None, N: int = 2000,
                         order: int = NEUMANN_ORDER) -> SummandVerdict:
    """0 < T_1^j k_1^II(t,.) < T_1^j k_1^II(1,.) on the grid for j <= j_max, with margins.

    Also checks that k_1^II(1,.) - k_1^II(t,.) increases along the grid.
    """
    if not 0.0 < t < 1.0:
        raise DomainError("summand_bounds_check needs 0 < t < 1")
    if not 0 <= j_max <= 6:
        raise DomainError("j_max is capped at 6")
    xs = default_summand_grid() if grid is None else np.asarray(grid, dtype=float)
    if np.any(xs < 0.01 - 1e-15) or np.any(xs > 0.99 + 1e-15):
        raise DomainError("grid must lie in [0.01, 0.99]")
    a = _iterates(NamedKernel("k1_II", t=t), j_max, N, order)
    b = _iterates(NamedKernel("k1_II", t=1.0), j_max, N, order)
    pos_margin = dom_margin = math.inf
    positive = dominated = True
    max_bound = 0.0
    for j in range(j_max + 1):
        av = np.asarray(a.series[j](xs))
        bv = np.asarray(b.series[j](xs))
        ea, eb = a.bounds[j], b.bounds[j]
        max_bound = max(max_bound, ea, eb)
        pm = float(np.min(av)) - ea
        dm = float(np.min(bv - av)) - ea - eb
        pos_margin = min(pos_margin, pm)
        dom_margin = min(dom_margin, dm)
        positive &= pm > 0.0
        dominated &= dm > 0.0
    diff = np.asarray(reduced_kernel("II", KernelParam(1.0), xs)) - np.asarray(reduced_kernel("II", KernelParam(t), xs))
    monotone = bool(np.all(np.diff(diff) > 0.0))
    return SummandVerdict(t, j_max, positive, dominated, monotone, pos_margin, dom_margin, max_bound)
