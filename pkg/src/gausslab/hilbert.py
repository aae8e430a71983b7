"""The explicit Hilbert pair g_gamma, Hg_gamma and the periodized gap witnessing norm expansion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as _zeta

from .errors import DomainError, TailBudgetError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class GammaProfile:
    gamma: float
    tail_terms: int = 1000

    def __post_init__(self):
        if not 0.0 < self.gamma <= 0.5:
            raise DomainError(f"gamma must lie in (0, 0.5], got {self.gamma}")
        if self.tail_terms < 1:
            raise DomainError("tail_terms must be positive")


def _ret(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def g_gamma(prof: GammaProfile, x):
    """x sqrt(gamma^2 - x^2) on |x| <= gamma, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    g = prof.gamma
    inside = np.abs(x) <= g
    return _ret(np.where(inside, x * np.sqrt(np.clip(g * g - x * x, 0.0, None)), 0.0))


def hg_gamma(prof: GammaProfile, x):
    """Hilbert transform of g_gamma: x^2 - gamma^2/2 - 1_{|x|>gamma} |x| sqrt(x^2 - gamma^2).

    Outside the support the cancelling difference is rewritten as
    (gamma^2/2) r / (1 + sqrt(1 - r))^2 with r = gamma^2/x^2.
    """
    x = np.asarray(x, dtype=float)
    g2 = prof.gamma**2
    inside = np.abs(x) <= prof.gamma
    r = np.where(inside, 1.0, g2 / np.where(inside, 1.0, x * x))
    outer = 0.5 * g2 * r / (1.0 + np.sqrt(1.0 - r)) ** 2
    return _ret(np.where(inside, x * x - 0.5 * g2, outer))


@dataclass(frozen=True)
class PeriodizedValue:
    """Lattice sum with its asymptotic tail added; ``error_bound`` covers the tail model."""

    value: float
    tail_estimate: float
    error_bound: float
    terms: int


def periodized_sum(prof: GammaProfile, x: float) -> PeriodizedValue:
    """sum over j != 0 of Hg_gamma(x + 2j), summed symmetrically in j.

    The partial sum runs over 0 < |j| <= J with J = tail_terms + ceil(|x|/2).
    The remaining terms are replaced by their leading asymptotics
    gamma^4 / (8 y^2), summed in closed form with Hurwitz zeta values.
    """
    if prof.tail_terms < 100:
        raise DomainError("periodized_sum needs tail_terms >= 100")
    x = float(x)
    J = prof.tail_terms + int(math.ceil(abs(x) / 2.0))
    j = np.concatenate([np.arange(-J, 0), np.arange(1, J + 1)]).astype(float)
    vals = np.asarray(hg_gamma(prof, x + 2.0 * j))
    head = math.fsum(vals)
    g4 = prof.gamma**4
    qp, qm = J + 1.0 + x / 2.0, J + 1.0 - x / 2.0
    tail = g4 / 32.0 * (_zeta(2.0, qp) + _zeta(2.0, qm))
    # next term of Hg at large y is gamma^6 / (16 y^4); bound it by twice that
    err = 2.0 * prof.gamma**6 / 256.0 * (_zeta(4.0, qp) + _zeta(4.0, qm)) + 4 * EPS * len(j) * max(abs(head), g4)
    return PeriodizedValue(float(head + tail), float(tail), float(err), int(J))


@dataclass(frozen=True)
class GapResult:
    gamma: float
    D: float
    D_minus_gamma2: float
    predicted: float
    tail_estimate: float
    error_bound: float


def norm_gap(prof: GammaProfile, N: int = 1000) -> GapResult:
    """D(gamma) = P(gamma + 2N) - P(2) for the periodized Hilbert transform P.

    The first point stands in for the limit N -> infinity; since P is
    2-periodic the surrogate misses only the single term Hg(gamma + 2N).
    """
    g = prof.gamma
    if g > 0.2:
        raise DomainError("norm_gap is meant for gamma <= 0.2")
    if N < 1:
        raise DomainError("N must be positive")
    hi = periodized_sum(prof, g + 2.0 * N)
    lo = periodized_sum(prof, 2.0)
    tail = max(hi.tail_estimate, lo.tail_estimate)
    if tail > g**4 / 320.0:
        raise TailBudgetError(f"tail estimate {tail:.3e} exceeds gamma^4/320; raise tail_terms")
    # the N-surrogate misses Hg(gamma + 2N) ~ gamma^4 / (8 (2N)^2)
    surrogate = g**4 / (8.0 * (g + 2.0 * N) ** 2)
    D = hi.value - lo.value
    return GapResult(g, D, D - g * g, g**4 / 32.0, tail, hi.error_bound + lo.error_bound + surrogate)
