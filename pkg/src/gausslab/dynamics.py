"""Gauss-type interval maps, their orbits and wandering sets, and the doubling map."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class MapParam:
    beta: float

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")


def even_frac(x):
    """The representative of x modulo 2 in (-1, 1]; odd integers map to 1."""
    xa = np.asarray(x, dtype=float)
    r = xa - 2.0 * np.ceil((xa - 1.0) / 2.0)
    return float(r) if r.ndim == 0 else r


def tau(p: MapParam, x):
    """tau_beta(x) = even_frac(-beta/x) for x in (-1, 1] without 0."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa == 0.0):
        raise DomainError("tau is undefined at x = 0")
    if np.any(xa <= -1.0) or np.any(xa > 1.0):
        raise DomainError("tau expects arguments in (-1, 1]")
    return even_frac(-p.beta / xa)


@dataclass(frozen=True)
class OrbitRecord:
    start: float
    points: tuple[float, ...]
    entered_attractor_at: Optional[int] = None
    hit_zero: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "point"])
        for k, v in enumerate(self.points):
            w.writerow([k, repr(v)])
        return buf.getvalue()


def orbit(p: MapParam, x: float, n: int) -> OrbitRecord:
    """points[k] = tau^k(x) for k = 0..n.

    An orbit that lands exactly on 0 stops there with ``hit_zero`` set.
    """
    if n < 1:
        raise DomainError("orbit length n must be >= 1")
    x = float(x)
    if not -1.0 < x <= 1.0:
        raise DomainError(f"orbit start must lie in (-1, 1], got {x}")
    pts = [x]
    hit_zero = False
    for _ in range(n):
        if pts[-1] == 0.0:
            hit_zero = True
            break
        pts.append(float(tau(p, pts[-1])))
    entered = None
    if p.beta < 1.0:
        for k, v in enumerate(pts):
            if abs(v) > p.beta:
                entered = k
                break
    return OrbitRecord(x, tuple(pts), entered, hit_zero)


def wandering_grid(p: MapParam, samples: int) -> np.ndarray:
    """Cell-centred uniform grid on [-beta, beta]."""
    h = 2.0 * p.beta / samples
    return -p.beta + h * (np.arange(samples) + 0.5)


def wandering_measure(p: MapParam, N: int, samples: int = 100_000) -> float:
    """Grid estimate of |E_{beta,N}|: points of [-beta, beta] whose first N-1 images stay there."""
    if p.beta >= 1.0:
        raise DomainError("wandering_measure needs beta < 1")
    if N < 1:
        raise DomainError("N must be >= 1")
    if samples < 1000:
        raise DomainError("samples must be >= 1000")
    y = wandering_grid(p, samples)
    alive = np.ones(samples, dtype=bool)
    for _ in range(N - 1):
        alive &= y != 0.0
        safe = np.where(alive, y, 1.0)
        y = even_frac(-p.beta / safe)
        alive &= np.abs(y) <= p.beta
    return 2.0 * p.beta * int(alive.sum()) / samples


@dataclass(frozen=True)
class FourierVector:
    """Coefficients g_hat(k) for k = -M..M, stored in index order."""

    values: tuple[complex, ...]

    def __post_init__(self):
        if len(self.values) % 2 != 1:
            raise DomainError("FourierVector needs an odd number of entries (indices -M..M)")
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))

    @property
    def M(self) -> int:
        return len(self.values) // 2

    @classmethod
    def from_function(cls, M: int, fn: Callable[[int], complex]) -> "FourierVector":
        return cls(tuple(fn(k) for k in range(-M, M + 1)))

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.M:
            return 0j
        return self.values[k + self.M]

    def indices(self) -> range:
        return range(-self.M, self.M + 1)


def doubling_decimate(coeffs: FourierVector, n: int) -> FourierVector:
    """Fourier coefficients of the n-th transfer iterate of the doubling map: k -> g_hat(2^n k)."""
    if n < 1:
        raise DomainError("decimation power n must be >= 1")
    step = 1 << n
    return FourierVector(tuple(coeffs[step * k] for k in coeffs.indices()))
