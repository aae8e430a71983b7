"""Transfer and subtransfer operators of the Gauss-type maps.

Three ways to apply an operator are offered: a truncated lattice sum with a
certified tail bound, closed forms on simple poles (via the regularized
half-period cotangent), and iteration on Chebyshev grids with refitting.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta as _zeta

from .dynamics import MapParam, even_frac
from .errors import ConfigError, DomainError, PoleProximityError, TailBudgetError
from .funcrep import (
    GRID_ORDER,
    ChebSeries,
    FunctionRep,
    GridFunction,
    PoleSum,
    l1_norm,
    lobatto_nodes,
    _coeffs_from_lobatto_values,
)
from .specfun import POLE_GUARD, cot_half_pi_regular

EPS = np.finfo(float).eps
MODES = ("subtransfer", "full_transfer", "complement_V")


@dataclass(frozen=True)
class OperatorMode:
    kind: str = "subtransfer"

    def __post_init__(self):
        if self.kind not in MODES:
            raise ConfigError(f"unknown operator mode {self.kind!r}; choose from {MODES}")


SUBTRANSFER = OperatorMode("subtransfer")
FULL_TRANSFER = OperatorMode("full_transfer")
COMPLEMENT_V = OperatorMode("complement_V")


@dataclass(frozen=True)
class TruncatedApplication:
    value: float
    tail_bound: float
    order_N: int


def _evaluator(f) -> Callable:
    if isinstance(f, GridFunction):
        return f.to_chebseries()
    if isinstance(f, (FunctionRep,)) or callable(f):
        return f
    raise DomainError(f"cannot evaluate object of type {type(f).__name__}")


def _sup_near_zero(f, delta: float) -> float:
    if isinstance(f, FunctionRep):
        return f.sup_bound(-delta, delta)
    xs = np.linspace(-delta, delta, 65)
    return 1.05 * float(np.max(np.abs(np.asarray(f(xs), dtype=float))))


def lattice_tail_sum(N: int, power: float = 2.0) -> float:
    """sum_{|j|>N} (2|j|-1)^(-power) = 2^(1-power) zeta(power, N+1/2)."""
    return float(2.0 ** (1.0 - power) * _zeta(power, N + 0.5))


def _taylor_data(f, h: float):
    """f(0), f'(0) with an error estimate, and a bound for |f''| near 0."""
    pts = np.array([-2 * h, -h, 0.0, h, 2 * h])
    v = np.asarray(f(pts), dtype=float)
    f0 = float(v[2])
    d1 = (v[3] - v[1]) / (2 * h)
    d2 = (v[4] - v[0]) / (4 * h)
    fp = (4 * d1 - d2) / 3.0
    fp_err = abs(d1 - d2) + 8 * EPS * float(np.max(np.abs(v))) / h
    s1 = (v[3] - 2 * v[2] + v[1]) / h**2
    s2 = (v[4] - 2 * v[2] + v[0]) / (4 * h**2)
    m2 = 2.0 * max(abs(s1), abs(s2)) + abs(s1 - s2) + 16 * EPS * float(np.max(np.abs(v))) / h**2
    return f0, fp, fp_err, m2


def apply_truncated_array(
    mode: OperatorMode,
    p: MapParam,
    f,
    xs,
    N: int,
    correction: bool = False,
    support: tuple[float, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized truncated application; returns (values, tail_bounds) over ``xs``."""
    if N < 2:
        raise DomainError(f"truncation order N must be >= 2, got {N}")
    ev = _evaluator(f)
    x = np.atleast_1d(np.asarray(xs, dtype=float))
    beta = p.beta
    j = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)]).astype(float)

    if mode.kind == "complement_V":
        if np.any(np.abs(x) <= 1.0):
            raise DomainError("complement_V acts on |x| > 1")
        args = -beta / x[:, None] + 2.0 * j[None, :]
        vals = np.asarray(ev(args.ravel()), dtype=float).reshape(args.shape)
        out = np.array([math.fsum(row) for row in vals]) * beta / x**2
        if support is None:
            tails = np.full_like(x, math.inf)
        else:
            a, b = support
            # largest |j| whose argument can fall in [a, b]
            reach = (np.maximum(abs(a), abs(b)) + beta) / 2.0 + 1.0
            tails = np.full_like(x, 0.0 if reach <= N else math.inf)
        return out, tails

    if np.any(np.abs(x) > 1.0):
        raise DomainError("transfer operators act on x in [-1, 1]")
    u = x[:, None] + 2.0 * j[None, :]
    args = -beta / u
    vals = np.asarray(ev(args.ravel()), dtype=float).reshape(args.shape)
    terms = beta / u**2 * vals
    out = np.array([math.fsum(row) for row in terms])
    # each term carries a few rounding errors from the division and from f
    rounding = 16 * EPS * np.sum(np.abs(terms), axis=1)
    if mode.kind == "full_transfer":
        # j = 0: the preimage -beta/x lies in (-1, 1] only when |x| >= beta
        inside = np.abs(x) >= beta
        if np.any(inside):
            x0 = x[inside]
            extra = beta / x0**2 * np.asarray(ev(-beta / x0), dtype=float)
            out[inside] += extra
            rounding[inside] += 16 * EPS * np.abs(extra)

    delta = beta / (2 * N + 1)
    if not correction:
        sup = _sup_near_zero(ev, delta)
        tails = sup * beta * lattice_tail_sum(N, 2.0) + rounding
        return out, tails

    h = min(1e-3, 0.25 * beta)
    f0, fp, fp_err, m2 = _taylor_data(ev, h)
    qp = N + 1.0 + 0.5 * x
    qm = N + 1.0 - 0.5 * x
    corr = beta * f0 / 4.0 * (_zeta(2.0, qp) + _zeta(2.0, qm)) - beta**2 * fp / 8.0 * (
        _zeta(3.0, qp) - _zeta(3.0, qm)
    )
    out = out + corr
    rem = 0.5 * m2 * beta**3 * lattice_tail_sum(N, 4.0) + fp_err * beta**2 * lattice_tail_sum(N, 3.0)
    tails = rem + 8 * EPS * np.abs(corr) + rounding
    return out, tails


def apply_truncated(
    mode: OperatorMode,
    p: MapParam,
    f,
    x: float,
    N: int,
    correction: bool = False,
    support: tuple[float, float] | None = None,
) -> TruncatedApplication:
    """sum over 0 < |j| <= N (j = 0 too for the full transfer) of beta/(x+2j)^2 f(-beta/(x+2j)).

    The tail bound is sup |f| on the tail argument set [-beta/(2N+1), beta/(2N+1)]
    times beta * sum_{|j|>N} (2|j|-1)^-2.  With ``correction`` the tail is
    replaced by its second-order Taylor model (Hurwitz zeta lattice sums) and
    the bound covers the remaining third-order term.  For the complement
    operator V_beta pass the support of v; outside it the sum is exact.
    """
    vals, tails = apply_truncated_array(mode, p, f, [x], N, correction, support)
    return TruncatedApplication(float(vals[0]), float(tails[0]), int(N))


def regular_cot(y):
    """D(y) = sum_{j != 0} 1/(y + 2j) = (pi/2) cot(pi y/2) - 1/y."""
    return cot_half_pi_regular(y)


def apply_pole_closed(p: MapParam, pole: float, x):
    """T_beta applied to 1/(. - pole), in closed form D(x + beta/pole) - D(x).

    A pole at 0 (the function 1/x) gives -D(x).
    """
    x = np.asarray(x, dtype=float)
    if pole == 0.0:
        out = -np.asarray(regular_cot(x))
    else:
        out = np.asarray(regular_cot(x + p.beta / pole)) - np.asarray(regular_cot(x))
    return float(out) if out.ndim == 0 else out


def apply_polesum_closed(p: MapParam, f: PoleSum, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for w, q in f.terms:
        out = out + w * np.asarray(apply_pole_closed(p, q, x))
    return float(out) if out.ndim == 0 else out


def apply_J(p: MapParam, f, x):
    """The involution (beta/x^2) f(-beta/x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise DomainError("apply_J is undefined at x = 0")
    ev = _evaluator(f)
    out = p.beta / x**2 * np.asarray(ev(-p.beta / x), dtype=float)
    return float(out) if out.ndim == 0 else out


def telescoping_fixed_point(p: MapParam) -> PoleSum:
    """The pole pair 1/(x - x1) - 1/(x - x2) fixed by T_beta.

    The poles satisfy x1 x2 = -beta and beta/x2 - beta/x1 is an even integer,
    so the cotangent sums telescope.
    """
    b = p.beta
    if b < 1.0:
        r = math.sqrt(1.0 - b)
        x1, x2 = 1.0 + r, -1.0 + r
    else:
        x1, x2 = 2.0 + math.sqrt(3.0), -2.0 + math.sqrt(3.0)
    return PoleSum(((1.0, x1), (-1.0, x2)))


# ---------------------------------------------------------------------------
# Q_beta


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _integrate_I1(kernel: Callable, f, n: int = 200):
    """int_{-1}^{1} kernel(t) f(t) dt by Gauss-Legendre at n and 2n points; (value, error)."""
    ev = _evaluator(f)
    out = []
    for m in (n, 2 * n):
        t, w = _gauss_legendre(m)
        ft = np.asarray(ev(t), dtype=float)
        out.append(np.tensordot(kernel(t) * ft, w, axes=([-1], [0])))
    return out[1], np.abs(out[1] - out[0])


def apply_Q(p: MapParam, f, x):
    """(1/pi) int_{I_1} t/(beta + t x) f(t) dt for |x| < beta."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= p.beta):
        raise DomainError("apply_Q needs |x| < beta")
    xa = np.atleast_1d(x)
    val, _ = _integrate_I1(lambda t: t[None, :] / (p.beta + t[None, :] * xa[:, None]), f)
    out = val / math.pi
    return float(out[0]) if x.ndim == 0 else out


def apply_TQ(f, x):
    """T_beta Q_beta f(x) = (1/pi) int f(t) [D(x-t) - D(x)] dt, for every beta."""
    x = np.asarray(x, dtype=float)
    xa = np.atleast_1d(x)
    dx = np.asarray(regular_cot(xa))

    def kern(t):
        return np.asarray(regular_cot(xa[:, None] - t[None, :])) - dx[:, None]

    val, _ = _integrate_I1(kern, f)
    out = val / math.pi
    return float(out[0]) if x.ndim == 0 else out


# ---------------------------------------------------------------------------
# Grid iteration


def _kappa_weight(y):
    return 1.0 - np.asarray(y, dtype=float) ** 2


@dataclass(frozen=True)
class StepRecord:
    step: int
    eta: float
    l1_norm: float
    weak_l1: float
    max_tail_bound: float
    accumulated_bound: float


def iterate_on_grid(
    mode: OperatorMode,
    p: MapParam,
    f0,
    n_steps: int,
    N: int,
    *,
    order: int | None = None,
    eta: float = 1.0,
    weighted: bool = False,
    correction: bool = True,
    tail_fraction: float | None = 1e-3,
    records: list | None = None,
) -> list[GridFunction]:
    """Trajectory f0, T f0, ..., T^n f0 as grid functions.

    Each iterate is sampled at Chebyshev-Lobatto nodes of [-1, 1] and refitted
    to a Chebyshev series so the next application can be evaluated at the
    off-grid arguments -beta/(x+2j).  A FunctionRep ``f0`` is used exactly
    for the first application.

    With ``weighted`` the fitted quantity is (1 - x^2) f, which keeps
    kappa_1-like densities at beta = 1 smooth; returned grids then live on
    Lobatto nodes of [-eta, eta] with eta < 1.

    The sup-norm error is propagated with the operator's sup-norm gain and
    raises :class:`TailBudgetError` once it exceeds ``tail_fraction`` times
    the current L1(I_eta) norm.  Step diagnostics are appended to ``records``
    when a list is passed.
    """
    if mode.kind != "subtransfer":
        raise ConfigError("grid iteration is implemented for the subtransfer operator only")
    if n_steps < 0:
        raise DomainError("n_steps must be >= 0")
    if N < 1000:
        raise DomainError("grid iteration needs N >= 1000")
    if weighted and not eta < 1.0:
        raise DomainError("weighted iteration needs eta < 1")
    beta = p.beta
    if order is None:
        order = len(f0.nodes) - 1 if isinstance(f0, GridFunction) else GRID_ORDER
    nodes = lobatto_nodes(order)
    out_nodes = lobatto_nodes(order, -eta, eta) if weighted else nodes

    if isinstance(f0, GridFunction):
        series = f0.to_chebseries()
        if weighted:
            series = ChebSeries(series.a, series.b, tuple(_coeffs_from_lobatto_values(series(nodes) * _kappa_weight(nodes))))
        current: Callable = series
        fit_error = series.truncation_error()
        h_end = (float(series(-1.0)), float(series(1.0))) if weighted else None
    else:
        current = f0
        fit_error = 0.0
        if weighted:
            h_end, fit_error = _weighted_endpoints(f0)

    def evaluator(fn):
        if not weighted or fn is f0:
            return fn
        return lambda y: np.asarray(fn(y), dtype=float) / _kappa_weight(y)

    gain = beta if weighted else beta * (math.pi**2 / 4.0 - 1.0)
    acc = fit_error

    def out_grid(fn_eval, values_on_nodes=None):
        vals = values_on_nodes if values_on_nodes is not None else np.asarray(fn_eval(out_nodes), dtype=float)
        return GridFunction(tuple(out_nodes), tuple(vals), eta)

    first_eval = evaluator(current)
    grids = [out_grid(first_eval)]
    if records is not None:
        records.append(_record(0, grids[0], eta, 0.0, acc))

    for k in range(1, n_steps + 1):
        ev = evaluator(current)
        if weighted:
            inner = nodes[1:-1]
            vals, tails = apply_truncated_array(mode, p, ev, inner, N, correction)
            h_vals = np.empty(order + 1)
            h_vals[1:-1] = vals * _kappa_weight(inner)
            if beta < 1.0:
                h_vals[0] = h_vals[-1] = 0.0
            else:
                h_vals[0], h_vals[-1] = h_end
            h_end = (h_vals[0], h_vals[-1])
            coeffs = _coeffs_from_lobatto_values(h_vals)
            tails_sup = float(np.max(tails * _kappa_weight(inner)))
        else:
            vals, tails = apply_truncated_array(mode, p, ev, nodes, N, correction)
            coeffs = _coeffs_from_lobatto_values(vals)
            tails_sup = float(np.max(tails))
        series = ChebSeries(-1.0, 1.0, tuple(coeffs))
        current = _chop(series)
        acc = gain * acc + tails_sup + series.truncation_error()
        g = out_grid(evaluator(current), None if weighted else vals)
        grids.append(g)
        rec = _record(k, g, eta, tails_sup, acc)
        if records is not None:
            records.append(rec)
        if tail_fraction is not None:
            mass = math.log((1 + eta) / (1 - eta)) if weighted else 2.0 * eta
            if acc * mass > tail_fraction * rec.l1_norm:
                raise TailBudgetError(
                    f"accumulated bound {acc * mass:.3e} exceeds {tail_fraction} of the L1 norm {rec.l1_norm:.3e} at step {k}"
                )
    return grids


def _weighted_endpoints(f) -> tuple[tuple[float, float], float]:
    """Limits of (1 - y^2) f(y) at y = -1, 1 by cubic extrapolation from inside."""
    step = 1e-3
    k = np.arange(1, 5)
    ends, err = [], 0.0
    for side in (-1.0, 1.0):
        y = side * (1.0 - k * step)
        h = np.asarray(f(y), dtype=float) * _kappa_weight(y)
        cubic = float(np.dot([4.0, -6.0, 4.0, -1.0], h))
        quad = float(np.dot([3.0, -3.0, 1.0], h[:3]))
        ends.append(cubic)
        err = max(err, abs(cubic - quad))
    return (ends[0], ends[1]), err


def _record(k: int, g: GridFunction, eta: float, tail: float, acc: float) -> StepRecord:
    from .funcrep import weak_l1_quasinorm

    series = g.to_chebseries()
    return StepRecord(k, eta, l1_norm(_chop(series), eta), weak_l1_quasinorm(series, eta), tail, acc)


def _chop(series: ChebSeries, rel: float = 1e-17) -> ChebSeries:
    c = np.asarray(series.coeffs)
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        return ChebSeries(series.a, series.b, (0.0,))
    keep = np.nonzero(np.abs(c) > rel * scale)[0]
    last = int(keep[-1]) + 1 if keep.size else 1
    return ChebSeries(series.a, series.b, tuple(c[:last]))


def trajectory_csv(records: Sequence[StepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "eta", "l1_norm", "weak_l1", "max_tail_bound"])
    for r in records:
        w.writerow([r.step, repr(r.eta), repr(r.l1_norm), repr(r.weak_l1), repr(r.max_tail_bound)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Identity checks


def endpoint_check(p: MapParam, f, N: int) -> tuple[float, float, float]:
    """(lhs, rhs, tail): T_beta f(1) by symmetric summation, and beta f(beta), for odd f."""
    app = apply_truncated(SUBTRANSFER, p, f, 1.0, N)
    ev = _evaluator(f)
    # odd f: the symmetric partial sum at x = 1 leaves only the unpaired j = N term
    # beyond beta f(beta); its size is bounded by the tail bound
    return app.value, p.beta * float(ev(p.beta)), app.tail_bound


def commutator_sides(p: MapParam, xi: float, x):
    """Both sides of the point-mass commutator identity (without the 1/pi factor).

    lhs = T_beta applied to the pole pair at xi and -beta/{-beta/xi}_2, via the
    closed form; rhs = 1/(x - {-beta/xi}_2) - 1/(x + beta/xi).
    """
    if xi == 0.0:
        raise DomainError("xi must be nonzero")
    x = np.asarray(x, dtype=float)
    b = p.beta
    image = even_frac(-b / xi)
    if image == 0.0:
        raise DomainError("{-beta/xi}_2 must be nonzero")
    # T_beta[1/(.-xi) - 1/(.-eta')] with beta/eta' = -image
    lhs = np.asarray(regular_cot(x + b / xi)) - np.asarray(regular_cot(x - image))
    d1 = x - image
    d2 = x + b / xi
    if np.any(np.abs(d1) < POLE_GUARD) or np.any(np.abs(d2) < POLE_GUARD):
        raise PoleProximityError("commutator grid point too close to a singular point")
    rhs = 1.0 / d1 - 1.0 / d2
    return lhs, rhs


def commutator_grid(p: MapParam, xi: float, n: int = 101, guard: float = 1e-3) -> np.ndarray:
    """Uniform grid on [-1, 1] moved away from the two singular points."""
    b = p.beta
    image = float(even_frac(-b / xi))
    sing = np.array([image, -b / xi])
    xs = np.linspace(-1.0, 1.0, n)
    for s in sing:
        close = np.abs(xs - s) < guard
        xs = np.where(close, s + np.where(xs >= s, guard, -guard), xs)
    return np.clip(xs, -1.0, 1.0)


def commutator_check(p: MapParam, xi: float, grid=None) -> float:
    """Maximum discrepancy between the two sides over the grid."""
    xs = commutator_grid(p, xi) if grid is None else np.asarray(grid, dtype=float)
    lhs, rhs = commutator_sides(p, xi, xs)
    return float(np.max(np.abs(lhs - rhs)) / math.pi)


def q_decay(p: MapParam, f, n_max: int = 8, N: int = 2000, eta: float = 0.9, order: int = 128):
    """sup_{I_eta} |T^n Q f| for n = 1..n_max, with the geometric bound for n >= 2.

    Returns a list of (n, sup, bound, numerical_error).
    """
    if not p.beta < 1.0:
        raise DomainError("the geometric Q decay bound needs beta < 1")
    l1 = l1_norm(f, 1.0)
    # T_beta only reads its argument on [-beta, beta]; T Q f has log singularities at +-1
    b = p.beta
    nodes = lobatto_nodes(order, -b, b)
    probe = np.linspace(-eta, eta, 201)
    vals = apply_TQ(f, nodes)
    series = _chop(ChebSeries(-b, b, tuple(_coeffs_from_lobatto_values(vals))))
    err = series.truncation_error() + 1e-13 * max(1.0, float(np.max(np.abs(vals))))
    gain = p.beta * (math.pi**2 / 4.0 - 1.0)
    rows = [(1, float(np.max(np.abs(apply_TQ(f, probe)))), math.inf, err)]
    for n in range(2, n_max + 1):
        vals, tails = apply_truncated_array(SUBTRANSFER, p, series, nodes, N, True)
        pv, pt = apply_truncated_array(SUBTRANSFER, p, series, probe, N, True)
        err = gain * err + float(np.max(tails))
        rows.append((n, float(np.max(np.abs(pv))), 4.0 * p.beta ** (n - 1) / (math.pi * (1 - p.beta)) * l1, err))
        new = ChebSeries(-b, b, tuple(_coeffs_from_lobatto_values(vals)))
        err += new.truncation_error()
        series = _chop(new)
    return rows
