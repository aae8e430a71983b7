"""Named experiments: parameter schemas, report rows and artifact writers."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .. import __version__
from ..dynamics import FourierVector, MapParam, doubling_decimate, wandering_measure
from ..errors import ConfigError, LabError
from ..funcrep import ChebSeries, NamedKernel, PoleSum
from ..hilbert import GammaProfile, norm_gap
from ..kernels import KernelParam, figure1, kappa0_closed, neumann_partial, summand_bounds_check, taylor_kappa
from ..specfun import EPS, lambda_tau
from ..totpos import HankelSection, b_section, cholesky_positive, minors_positive, variation_diminishing_F
from ..transfer import (
    SUBTRANSFER,
    apply_polesum_closed,
    apply_truncated_array,
    iterate_on_grid,
    q_decay,
    telescoping_fixed_point,
    trajectory_csv,
)
from ..transfer import commutator_check, commutator_grid

RELATIONS = ("le", "lt", "gt", "eq")


@dataclass(frozen=True)
class ReportRow:
    """One metric; ``passed`` follows from value, bound and relation alone."""

    experiment: str
    params: str
    metric: str
    value: float
    bound: float
    relation: str = "le"

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def passed(self) -> bool:
        v, b = self.value, self.bound
        if math.isnan(v) or math.isnan(b):
            return False
        return {"le": v <= b, "lt": v < b, "gt": v > b, "eq": v == b}[self.relation]

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "metric": self.metric,
            "value": self.value,
            "bound": self.bound,
            "relation": self.relation,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# Parameter schemas


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _int(text) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


@dataclass(frozen=True)
class Param:
    kind: Callable[[Any], Any]
    default: Any
    check: Callable[[Any], bool] = lambda v: True
    help: str = ""


def _pos(v) -> bool:
    return v > 0


def _unit(v) -> bool:
    return 0 < v <= 1


def _all(pred):
    return lambda vs: len(vs) > 0 and all(pred(v) for v in vs)


SCHEMAS: dict[str, dict[str, Param]] = {
    "figure1": {
        "t": Param(float, 0.5, lambda v: 0 < v < 1, "kernel parameter"),
        "n_max": Param(_int, 5, lambda v: 1 <= v <= 8, "last partial sum index"),
        "eta": Param(float, 0.9, lambda v: 0 < v < 1, "half width of the sample interval"),
        "points": Param(_int, 181, lambda v: v >= 3, "sample points"),
        "N": Param(_int, 2000, lambda v: v >= 1000, "lattice truncation"),
        "order": Param(_int, 128, lambda v: 16 <= v <= 4096, "Chebyshev order"),
        "residual_tol": Param(float, 1e-6, _pos, "Neumann residual tolerance"),
        "ratio": Param(float, 0.2, _pos, "allowed final/initial deviation"),
    },
    "decay": {
        "beta": Param(float, 0.5, lambda v: 0 < v < 1, "map parameter"),
        "n_steps": Param(_int, 12, lambda v: 1 <= v <= 50, "iterations"),
        "N": Param(_int, 1000, lambda v: v >= 1000, "lattice truncation"),
        "order": Param(_int, 128, lambda v: 16 <= v <= 4096, "Chebyshev order"),
        "ratio": Param(float, 0.2, _pos, "allowed final/initial L1 ratio"),
        "q_n_max": Param(_int, 8, lambda v: 2 <= v <= 12, "last Q iterate"),
        "q_eta": Param(float, 0.9, lambda v: 0 < v < 1, "sup interval for the Q iterates"),
    },
    "lambda-scan": {
        "tau": Param(_float_list, tuple(round(0.05 * k, 2) for k in range(1, 11)),
                     _all(lambda v: 0 < v <= 0.5), "comma separated tau values"),
        "s_min": Param(_int, 3, lambda v: v >= 3, "first integer s"),
        "s_max": Param(_int, 30, lambda v: v >= 4, "last integer s"),
        "h": Param(float, 1e-3, lambda v: 0 < v <= 0.1, "difference step"),
        "slack": Param(float, 0.9, _pos, "factor on the slope bound"),
    },
    "totpos-scan": {
        "size": Param(_int, 7, lambda v: 1 <= v <= 12, "B section size"),
        "max_order": Param(_int, 5, lambda v: 1 <= v <= 7, "largest minor order"),
        "hankel_size": Param(_int, 6, lambda v: 1 <= v <= 12, "largest Hankel section"),
        "n_seq": Param(_int, 100, lambda v: v >= 0, "random sequences for the VD test"),
        "seq_len": Param(_int, 12, lambda v: 2 <= v <= 13, "maximal sequence length"),
        "N": Param(_int, 12, lambda v: 1 <= v <= 20, "VD truncation"),
        "seed": Param(_int, 20240611, lambda v: v >= 0, "RNG seed"),
    },
    "normexp": {
        "gamma": Param(_float_list, (0.05, 0.1), _all(lambda v: 0 < v <= 0.2), "comma separated gamma values"),
        "tail_terms": Param(_int, 1000, lambda v: v >= 100, "lattice terms before the tail model"),
        "N": Param(_int, 1000, lambda v: v >= 1, "period shift of the limit surrogate"),
        "tol_factor": Param(float, 10.0, _pos, "tolerance in units of gamma^6"),
    },
    "fixedpoint": {
        "beta": Param(_float_list, (1.0, 0.3, 0.7), _all(_unit), "comma separated beta values"),
        "pole_beta": Param(float, 0.5, _unit, "beta for the telescoping pole pair"),
        "N": Param(_int, 10_000, lambda v: v >= 1000, "lattice truncation"),
        "nodes": Param(_int, 201, lambda v: v >= 3, "nodes on I_eta"),
        "eta": Param(float, 0.9, lambda v: 0 < v < 1, "half width of the node interval"),
        "tol": Param(float, 1e-6, _pos, "relative residual tolerance"),
        "closed_tol": Param(float, 1e-12, _pos, "closed form tolerance"),
        "n_sub": Param(_int, 6, lambda v: 0 <= v <= 12, "subinvariance iterations"),
        "order": Param(_int, 128, lambda v: 16 <= v <= 4096, "Chebyshev order"),
    },
    "kernel-bounds": {
        "t": Param(_float_list, (0.1, 0.3, 0.5, 0.7, 0.9), _all(lambda v: 0 < v < 1), "summand parameters"),
        "j_max": Param(_int, 6, lambda v: 0 <= v <= 6, "last iterate"),
        "taylor_t": Param(_float_list, (0.25, 0.5, 0.75), _all(lambda v: 0 < v < 1), "Taylor parameters"),
        "taylor_jmax": Param(_int, 20, lambda v: 2 <= v <= 200, "last Taylor index"),
        "limit_tol": Param(float, 1e-3, _pos, "distance of the last scaled coefficient to -1"),
        "N": Param(_int, 2000, lambda v: v >= 1000, "lattice truncation"),
        "order": Param(_int, 128, lambda v: 16 <= v <= 4096, "Chebyshev order"),
    },
    "commutator": {
        "beta": Param(_float_list, (0.7, 1.0), _all(_unit), "comma separated beta values"),
        "xi": Param(_float_list, (0.33, -0.51), _all(lambda v: 0 < abs(v) <= 1), "comma separated xi values"),
        "n": Param(_int, 101, lambda v: v >= 3, "grid points"),
        "guard": Param(float, 1e-3, lambda v: 0 < v < 0.1, "distance kept from singular points"),
        "tol": Param(float, 1e-9, _pos, "agreement tolerance"),
    },
    "wandering": {
        "beta": Param(float, 0.5, lambda v: 0 < v < 1, "map parameter"),
        "N_max": Param(_int, 8, lambda v: 2 <= v <= 40, "largest N"),
        "samples": Param(_int, 100_000, lambda v: v >= 1000, "grid cells"),
    },
    "doubling": {
        "M": Param(_int, 64, lambda v: v >= 1, "largest frequency"),
        "n_max": Param(_int, 5, lambda v: v >= 1, "largest decimation power"),
        "seed": Param(_int, 7, lambda v: v >= 0, "RNG seed"),
    },
}


@dataclass
class ExperimentSpec:
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    output_path: str = "results"

    def validate(self) -> dict[str, Any]:
        """Typed parameters with defaults filled in; raises ConfigError."""
        if self.name not in SCHEMAS:
            raise ConfigError(f"unknown experiment {self.name!r}; choose from {', '.join(SCHEMAS)}")
        schema = SCHEMAS[self.name]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ConfigError(f"{self.name}: unknown parameter(s) {', '.join(unknown)}")
        out = {}
        for key, p in schema.items():
            raw = self.params.get(key, p.default)
            try:
                val = p.kind(raw) if key in self.params else raw
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{self.name}: bad value {raw!r} for {key}: {exc}") from None
            if not p.check(val):
                raise ConfigError(f"{self.name}: value {raw!r} out of range for {key}")
            out[key] = val
        return out


def _echo(params: dict) -> str:
    parts = []
    for k in sorted(params):
        v = params[k]
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        parts.append(f"{k}={v}")
    return ";".join(parts)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Experiments.  Each one splits into independent points; a point returns
# (rows, {artifact name: csv text}).

Result = tuple[list[tuple[str, float, float, str]], dict[str, str]]


def _points_single(params) -> list[tuple]:
    return [()]


def _figure1(params, point) -> Result:
    fig = figure1(params["t"], params["n_max"], params["eta"], params["points"], params["N"], params["order"])
    rows = []
    probe = np.linspace(-params["eta"], params["eta"], 41)
    for n in range(1, params["n_max"] + 1):
        lhs, rhs, bound = neumann_partial(params["t"], n, probe, params["N"], params["order"])
        res = float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))
        # residual plus its certified numerical bound must stay under the tolerance
        rows.append((f"neumann_residual_n{n}", res + bound, params["residual_tol"], "le"))
    d = fig.deviations
    rows.append(("deviation_increase_count", float(sum(d[k + 1] >= d[k] for k in range(len(d) - 1))), 0.0, "eq"))
    rows.append(("deviation_ratio", fig.final_ratio(), params["ratio"], "le"))
    dev_csv = _csv(["N", "deviation", "bound"], [(k, d[k], fig.bounds[k]) for k in range(len(d))])
    return rows, {"figure1.csv": fig.to_csv(), "figure1_deviations.csv": dev_csv}


def _decay(params, point) -> Result:
    p = MapParam(params["beta"])
    recs: list = []
    iterate_on_grid(SUBTRANSFER, p, ChebSeries(-1.0, 1.0, (1.0,)), params["n_steps"], params["N"],
                    order=params["order"], records=recs)
    l1 = [r.l1_norm for r in recs]
    rows = [
        ("l1_increase_count", float(sum(l1[k + 1] >= l1[k] for k in range(len(l1) - 1))), 0.0, "eq"),
        ("l1_ratio", l1[-1] / l1[0], params["ratio"], "le"),
        ("max_accumulated_bound_over_l1", max(r.accumulated_bound * 2 / r.l1_norm for r in recs), 1e-3, "le"),
    ]
    densities = {
        "one": ChebSeries(-1.0, 1.0, (1.0,)),
        "t": ChebSeries(-1.0, 1.0, (0.0, 1.0)),
        "inv_2_minus_t": PoleSum(((-1.0, 2.0),)),
    }
    q_rows = []
    for name, f in densities.items():
        worst = -math.inf
        for n, sup, bound, err in q_decay(p, f, params["q_n_max"], eta=params["q_eta"]):
            q_rows.append((name, n, sup, bound, err))
            if n >= 2:
                worst = max(worst, (sup + err) / bound)
        rows.append((f"q_decay_worst_ratio_{name}", worst, 1.0, "le"))
    return rows, {
        "decay_trajectory.csv": trajectory_csv(recs),
        "q_decay.csv": _csv(["density", "n", "sup", "bound", "numerical_error"], q_rows),
    }


def _lambda_scan(params, point) -> Result:
    h, slack = params["h"], params["slack"]
    s_values = range(params["s_min"], params["s_max"] + 1)
    table, rows = [], []
    for tau in params["tau"]:
        lam = lambda s: lambda_tau(tau, s)  # noqa: E731
        vals = [lam(s) for s in s_values]
        min_pos = min(v.value - v.error_bound for v in vals)
        min_drop = min((a.value - a.error_bound) - (b.value + b.error_bound) for a, b in zip(vals, vals[1:]))
        worst = -math.inf
        for s, v in zip(s_values, vals):
            # one-sided second order difference; s = 3 is the left end of the domain
            slope = (-3 * v.value + 4 * lam(s + h).value - lam(s + 2 * h).value) / (2 * h)
            limit = -(143 / 810) * tau**2 * (1 - tau) ** s * slack
            worst = max(worst, slope - limit)
            table.append((tau, s, v.value, v.error_bound, slope, limit))
        rows += [
            (f"min_lambda_tau{tau}", min_pos, 0.0, "gt"),
            (f"min_decrement_tau{tau}", min_drop, 0.0, "gt"),
            (f"max_slope_excess_tau{tau}", worst, 0.0, "le"),
        ]
    return rows, {"lambda_scan.csv": _csv(["tau", "s", "lambda", "error_bound", "slope", "slope_limit"], table)}


def _random_one_change(rng: np.random.Generator, max_len: int) -> np.ndarray:
    L = int(rng.integers(2, max_len + 1))
    s = int(rng.integers(1, L))
    return np.concatenate([rng.uniform(0.05, 1.0, s), -rng.uniform(0.05, 1.0, L - s)])


def _totpos(params, point) -> Result:
    sec = b_section(params["size"], "extended")
    verdict = minors_positive(sec, params["max_order"], raise_on_indeterminate=False)
    worst = verdict.worst
    rows = [
        ("minors_checked", float(verdict.count), 0.0, "gt"),
        ("unresolved_or_nonpositive_minors", float(sum(m.margin <= 0 for m in verdict.records)), 0.0, "eq"),
        ("worst_minor_value_over_error", worst.value / worst.error_estimate, 1.0, "gt"),
    ]
    chol = []
    for shift in (0, 1):
        for n in range(1, params["hankel_size"] + 1):
            ok, margin = cholesky_positive(HankelSection(n, shift))
            chol.append((shift, n, int(ok), margin))
    rows.append(("hankel_failures", float(sum(1 - c[2] for c in chol)), 0.0, "eq"))
    rng = np.random.default_rng(params["seed"])
    vd, failures = [], 0
    for i in range(params["n_seq"]):
        c = _random_one_change(rng, min(params["seq_len"], params["N"] + 1))
        _, v = variation_diminishing_F(c, params["N"])
        ok = v.s_plus <= 1 and v.plus_to_minus()
        failures += not ok
        vd.append((i, len(c), v.s_minus, v.s_plus, v.pattern, int(ok)))
    rows.append(("vd_failures", float(failures), 0.0, "eq"))
    return rows, {
        "minors.csv": verdict.to_csv(),
        "hankel.csv": _csv(["shift", "size", "positive", "margin"], chol),
        "variation_diminishing.csv": _csv(["sequence", "length", "s_minus", "s_plus", "pattern", "ok"], vd),
    }


def _normexp_points(params):
    return [(g,) for g in params["gamma"]]


def _normexp(params, point) -> Result:
    (g,) = point
    r = norm_gap(GammaProfile(g, params["tail_terms"]), params["N"])
    dev = abs(r.D_minus_gamma2 - r.predicted)
    rows = [
        (f"D_minus_gamma2_gamma{g}", r.D_minus_gamma2 - r.error_bound, 0.0, "gt"),
        (f"gap_deviation_gamma{g}", dev + r.error_bound, params["tol_factor"] * g**6, "le"),
    ]
    line = _csv(["gamma", "D", "D_minus_gamma2", "predicted_gamma4_over_32", "tail_estimate", "error_bound"],
                [(g, r.D, r.D_minus_gamma2, r.predicted, r.tail_estimate, r.error_bound)])
    return rows, {f"normexp_gamma{g}.csv": line}


def _fixedpoint_points(params):
    return [("kappa", b) for b in params["beta"]] + [("poles", params["pole_beta"])]


def _pole_forward_error(f: PoleSum, x: np.ndarray) -> np.ndarray:
    return 4 * EPS * sum(abs(w) * (np.abs(x) + abs(q)) / (x - q) ** 2 for w, q in f.terms)


def _fixedpoint(params, point) -> Result:
    kind, beta = point
    p = MapParam(beta)
    eta, N = params["eta"], params["N"]
    xs = np.linspace(-eta, eta, params["nodes"])
    if kind == "kappa":
        k1 = 1.0 / (1.0 - xs * xs)
        vals, tails = apply_truncated_array(SUBTRANSFER, p, NamedKernel("kappa", alpha=beta), xs, N, correction=True)
        rel = np.abs(vals - k1) / k1
        rows = [(f"kappa_residual_beta{beta}", float(np.max(rel)), params["tol"], "le")]
        table = [(x, v, k, t) for x, v, k, t in zip(xs, vals, k1, tails)]
        arts = {f"fixedpoint_kappa_beta{beta}.csv": _csv(["x", "T_kappa_beta", "kappa_1", "tail_bound"], table)}
        if beta < 1.0 and params["n_sub"] > 0:
            recs: list = []
            grids = iterate_on_grid(SUBTRANSFER, p, NamedKernel("kappa", alpha=1.0), params["n_sub"], min(N, 2000),
                                    order=params["order"], eta=eta, weighted=True, records=recs)
            worst, sub = math.inf, []
            for n in range(1, len(grids)):
                x = np.asarray(grids[n].nodes)
                w = 1.0 - x * x
                margin = beta**n / w - np.asarray(grids[n].values) - recs[n].accumulated_bound / w
                worst = min(worst, float(np.min(margin)))
                sub.append((n, float(np.min(margin)), recs[n].accumulated_bound))
            rows.append((f"subinvariance_min_margin_beta{beta}", worst, 0.0, "gt"))
            arts[f"subinvariance_beta{beta}.csv"] = _csv(["n", "min_margin", "accumulated_bound"], sub)
        return rows, arts
    f = telescoping_fixed_point(p)
    poles = [q for _, q in f.terms]
    xs = xs[np.min(np.abs(xs[:, None] - np.asarray(poles)[None, :]), axis=1) > 0.02]
    fx = np.asarray(f(xs))
    closed = np.asarray(apply_polesum_closed(p, f, xs))
    vals, tails = apply_truncated_array(SUBTRANSFER, p, f, xs, N, correction=False)
    excess = np.abs(vals - fx) - tails - _pole_forward_error(f, xs)
    rows = [
        (f"closed_residual_beta{beta}", float(np.max(np.abs(closed - fx))), params["closed_tol"], "le"),
        (f"truncated_excess_over_tail_beta{beta}", float(np.max(excess)), 0.0, "le"),
    ]
    table = [(x, a, b, c, t) for x, a, b, c, t in zip(xs, fx, closed, vals, tails)]
    return rows, {f"fixedpoint_poles_beta{beta}.csv": _csv(["x", "f", "closed", "truncated", "tail_bound"], table)}


def _kernel_points(params):
    return [("summand", t) for t in params["t"]] + [("taylor", t) for t in params["taylor_t"]]


def _kernel_bounds(params, point) -> Result:
    kind, t = point
    if kind == "summand":
        v = summand_bounds_check(t, params["j_max"], N=params["N"], order=params["order"])
        rows = [
            (f"positivity_margin_t{t}", v.min_positivity_margin, 0.0, "gt"),
            (f"domination_margin_t{t}", v.min_domination_margin, 0.0, "gt"),
            (f"monotone_difference_t{t}", float(v.monotone_difference), 1.0, "eq"),
        ]
        line = _csv(["t", "positivity_margin", "domination_margin", "max_numerical_bound"],
                    [(t, v.min_positivity_margin, v.min_domination_margin, v.max_numerical_bound)])
        return rows, {f"summands_t{t}.csv": line}
    seq = taylor_kappa(KernelParam(t), params["taylor_jmax"])
    s, e = seq.scaled, seq.scaled_error
    increases = sum(s[j + 1] + e[j + 1] >= s[j] - e[j] for j in range(1, len(s) - 1))
    rows = [
        (f"taylor_increase_count_t{t}", float(increases), 0.0, "eq"),
        (f"taylor_limit_distance_t{t}", seq.distance_to_limit(), params["limit_tol"], "le"),
        (f"kappa0_closed_mismatch_t{t}", abs(seq.raw[0] - kappa0_closed(t)), 1e-10, "le"),
    ]
    table = [(j, seq.raw[j], s[j], e[j]) for j in range(len(s))]
    return rows, {f"taylor_t{t}.csv": _csv(["j", "kappa_j", "scaled", "scaled_error"], table)}


def _commutator_points(params):
    return [(b, xi) for b in params["beta"] for xi in params["xi"]]


def _commutator(params, point) -> Result:
    beta, xi = point
    p = MapParam(beta)
    grid = commutator_grid(p, xi, params["n"], params["guard"])
    dev = commutator_check(p, xi, grid)
    return [(f"max_deviation_beta{beta}_xi{xi}", dev, params["tol"], "le")], {}


def _wandering(params, point) -> Result:
    p = MapParam(params["beta"])
    ms = [wandering_measure(p, n, params["samples"]) for n in range(1, params["N_max"] + 1)]
    rows = [("measure_increase_count", float(sum(ms[k + 1] > ms[k] for k in range(len(ms) - 1))), 0.0, "eq")]
    return rows, {"wandering.csv": _csv(["N", "measure"], list(enumerate(ms, start=1)))}


def _doubling(params, point) -> Result:
    M = params["M"]
    rng = np.random.default_rng(params["seed"])
    raw = rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)
    g = FourierVector(tuple(raw))
    mism = 0
    for n in range(1, params["n_max"] + 1):
        d = doubling_decimate(g, n)
        mism += sum(d[k] != g[(1 << n) * k] for k in g.indices())
    const = FourierVector(tuple(1.0 if k == 0 else 0.0 for k in range(-M, M + 1)))
    drift = sum(doubling_decimate(const, n).values != const.values for n in range(1, params["n_max"] + 1))
    return [("index_map_mismatches", float(mism), 0.0, "eq"), ("constant_drift", float(drift), 0.0, "eq")], {}


@dataclass(frozen=True)
class Experiment:
    name: str
    run_point: Callable[[dict, tuple], Result]
    points: Callable[[dict], list[tuple]] = _points_single
    summary: str = ""


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment("figure1", _figure1, summary="Neumann partial sums of the odd reduced kernel"),
        Experiment("decay", _decay, summary="L1 decay of the subtransfer iterates and Q-operator decay"),
        Experiment("lambda-scan", _lambda_scan, summary="positivity and slope of the zeta combination Lambda"),
        Experiment("totpos-scan", _totpos, summary="minors of B, Hankel factorizations, variation diminishing"),
        Experiment("normexp", _normexp, _normexp_points, "periodized Hilbert gap D(gamma)"),
        Experiment("fixedpoint", _fixedpoint, _fixedpoint_points, "invariant densities and the telescoping pole pair"),
        Experiment("kernel-bounds", _kernel_bounds, _kernel_points, "summand domination and Taylor coefficients"),
        Experiment("commutator", _commutator, _commutator_points, "commutator identity on guarded grids"),
        Experiment("wandering", _wandering, summary="measure of the wandering sets"),
        Experiment("doubling", _doubling, summary="Fourier decimation of the doubling map"),
    ]
}


def _run_point(name: str, params: dict, point: tuple) -> Result:
    try:
        return EXPERIMENTS[name].run_point(params, point)
    except LabError as exc:
        raise type(exc)(f"[{name} {point}] {exc}") from exc


@dataclass
class RunResult:
    rows: list[ReportRow]
    files: list[Path]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def run_experiment(spec: ExperimentSpec, parallel: bool = False, write: bool = True) -> RunResult:
    """Run one experiment; write its CSV artifacts, report and JSON summary."""
    params = spec.validate()
    exp = EXPERIMENTS[spec.name]
    points = sorted(exp.points(params))
    if parallel and len(points) > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_run_point, itertools.repeat(spec.name), itertools.repeat(params), points))
    else:
        results = [_run_point(spec.name, params, pt) for pt in points]
    echo = _echo(params)
    rows, artifacts = [], {}
    for metric_rows, arts in results:
        rows += [ReportRow(spec.name, echo, m, float(v), float(b), rel) for m, v, b, rel in metric_rows]
        artifacts.update(arts)
    files: list[Path] = []
    if write:
        out = Path(spec.output_path) / spec.name
        out.mkdir(parents=True, exist_ok=True)
        for fname in sorted(artifacts):
            path = out / fname
            path.write_text(artifacts[fname], encoding="utf-8")
            files.append(path)
        report = _csv(["experiment", "params", "metric", "value", "bound", "relation", "pass"],
                      [(r.experiment, r.params, r.metric, r.value, r.bound, r.relation, int(r.passed)) for r in rows])
        (out / "report.csv").write_text(report, encoding="utf-8")
        summary = {
            "experiment": spec.name,
            "version": __version__,
            "params": {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()},
            "passed": all(r.passed for r in rows),
            "metrics": [r.as_dict() for r in rows],
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        files += [out / "report.csv", out / "summary.json"]
    return RunResult(rows, files)
