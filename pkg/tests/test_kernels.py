from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gausslab.dynamics import MapParam
from gausslab.errors import DomainError, PoleProximityError
from gausslab.funcrep import NamedKernel
from gausslab.kernels import (
    KernelParam,
    figure1,
    hilbert_kernel,
    kappa0_closed,
    kappa_alpha,
    neumann_partial,
    reduced_kernel,
    reduced_kernel_series,
    summand_bounds_check,
    taylor_kappa,
)
from gausslab.transfer import SUBTRANSFER, apply_pole_closed, apply_truncated_array


def series_coefficient(t: float, m: int) -> float:
    """Coefficient of x^(2m+1) in the lattice series of k_1^II, summed by mpmath."""
    s = 2 * m + 2
    with mpmath.workdps(40):
        tail = mpmath.nsum(lambda j: 2 / (2 * j) ** s - 1 / (2 * j - t) ** s - 1 / (2 * j + t) ** s, [1, mpmath.inf])
        return float(mpmath.mpf(t) ** s + tail)


class TestHilbertKernel:
    def test_values(self):
        assert hilbert_kernel("full", KernelParam(0.5), 0.0) == 0.5
        assert hilbert_kernel("II", KernelParam(1.0), 0.0) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-0.99, 1.0), st.floats(-0.99, 0.99))
    def test_split_identity(self, t, x):
        kp = KernelParam(t)
        full = hilbert_kernel("full", kp, x)
        assert hilbert_kernel("I", kp, x) - hilbert_kernel("II", kp, x) == pytest.approx(full, rel=1e-12, abs=1e-14)

    def test_validation(self):
        with pytest.raises(DomainError):
            KernelParam(-1.0)
        with pytest.raises(DomainError):
            hilbert_kernel("III", KernelParam(0.5), 0.0)
        with pytest.raises(PoleProximityError):
            hilbert_kernel("full", KernelParam(1.0), -1.0)


class TestReducedKernel:
    def test_endpoint_values(self):
        assert reduced_kernel("II", KernelParam(1.0), 1.0) == pytest.approx(0.5, abs=1e-14)
        assert reduced_kernel("II", KernelParam(0.5), 1.0) == pytest.approx(0.0, abs=1e-14)
        assert reduced_kernel("II", KernelParam(0.5), -1.0) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("t", [0.5, 0.25, 1.0, -0.4])
    def test_series_oracle(self, t):
        xs = np.array([0.3, -0.7, 0.95, 1e-5])
        np.testing.assert_allclose(reduced_kernel("II", KernelParam(t), xs), reduced_kernel_series(t, xs, 20000),
                                   rtol=1e-9, atol=1e-14)

    def test_series_at_named_point(self):
        assert reduced_kernel("II", KernelParam(0.5), 0.3) == pytest.approx(reduced_kernel_series(0.5, 0.3), abs=1e-8)

    @pytest.mark.parametrize("t", [0.3, 0.8, 1.0])
    def test_three_routes(self, t):
        xs = np.linspace(-0.95, 0.95, 39)
        kp = KernelParam(t)
        K = NamedKernel("K1", t=t)
        tk, tails = apply_truncated_array(SUBTRANSFER, MapParam(1.0), K, xs, 4000, correction=True)
        direct = np.asarray(hilbert_kernel("full", kp, xs)) - tk
        np.testing.assert_array_less(np.abs(np.asarray(reduced_kernel("full", kp, xs)) - direct), tails + 1e-13)
        # K_1(t, .) is the simple pole at -1/t
        closed = apply_pole_closed(MapParam(1.0), -1.0 / t, xs)
        np.testing.assert_allclose(closed, tk, atol=1e-9)

    def test_even_part_vanishes_at_one(self):
        xs = np.linspace(-1, 1, 201)
        np.testing.assert_allclose(reduced_kernel("I", KernelParam(1.0), xs), 0.0, atol=1e-10)

    @pytest.mark.parametrize("t", [0.3, 0.5, 1.0])
    def test_mean_zero(self, t):
        f = lambda x: float(reduced_kernel("full", KernelParam(t), x))  # noqa: E731
        val = quad(f, -1, 1, points=[0.0, t] if t < 1 else [0.0], epsabs=1e-13, limit=200)[0]
        assert abs(val) < 1e-8

    def test_parts_recombine(self):
        xs = np.linspace(-0.9, 0.9, 17)
        kp = KernelParam(0.6)
        np.testing.assert_allclose(
            np.asarray(reduced_kernel("I", kp, xs)) - np.asarray(reduced_kernel("II", kp, xs)),
            reduced_kernel("full", kp, xs), atol=1e-14)

    def test_removable_points(self):
        kp = KernelParam(0.4)
        for x0 in (0.0, 0.4):
            near = reduced_kernel("full", kp, np.array([x0 - 1e-7, x0, x0 + 1e-7]))
            assert np.all(np.isfinite(near))
            assert abs(near[2] - near[0]) < 1e-6


class TestKappa:
    @pytest.mark.parametrize("a,x,v", [(1.0, 0.0, 1.0), (0.5, 0.0, 2.0), (1.0, 0.8, 1 / 0.36)])
    def test_values(self, a, x, v):
        assert kappa_alpha(a, x) == pytest.approx(v, rel=1e-15)

    def test_guard(self):
        with pytest.raises(PoleProximityError):
            kappa_alpha(0.5, 0.5)
        with pytest.raises(DomainError):
            kappa_alpha(1.5, 0.0)


class TestTaylor:
    def test_kappa0(self):
        seq = taylor_kappa(KernelParam(0.5), 20)
        assert kappa0_closed(0.5) == pytest.approx(0.1377, abs=2e-4)
        assert seq.raw[0] == pytest.approx(kappa0_closed(0.5), abs=1e-10)
        assert seq.raw[0] == pytest.approx(series_coefficient(0.5, 0), abs=1e-13)

    @pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
    def test_raw_against_lattice_series(self, t):
        seq = taylor_kappa(KernelParam(t), 8)
        for m in range(9):
            assert seq.raw[m] == pytest.approx(series_coefficient(t, m), rel=1e-11, abs=1e-14)

    def test_polygamma_route(self):
        # zeta(s, a) = (-1)^s psi^(s-1)(a) / (s-1)!
        t, m = 0.4, 3
        s = 2 * m + 2
        z = lambda a: (-1) ** s * mpmath.polygamma(s - 1, a) / mpmath.factorial(s - 1)  # noqa: E731
        ref = t**s - (2 - t) ** -s + 2.0**-s * float(2 * z(1) - z(2 - t / 2) - z(1 + t / 2))
        assert taylor_kappa(KernelParam(t), m).raw[m] == pytest.approx(ref, rel=1e-12)

    def test_scaled_decreasing_and_limit(self):
        seq = taylor_kappa(KernelParam(0.5), 20)
        assert seq.strictly_decreasing_from(1)
        assert seq.distance_to_limit() < 1e-3
        assert seq.scaled[5] == pytest.approx((2 - 0.5) ** 12 * seq.raw[5], rel=1e-12)

    @pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
    def test_partial_sums_converge(self, t):
        x = 0.9
        seq = taylor_kappa(KernelParam(t), 80)
        target = reduced_kernel("II", KernelParam(t), x)
        partial = np.cumsum([c * x ** (2 * j + 1) for j, c in enumerate(seq.raw)])
        err = np.abs(partial - target)
        ratio = (err[10] / err[5]) ** (1 / 5)
        assert ratio == pytest.approx((x / (2 - t)) ** 2, rel=0.05)
        assert err[80] < 1e-12

    def test_validation(self):
        with pytest.raises(DomainError):
            taylor_kappa(KernelParam(1.0), 5)
        with pytest.raises(DomainError):
            taylor_kappa(KernelParam(0.5), 0)


class TestNeumann:
    def test_one_step(self):
        xs = np.linspace(-0.9, 0.9, 11)
        lhs, rhs, bound = neumann_partial(0.5, 1, xs, N=1000, order=64)
        np.testing.assert_allclose(lhs, reduced_kernel("II", KernelParam(0.5), xs), atol=1e-15)
        assert np.max(np.abs(lhs - rhs)) <= bound + 1e-12

    def test_five_steps(self):
        lhs, rhs, bound = neumann_partial(0.5, 5, 0.4)
        assert abs(lhs - rhs) <= 1e-6
        assert abs(lhs - rhs) <= bound + 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            neumann_partial(0.5, 9, 0.1)
        with pytest.raises(DomainError):
            neumann_partial(0.5, 2, 0.95)


class TestFigure1:
    def test_deviations_decrease(self):
        fig = figure1(0.5, n_max=6, points=61)
        assert fig.strictly_decreasing()
        assert len(fig.deviations) == 7
        header = fig.to_csv().splitlines()[0].split(",")
        assert header[:3] == ["x", "K1II", "partial_sum_N0"] and header[-1] == "partial_sum_N6"
        assert 0 < fig.final_ratio() < 1


class TestSummands:
    def test_half(self):
        v = summand_bounds_check(0.5, j_max=6)
        assert v.passed
        assert v.min_positivity_margin > 0 and v.min_domination_margin > 0

    def test_upper_bound_at_point_nine(self):
        assert summand_bounds_check(0.9, j_max=3).dominated

    def test_domain(self):
        with pytest.raises(DomainError):
            summand_bounds_check(0.5, grid=[0.0, 0.5])
        with pytest.raises(DomainError):
            summand_bounds_check(0.5, j_max=7)
