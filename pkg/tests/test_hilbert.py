from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gausslab.errors import DomainError
from gausslab.hilbert import GammaProfile, g_gamma, hg_gamma, norm_gap, periodized_sum


def hilbert_oracle(prof: GammaProfile, x: float) -> float:
    """(1/pi) PV int g(y) / (x - y) dy by adaptive quadrature."""
    g = prof.gamma
    f = lambda y: float(g_gamma(prof, y))  # noqa: E731
    if abs(x) < g:
        return -quad(f, -g, g, weight="cauchy", wvar=x, epsabs=1e-15)[0] / math.pi
    return quad(lambda y: f(y) / (x - y), -g, g, epsabs=1e-15, limit=200)[0] / math.pi


class TestProfile:
    def test_values(self):
        prof = GammaProfile(0.1)
        assert g_gamma(prof, 0.0) == 0.0
        assert g_gamma(prof, 0.2) == 0.0
        assert g_gamma(prof, 0.06) == pytest.approx(0.06 * 0.08, rel=1e-14)
        assert hg_gamma(prof, 0.0) == pytest.approx(-0.005, rel=1e-15)
        assert hg_gamma(prof, 10.0) == pytest.approx(1.25e-7, rel=0.1)

    @pytest.mark.parametrize("x", [-0.09, -0.03, 0.02, 0.08, 0.15, -0.4, 1.3])
    def test_against_quadrature(self, x):
        prof = GammaProfile(0.1)
        assert hg_gamma(prof, x) == pytest.approx(hilbert_oracle(prof, x), abs=1e-12)

    def test_continuity_at_support_edge(self):
        prof = GammaProfile(0.2)
        assert hg_gamma(prof, 0.2) == pytest.approx(hg_gamma(prof, 0.2 + 1e-12), abs=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 0.5), st.floats(-50, 50))
    def test_parity_and_range(self, g, x):
        prof = GammaProfile(g)
        assert g_gamma(prof, -x) == -g_gamma(prof, x)
        assert hg_gamma(prof, -x) == hg_gamma(prof, x)
        assert -g * g / 2 <= hg_gamma(prof, x) <= g * g / 2 * (1 + 1e-15)

    def test_validation(self):
        for bad in (0.0, 0.6, -0.1):
            with pytest.raises(DomainError):
                GammaProfile(bad)
        with pytest.raises(DomainError):
            GammaProfile(0.1, tail_terms=0)


class TestPeriodized:
    def test_support_overlap_single(self):
        # for gamma < 1 at most one translate of the support meets a point
        prof = GammaProfile(0.5)
        xs = np.linspace(-3, 3, 601)
        hits = [sum(abs(x + 2 * j) <= 0.5 for j in range(-3, 4)) for x in xs]
        assert max(hits) == 1

    def test_value_at_two(self):
        prof = GammaProfile(0.1, tail_terms=200)
        pv = periodized_sum(prof, 2.0)
        j = np.concatenate([np.arange(-200000, 0), np.arange(1, 200001)])
        # terms beyond |j| = 2e5 behave like gamma^4 / (8 (2j)^2)
        direct = math.fsum(np.asarray(hg_gamma(prof, 2.0 + 2.0 * j))) + 1e-4 / (16 * 2e5)
        assert pv.value == pytest.approx(direct, abs=pv.error_bound + 1e-15)
        assert abs(pv.tail_estimate) < 1e-4 / 32 * 2 / 200 * 1.01

    def test_asymptotic_tail(self):
        prof = GammaProfile(0.2, tail_terms=400)
        a = periodized_sum(prof, 0.5).value
        b = periodized_sum(GammaProfile(0.2, tail_terms=4000), 0.5).value
        assert a == pytest.approx(b, abs=1e-14)

    def test_needs_terms(self):
        with pytest.raises(DomainError):
            periodized_sum(GammaProfile(0.1, tail_terms=50), 0.0)


class TestNormGap:
    @pytest.mark.parametrize("g", [0.02, 0.05, 0.1, 0.2])
    def test_gap(self, g):
        r = norm_gap(GammaProfile(g))
        assert r.D > g * g
        assert abs(r.D_minus_gamma2 - g**4 / 32) <= 10 * g**6
        assert r.predicted == g**4 / 32

    def test_gap_size_at_one_tenth(self):
        r = norm_gap(GammaProfile(0.1))
        assert r.D_minus_gamma2 == pytest.approx(r.predicted, rel=0.5)

    def test_ratio_tends_to_one(self):
        ratios = [norm_gap(GammaProfile(g)).D_minus_gamma2 / (g**4 / 32) for g in (0.2, 0.1, 0.05)]
        dev = [abs(r - 1) for r in ratios]
        assert dev[0] > dev[1] > dev[2]

    def test_validation(self):
        with pytest.raises(DomainError):
            norm_gap(GammaProfile(0.3))
        with pytest.raises(DomainError):
            norm_gap(GammaProfile(0.1), N=0)
