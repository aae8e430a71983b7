from __future__ import annotations

import math

import mpmath
import numpy as np
import numpy.polynomial.chebyshev as C
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gausslab.dynamics import MapParam
from gausslab.errors import ConfigError, DomainError, TailBudgetError
from gausslab.funcrep import ChebSeries, GridFunction, NamedKernel, PoleSum, l1_norm, parity_split
from gausslab.transfer import (
    COMPLEMENT_V,
    FULL_TRANSFER,
    SUBTRANSFER,
    OperatorMode,
    apply_J,
    apply_pole_closed,
    apply_polesum_closed,
    apply_Q,
    apply_TQ,
    apply_truncated,
    apply_truncated_array,
    commutator_check,
    commutator_grid,
    commutator_sides,
    endpoint_check,
    iterate_on_grid,
    lattice_tail_sum,
    q_decay,
    telescoping_fixed_point,
    trajectory_csv,
)


def poly(coeffs, a=-1.0, b=1.0):
    return ChebSeries(a, b, tuple(C.poly2cheb(coeffs)))


def brute_force(beta, f, x, N):
    total = 0.0
    for j in range(-N, N + 1):
        if j == 0:
            continue
        u = x + 2 * j
        total += beta / u**2 * f(-beta / u)
    return total


KAPPA1 = NamedKernel("kappa", alpha=1.0)


class TestTruncated:
    def test_matches_direct_loop(self):
        f = lambda y: np.cos(3 * y) + y  # noqa: E731
        r = apply_truncated(SUBTRANSFER, MapParam(0.6), f, 0.37, 300)
        assert r.value == pytest.approx(brute_force(0.6, f, 0.37, 300), rel=1e-13)
        assert r.order_N == 300

    def test_kappa_invariance_plain_tail(self):
        r = apply_truncated(SUBTRANSFER, MapParam(1.0), KAPPA1, 0.0, 10_000)
        assert abs(r.value - 1.0) <= r.tail_bound
        assert r.tail_bound < 1e-3

    def test_kappa_beta_maps_to_kappa_one(self):
        r = apply_truncated(SUBTRANSFER, MapParam(0.5), NamedKernel("kappa", alpha=0.5), 0.3, 10_000)
        assert abs(r.value - 1 / (1 - 0.09)) <= r.tail_bound
        rc = apply_truncated(SUBTRANSFER, MapParam(0.5), NamedKernel("kappa", alpha=0.5), 0.3, 10_000, correction=True)
        assert abs(rc.value - 1 / (1 - 0.09)) <= rc.tail_bound < 1e-9

    def test_zero_function(self):
        r = apply_truncated(SUBTRANSFER, MapParam(0.7), poly([0.0]), 0.2, 50)
        assert r.value == 0.0 and r.tail_bound == 0.0

    def test_tail_sum_closed_form(self):
        N = 40
        direct = float(mpmath.nsum(lambda j: 2 / (2 * j - 1) ** 2, [N + 1, mpmath.inf]))
        assert lattice_tail_sum(N) == pytest.approx(direct, rel=1e-6)
        assert lattice_tail_sum(N) <= 1 / (2 * N - 1)

    def test_correction_shrinks_error(self):
        xs = np.linspace(-0.9, 0.9, 7)
        f = NamedKernel("kappa", alpha=1.0)
        plain, tp = apply_truncated_array(SUBTRANSFER, MapParam(1.0), f, xs, 2000)
        corr, tc = apply_truncated_array(SUBTRANSFER, MapParam(1.0), f, xs, 2000, correction=True)
        k1 = 1 / (1 - xs**2)
        assert np.all(np.abs(plain - k1) <= tp)
        assert np.all(np.abs(corr - k1) <= tc)
        assert np.max(tc) < 1e-3 * np.max(tp)

    def test_full_transfer_adds_central_branch(self):
        p = MapParam(0.5)
        f = lambda y: 1.0 + 0 * y  # noqa: E731
        sub = apply_truncated(SUBTRANSFER, p, f, 0.8, 100).value
        full = apply_truncated(FULL_TRANSFER, p, f, 0.8, 100).value
        assert full - sub == pytest.approx(0.5 / 0.64, rel=1e-14)
        assert apply_truncated(FULL_TRANSFER, p, f, 0.3, 100).value == apply_truncated(SUBTRANSFER, p, f, 0.3, 100).value

    def test_complement_operator(self):
        beta = 0.8
        v = lambda y: np.where((y > 1) & (y < 3), (np.asarray(y) - 1) * (3 - np.asarray(y)), 0.0)  # noqa: E731
        x = 1.7
        r = apply_truncated(COMPLEMENT_V, MapParam(beta), v, x, 20, support=(1.0, 3.0))
        direct = beta / x**2 * sum(float(v(-beta / x + 2 * j)) for j in range(-50, 51) if j != 0)
        assert r.value == pytest.approx(direct, rel=1e-14)
        assert r.tail_bound == 0.0
        assert math.isinf(apply_truncated(COMPLEMENT_V, MapParam(beta), v, x, 20).tail_bound)
        with pytest.raises(DomainError):
            apply_truncated(COMPLEMENT_V, MapParam(beta), v, 0.5, 20)

    def test_validation(self):
        with pytest.raises(ConfigError):
            OperatorMode("other")
        with pytest.raises(DomainError):
            apply_truncated(SUBTRANSFER, MapParam(1.0), KAPPA1, 0.0, 1)
        with pytest.raises(DomainError):
            apply_truncated(SUBTRANSFER, MapParam(1.0), KAPPA1, 1.5, 10)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 2), min_size=1, max_size=6), st.floats(0.1, 1.0), st.floats(-1, 1))
    def test_positivity(self, coeffs, beta, x):
        # even powers with nonnegative weights give a nonnegative f
        f = poly([c if k % 2 == 0 else 0.0 for k, c in enumerate(coeffs)])
        assert apply_truncated(SUBTRANSFER, MapParam(beta), f, x, 50).value >= 0.0


class TestGridProperties:
    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=6), st.sampled_from([0.4, 0.8, 1.0]))
    def test_l1_contraction(self, coeffs, beta):
        f = poly(coeffs)
        recs = []
        iterate_on_grid(SUBTRANSFER, MapParam(beta), f, 1, 1000, order=64, records=recs, tail_fraction=None)
        assert recs[1].l1_norm <= l1_norm(f, 1.0) + 2 * recs[1].accumulated_bound + 1e-12

    @pytest.mark.parametrize("beta", [0.5, 1.0])
    def test_parity_commutes(self, beta):
        f = PoleSum(((1.0, 1.7), (0.5, -2.3)))
        even, odd = parity_split(f)
        xs = np.linspace(-1, 1, 41)
        p = MapParam(beta)
        tf, _ = apply_truncated_array(SUBTRANSFER, p, f, xs, 2000, correction=True)
        te, _ = apply_truncated_array(SUBTRANSFER, p, even, xs, 2000, correction=True)
        to, _ = apply_truncated_array(SUBTRANSFER, p, odd, xs, 2000, correction=True)
        np.testing.assert_allclose(te, te[::-1], atol=1e-10)
        np.testing.assert_allclose(to, -to[::-1], atol=1e-10)
        np.testing.assert_allclose(te + to, tf, atol=1e-10)

    @pytest.mark.parametrize("fn", [lambda y: y, lambda y: y**3, np.sinh])
    @pytest.mark.parametrize("beta", [0.3, 1.0])
    def test_monotone_preserved(self, fn, beta):
        xs = np.linspace(-1, 1, 65)
        v, _ = apply_truncated_array(SUBTRANSFER, MapParam(beta), fn, xs, 1000, correction=True)
        assert np.all(np.diff(v) > 0)

    @pytest.mark.parametrize("beta", [0.3, 0.7])
    def test_subinvariance(self, beta):
        recs = []
        grids = iterate_on_grid(SUBTRANSFER, MapParam(beta), KAPPA1, 6, 1000, order=128, eta=0.9,
                                weighted=True, records=recs)
        for n in range(1, 7):
            x = np.asarray(grids[n].nodes)
            w = 1 - x**2
            v = np.asarray(grids[n].values)
            slack = recs[n].accumulated_bound / w
            assert np.all(v + slack >= 0)
            assert np.all(v + slack < beta**n / w)


class TestIterate:
    def test_decay_half(self):
        recs = []
        iterate_on_grid(SUBTRANSFER, MapParam(0.5), poly([1.0]), 5, 1000, order=64, records=recs)
        norms = [r.l1_norm for r in recs]
        assert all(b < a for a, b in zip(norms, norms[1:]))
        assert norms[0] == pytest.approx(2.0)

    def test_kappa_constant_weighted(self):
        recs = []
        grids = iterate_on_grid(SUBTRANSFER, MapParam(1.0), KAPPA1, 3, 1000, order=128, eta=0.9, weighted=True,
                                records=recs)
        for g, r in zip(grids, recs):
            x = np.asarray(g.nodes)
            np.testing.assert_array_less(np.abs(np.asarray(g.values) - 1 / (1 - x**2)), r.accumulated_bound / (1 - x**2) + 1e-15)
            assert abs(r.l1_norm - math.log(19)) <= 2 * r.accumulated_bound * math.log(19) + 1e-12

    def test_mean_zero_decays_and_mass_is_kept(self):
        # T_2 + 1/3 = 2x^2 - 2/3 has zero mean
        recs = []
        iterate_on_grid(SUBTRANSFER, MapParam(1.0), ChebSeries(-1, 1, (1 / 3, 0.0, 1.0)), 4, 1000, order=128, records=recs)
        norms = [r.l1_norm for r in recs]
        assert all(b < a for a, b in zip(norms, norms[1:]))
        recs = []
        iterate_on_grid(SUBTRANSFER, MapParam(1.0), ChebSeries(-1, 1, (0.0, 0.0, 1.0)), 3, 1000, order=128, records=recs)
        # mass -2/3 of T_2 is preserved, so the norm cannot drop below 2/3
        assert recs[-1].l1_norm >= 2 / 3 - 1e-9

    def test_grid_input_and_csv(self):
        g0 = GridFunction.sample(lambda x: 1 + 0 * x, 64)
        recs = []
        grids = iterate_on_grid(SUBTRANSFER, MapParam(0.5), g0, 2, 1000, records=recs)
        assert len(grids) == 3 and len(grids[1].nodes) == 65
        text = trajectory_csv(recs)
        assert text.splitlines()[0] == "step,eta,l1_norm,weak_l1,max_tail_bound"
        assert len(text.splitlines()) == 4

    def test_validation(self):
        with pytest.raises(ConfigError):
            iterate_on_grid(FULL_TRANSFER, MapParam(0.5), poly([1.0]), 1, 1000)
        with pytest.raises(DomainError):
            iterate_on_grid(SUBTRANSFER, MapParam(0.5), poly([1.0]), 1, 100)
        with pytest.raises(DomainError):
            iterate_on_grid(SUBTRANSFER, MapParam(0.5), poly([1.0]), 1, 1000, weighted=True, eta=1.0)

    def test_tail_budget(self):
        with pytest.raises(TailBudgetError):
            iterate_on_grid(SUBTRANSFER, MapParam(0.5), poly([1.0]), 2, 1000, order=16, correction=False,
                            tail_fraction=1e-9)


class TestClosedForms:
    def test_pole_against_truncation(self):
        p = MapParam(0.7)
        r = apply_truncated(SUBTRANSFER, p, PoleSum(((1.0, 3.0),)), 0.2, 100_000)
        assert abs(apply_pole_closed(p, 3.0, 0.2) - r.value) <= r.tail_bound

    def test_pole_at_zero(self):
        p = MapParam(0.9)
        f = lambda y: np.where(y == 0, 0.0, 1 / np.where(y == 0, 1.0, y))  # noqa: E731
        r = apply_truncated(SUBTRANSFER, p, f, 0.4, 20_000)
        # 1/y at -beta/u gives -u/beta, so each term is -1/u: sum_{j != 0} -1/(x+2j)
        assert apply_pole_closed(p, 0.0, 0.4) == pytest.approx(r.value, abs=1e-4)

    @pytest.mark.parametrize("beta", [0.5, 1.0])
    def test_telescoping_fixed_point(self, beta):
        p = MapParam(beta)
        f = telescoping_fixed_point(p)
        xs = np.linspace(-1, 1, 201)
        poles = [q for _, q in f.terms]
        xs = xs[np.min(np.abs(xs[:, None] - np.array(poles)), axis=1) > 0.02]
        np.testing.assert_allclose(apply_polesum_closed(p, f, xs), f(xs), atol=1e-12, rtol=1e-12)
        vals, tails = apply_truncated_array(SUBTRANSFER, p, f, xs, 2000)
        # the pole sum's own rounding near its pole enters on top of the tail
        fwd = 4 * np.finfo(float).eps * sum(abs(w) * (np.abs(xs) + abs(q)) / (xs - q) ** 2 for w, q in f.terms)
        assert np.all(np.abs(vals - f(xs)) <= tails + fwd)

    def test_pole_pair_values(self):
        f = telescoping_fixed_point(MapParam(0.5))
        assert [q for _, q in f.terms] == pytest.approx([1 + math.sqrt(0.5), -1 + math.sqrt(0.5)])
        g = telescoping_fixed_point(MapParam(1.0))
        assert [q for _, q in g.terms] == pytest.approx([2 + math.sqrt(3), -2 + math.sqrt(3)])


class TestJ:
    def test_value(self):
        assert apply_J(MapParam(1.0), lambda y: 1.0 + 0 * y, 0.5) == 4.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.1, 1.0), st.floats(0.05, 3.0), st.booleans())
    def test_involution(self, beta, x, neg):
        x = -x if neg else x
        p = MapParam(beta)
        f = lambda y: np.exp(0.3 * y) + y**2  # noqa: E731
        twice = apply_J(p, lambda y: apply_J(p, f, y), x)
        assert twice == pytest.approx(float(f(x)), rel=1e-12)

    def test_mass_preserved(self):
        # the substitution y = -beta/x maps [1, 2] onto [-beta, -beta/2]
        beta = 0.8
        p = MapParam(beta)
        g = lambda y: np.where((y >= 1) & (y <= 2), 1.0 + y, 0.0)  # noqa: E731
        lhs = quad(lambda x: float(apply_J(p, g, x)), -beta, -beta / 2)[0]
        assert lhs == pytest.approx(quad(lambda y: 1.0 + y, 1, 2)[0], rel=1e-10)

    def test_zero(self):
        with pytest.raises(DomainError):
            apply_J(MapParam(1.0), lambda y: y, 0.0)


class TestQ:
    def test_odd_at_zero(self):
        p = MapParam(0.6)
        f = poly([0.0, 1.0, 0.0, 2.0])
        ref = quad(lambda t: t * (t + 2 * t**3), -1, 1)[0] / (math.pi * 0.6)
        assert apply_Q(p, f, 0.0) == pytest.approx(ref, rel=1e-13)

    def test_constant_vanishes(self):
        assert abs(apply_Q(MapParam(1.0), poly([1.0]), 0.0)) < 1e-15

    def test_against_quadrature(self):
        ref = quad(lambda t: t * t / (1 + 0.5 * t), -1, 1, epsabs=1e-14, epsrel=1e-14)[0] / math.pi
        assert apply_Q(MapParam(1.0), poly([0.0, 1.0]), 0.5) == pytest.approx(ref, rel=1e-12)

    def test_pointwise_bound(self):
        p = MapParam(0.7)
        f = PoleSum(((-1.0, 2.0),))
        l1 = l1_norm(f, 1.0)
        xs = np.linspace(-0.69, 0.69, 31)
        assert np.all(np.abs(apply_Q(p, f, xs)) <= 2 / math.pi * l1 * 0.7 / (0.49 - xs**2))

    def test_domain(self):
        with pytest.raises(DomainError):
            apply_Q(MapParam(0.5), poly([1.0]), 0.5)

    def test_TQ_matches_T_of_Q(self):
        p = MapParam(0.5)
        f = poly([0.2, 1.0, -0.5])
        x = 0.3
        r = apply_truncated(SUBTRANSFER, p, lambda y: apply_Q(p, f, y), x, 3000, correction=True)
        assert apply_TQ(f, x) == pytest.approx(r.value, abs=r.tail_bound + 1e-12)

    def test_decay_bound(self):
        rows = q_decay(MapParam(0.5), poly([0.0, 1.0]), n_max=5)
        for n, sup, bound, err in rows[1:]:
            assert sup + err <= bound
        with pytest.raises(DomainError):
            q_decay(MapParam(1.0), poly([1.0]))


class TestIdentities:
    def test_endpoint_half(self):
        lhs, rhs, tail = endpoint_check(MapParam(0.5), poly([0.0, 1.0]), 2000)
        assert rhs == 0.25
        assert abs(lhs - rhs) <= tail

    def test_endpoint_one(self):
        lhs, rhs, tail = endpoint_check(MapParam(1.0), poly([0.0, 1.0]), 2000)
        assert rhs == 1.0
        assert abs(lhs - rhs) <= tail

    def test_endpoint_cubic(self):
        lhs, rhs, tail = endpoint_check(MapParam(0.5), poly([0.0, 0.0, 0.0, 1.0]), 2000)
        assert rhs == 0.5 * 0.125
        assert abs(lhs - rhs) <= tail

    @pytest.mark.parametrize("beta,xi", [(0.7, 0.33), (0.7, -0.51), (1.0, 0.33), (1.0, -0.51)])
    def test_commutator(self, beta, xi):
        grid = commutator_grid(MapParam(beta), xi, 101)
        assert len(grid) == 101
        assert commutator_check(MapParam(beta), xi, grid) <= 1e-9

    def test_commutator_trivial_outside(self):
        lhs, rhs = commutator_sides(MapParam(0.5), 0.8, commutator_grid(MapParam(0.5), 0.8))
        assert np.all(lhs == 0) and np.all(rhs == 0)

    def test_commutator_against_truncation(self):
        # lhs is T_beta applied to a pole pair; compare with the lattice sum
        p, xi = MapParam(0.7), 0.33
        from gausslab.dynamics import even_frac

        image = float(even_frac(-0.7 / xi))
        f = PoleSum(((1.0, xi), (-1.0, -0.7 / image)))
        x = 0.05
        r = apply_truncated(SUBTRANSFER, p, f, x, 100_000)
        lhs, _ = commutator_sides(p, xi, x)
        assert float(lhs) == pytest.approx(r.value, abs=r.tail_bound + 1e-9)
