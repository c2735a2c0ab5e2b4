import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixldp import (
    Branch,
    ConditionUnsupported,
    DegenerateProblem,
    ExpectedShortfall,
    Exponential,
    Gaussian,
    Mean,
    OutOfInterior,
    RateProblem,
    curvature,
    decay_constant,
    lambda_star,
    minimizer,
    point_mass,
    r_zero,
    rate,
    rate_closed_s2,
    rate_closed_s3_affine,
    rate_curve,
    rate_value,
    support_bounds,
)
from mixldp.oracle import relative_entropy
from mixldp.ratefn import reduce_support, solve_multiplier

from conftest import B_QUANTILE, fixture_a, fixture_d

# frozen reference values
A_RATE_025 = math.log(2) + 0.25 * math.log(0.25) + 0.75 * math.log(0.75)  # 0.130812035941
D_T = (-1 + math.sqrt(13)) / 6
D_RATE_05 = 0.1973775880
C_CURVATURE = 4.682694


def interior(problem, k=50):
    b = support_bounds(problem)
    return np.linspace(b.lower, b.upper, k + 2)[1:-1]


class TestReduceSupport:
    def test_drop_null(self):
        laws = (point_mass(0.0), point_mass(1.0), point_mass(2.0))
        w, kept, keep = reduce_support([0.5, 0.5, 0.0], laws)
        np.testing.assert_array_equal(w, [0.5, 0.5])
        assert kept == laws[:2]
        np.testing.assert_array_equal(keep, [0, 1])
        w, kept, keep = reduce_support([0.2, 0.0, 0.8], laws)
        assert kept == (laws[0], laws[2])

    def test_single(self):
        w, kept, _ = reduce_support([1.0], (point_mass(1.0),))
        np.testing.assert_array_equal(w, [1.0])

    def test_expand(self):
        p = RateProblem(Mean(), (point_mass(0.0), point_mass(1.0), point_mass(2.0)), [0.2, 0.0, 0.8])
        assert p.size == 2 and p.full_size == 3
        np.testing.assert_array_equal(minimizer(p, p.r0), [0.2, 0.0, 0.8])


class TestRZero:
    def test_values(self, fix_a, fix_b, fix_c):
        assert r_zero(fix_a) == 0.5
        assert r_zero(fix_b) == pytest.approx(B_QUANTILE, abs=1e-9)
        assert r_zero(fix_c) == pytest.approx(math.log((1 + math.e) / 2), abs=1e-12)

    def test_es_rejected(self):
        with pytest.raises(ConditionUnsupported, match="ES requires common α-quantile"):
            RateProblem(ExpectedShortfall(0.95), (Exponential(1.0), Exponential(2.0)), [0.3, 0.7])


class TestSupportBounds:
    def test_atoms(self, fix_a):
        b = support_bounds(fix_a)
        assert (b.lower, b.upper) == (0.0, 1.0)
        assert b.argmin == (0,) and b.argmax == (1,)

    def test_quantile(self, fix_b):
        b = support_bounds(fix_b)
        assert b.lower == pytest.approx(-math.log(0.05) / 2, abs=1e-12)
        assert b.upper == pytest.approx(-math.log(0.05), abs=1e-12)
        assert b.lower < b.r0 < b.upper

    def test_degenerate(self):
        p = RateProblem(Mean(), (point_mass(1.0), point_mass(1.0)), [0.4, 0.6])
        b = support_bounds(p)
        assert b.lower == b.upper == 1.0 and b.degenerate


class TestMultiplier:
    def test_zero_at_r0(self, any_fixture):
        assert abs(lambda_star(any_fixture, any_fixture.r0)) <= 1e-8

    def test_fixture_values(self, fix_a, fix_d):
        assert lambda_star(fix_a, 0.25) == pytest.approx(math.log(3), abs=1e-9)
        assert lambda_star(fix_d, 0.5) == pytest.approx(-math.log(D_T), abs=1e-9)

    def test_outside_interior(self, fix_a):
        with pytest.raises(OutOfInterior):
            lambda_star(fix_a, 1.0)

    @settings(max_examples=60)
    @given(
        pi=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
        psis=st.lists(st.floats(-50.0, 50.0), min_size=6, max_size=6),
    )
    def test_solves_tilted_mean(self, pi, psis):
        pi = np.array(pi) / sum(pi)
        psis = np.array(psis[: pi.size])
        if not (psis.min() < -1e-3 and psis.max() > 1e-3):
            return
        lam = solve_multiplier(pi, psis)
        w = pi * np.exp(-lam * (psis - psis.mean()))
        w /= w.sum()
        assert abs(w @ psis) <= 1e-8 * max(1.0, np.abs(psis).max())


class TestMinimizer:
    def test_r0_gives_pi(self, any_fixture):
        np.testing.assert_allclose(minimizer(any_fixture, any_fixture.r0), any_fixture.pi, atol=1e-10)

    def test_tilt(self, fix_a):
        np.testing.assert_allclose(minimizer(fix_a, 0.25), [0.75, 0.25], atol=1e-9)

    def test_boundary(self, fix_a):
        np.testing.assert_array_equal(minimizer(fix_a, 1.0), [0.0, 1.0])
        np.testing.assert_array_equal(minimizer(fix_a, 0.0), [1.0, 0.0])

    def test_feasible_and_optimal_value(self, any_fixture):
        for r in interior(any_fixture, 9):
            res = rate(any_fixture, r)
            p = res.minimizer
            assert abs(p @ any_fixture.psi_values(r)) <= 1e-8
            assert res.value == pytest.approx(relative_entropy(p, any_fixture.pi), abs=1e-10)


class TestRate:
    def test_zero_at_r0(self, any_fixture):
        res = rate(any_fixture, any_fixture.r0)
        assert res.branch is Branch.INTERIOR
        assert res.value <= 1e-8

    def test_spot_values(self, fix_a, fix_d):
        assert rate_value(fix_a, 0.25) == pytest.approx(A_RATE_025, abs=1e-10)
        assert rate_value(fix_a, 0.25) == pytest.approx(0.13081, abs=1e-5)
        assert rate_value(fix_d, 0.5) == pytest.approx(D_RATE_05, abs=1e-9)

    def test_branches(self, fix_a):
        lo, hi, out = rate(fix_a, 0.0), rate(fix_a, 1.0), rate(fix_a, -0.1)
        assert lo.branch is Branch.LOWER_BOUNDARY and lo.value == pytest.approx(math.log(2), abs=1e-12)
        assert hi.branch is Branch.UPPER_BOUNDARY and hi.value == pytest.approx(math.log(2), abs=1e-12)
        assert out.branch is Branch.OUTSIDE and out.value == math.inf and out.minimizer is None

    def test_degenerate(self):
        p = RateProblem(Mean(), (point_mass(1.0), point_mass(1.0)), [0.4, 0.6])
        assert rate(p, 1.0).value == 0.0
        assert rate(p, 1.0).branch is Branch.DEGENERATE
        assert rate(p, 1.1).value == math.inf

    def test_rounded_psi_near_boundary(self, fix_c):
        # exp(r) rounds to 1 here, so psi has no strict sign change
        r = 1.3877787807814457e-17
        res = rate(fix_c, r)
        assert res.value == pytest.approx(math.log(2), abs=1e-15)
        np.testing.assert_array_equal(minimizer(fix_c, r), [1.0, 0.0])
        assert rate_value(fix_c, np.nextafter(1.0, 0.0)) == pytest.approx(math.log(2), abs=1e-12)

    def test_nonnegative_and_unimodal(self, any_fixture):
        rs = interior(any_fixture, 60)
        vals = np.array([rate_value(any_fixture, r) for r in rs])
        assert np.all(vals >= 0)
        left, right = rs < any_fixture.r0, rs > any_fixture.r0
        assert np.all(np.diff(vals[left]) < 0)
        assert np.all(np.diff(vals[right]) > 0)

    def test_convex(self, any_fixture):
        rs = interior(any_fixture, 60)
        vals = np.array([rate_value(any_fixture, r) for r in rs])
        assert np.all(np.diff(vals, 2) > -1e-10)

    def test_curve_matches_pointwise(self, fix_b):
        rs = np.linspace(1.3, 3.2, 17)
        for r, res in zip(rs, rate_curve(fix_b, rs, workers=3)):
            assert res.value == rate_value(fix_b, r)

    def test_boundary_limit_is_continuous(self, fix_b):
        b = support_bounds(fix_b)
        eps = 1e-7
        assert rate_value(fix_b, b.lower + eps) == pytest.approx(rate_value(fix_b, b.lower), abs=1e-4)
        assert rate_value(fix_b, b.upper - eps) == pytest.approx(rate_value(fix_b, b.upper), abs=1e-4)


class TestClosedForms:
    @pytest.mark.parametrize("name", ["A", "B", "C"])
    def test_s2(self, name):
        from conftest import FIXTURES

        p = FIXTURES[name]()
        for r in interior(p):
            assert rate_closed_s2(p, r) == pytest.approx(rate_value(p, r), abs=1e-10)

    def test_s2_spot(self, fix_a, fix_b):
        assert rate_closed_s2(fix_a, 0.25) == pytest.approx(0.13081, abs=1e-5)
        assert abs(rate_closed_s2(fix_b, fix_b.r0)) <= 1e-8
        p = RateProblem(Mean(), (point_mass(0.0), point_mass(1.0)), [0.3, 0.7])
        expected = 0.5 * math.log(0.5 / 0.3) + 0.5 * math.log(0.5 / 0.7)
        assert rate_closed_s2(p, 0.5) == pytest.approx(expected, abs=1e-12)

    def test_s3_affine(self):
        pi = np.full(3, 1 / 3)
        assert rate_closed_s3_affine(lambda r: -r, 1.0, pi, 0.5) == pytest.approx(D_RATE_05, abs=1e-10)
        assert abs(rate_closed_s3_affine(lambda r: -r, 1.0, pi, 1.0)) <= 1e-8
        assert rate_closed_s3_affine(lambda r: -r, 1.0, pi, 1e-9) == pytest.approx(math.log(3), abs=1e-6)

    def test_s3_matches_tilt(self, fix_d):
        for r in interior(fix_d):
            assert rate_closed_s3_affine(lambda x: -x, 1.0, fix_d.pi, r) == pytest.approx(
                rate_value(fix_d, r), abs=1e-10
            )

    @settings(max_examples=40)
    @given(pi=st.lists(st.floats(0.02, 1.0), min_size=3, max_size=3), u=st.floats(0.01, 0.99))
    def test_s3_random_weights(self, pi, u):
        pi = np.array(pi) / sum(pi)
        laws = (point_mass(0.0), point_mass(1.0), point_mass(2.0))
        p = RateProblem(Mean(), laws, pi)
        r = 2.0 * u
        assert rate_closed_s3_affine(lambda x: -x, 1.0, pi, r) == pytest.approx(rate_value(p, r), abs=1e-9)

    def test_s2_interior_only(self, fix_a):
        with pytest.raises(OutOfInterior):
            rate_closed_s2(fix_a, 0.0)


class TestCurvature:
    def test_frozen(self, fix_a, fix_c):
        assert curvature(fix_a) == pytest.approx(4.0, abs=1e-12)
        assert curvature(fix_c) == pytest.approx(C_CURVATURE, abs=1e-6)

    def test_finite_difference(self, any_fixture):
        h, r0 = 1e-4, any_fixture.r0
        fd = (rate_value(any_fixture, r0 + h) - 2 * rate_value(any_fixture, r0)
              + rate_value(any_fixture, r0 - h)) / h**2
        assert curvature(any_fixture) == pytest.approx(fd, rel=1e-3)

    def test_gaussian_mean(self):
        p = RateProblem(Mean(), (Gaussian(0.0, 1.0), Gaussian(2.0, 1.0), Gaussian(5.0, 9.0)), [0.2, 0.5, 0.3])
        roots = np.array([0.0, 2.0, 5.0])
        assert curvature(p) == pytest.approx(1.0 / (p.pi @ roots**2 - p.r0**2), rel=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateProblem):
            curvature(RateProblem(Mean(), (point_mass(1.0), point_mass(1.0)), [0.5, 0.5]))


class TestDecayConstant:
    def test_values(self, fix_a):
        assert decay_constant(fix_a, 0.25) == pytest.approx(0.13081, abs=1e-5)
        assert decay_constant(fix_a, 0.6) == math.inf
        assert decay_constant(fix_a, 1e-6) <= 1e-9

    def test_is_minimum_of_sides(self, fix_b):
        d = 0.3
        h = decay_constant(fix_b, d)
        assert h == min(rate_value(fix_b, fix_b.r0 - d), rate_value(fix_b, fix_b.r0 + d))
