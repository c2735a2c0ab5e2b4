import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import comb

from mixldp import (
    GridSpec,
    LengthMismatch,
    Mean,
    grid_min_condition,
    grid_min_general,
    point_mass,
    psi_profile,
    rate_value,
    relative_entropy,
    support_bounds,
)
from mixldp.oracle import compositions, grid_points

from conftest import FIXTURES


class TestGrid:
    @pytest.mark.parametrize("m,s", [(1, 1), (5, 2), (12, 3), (7, 4), (4, 6)])
    def test_size_and_rows(self, m, s):
        k = compositions(m, s)
        assert k.shape == (comb(m + s - 1, s - 1, exact=True), s)
        assert GridSpec(m).size(s) == k.shape[0]
        assert np.all(k.sum(axis=1) == m) and np.all(k >= 0)
        assert len({tuple(row) for row in k}) == k.shape[0]

    def test_lexicographic(self):
        k = compositions(3, 3)
        assert [tuple(r) for r in k] == sorted(tuple(r) for r in k)

    def test_cap(self):
        with pytest.raises(ValueError):
            grid_points(GridSpec(2), 7)


class TestRelativeEntropy:
    def test_values(self):
        assert relative_entropy([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert relative_entropy([0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.130812035941, abs=1e-12)
        assert relative_entropy([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_length(self):
        with pytest.raises(LengthMismatch):
            relative_entropy([1.0], [0.5, 0.5])

    @given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3), st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
    def test_gibbs(self, p, q):
        if sum(p) == 0:
            return
        p, q = np.array(p) / sum(p), np.array(q) / sum(q)
        assert relative_entropy(p, q) >= -1e-12


class TestGridMinGeneral:
    def test_fixture_a(self):
        fa = FIXTURES["A"]()
        res = grid_min_general(fa.rho, fa.components, fa.pi, 0.25, GridSpec(200, 1 / 400))
        assert res.min_entropy == pytest.approx(0.1308, abs=0.01)
        assert res.feasible_count >= 1

    def test_outside(self):
        fa = FIXTURES["A"]()
        res = grid_min_general(fa.rho, fa.components, fa.pi, 1.5, GridSpec(50))
        assert res.min_entropy == math.inf and res.feasible_count == 0 and res.argmin is None

    def test_at_r0(self, any_fixture):
        res = grid_min_general(any_fixture.rho, any_fixture.components, any_fixture.pi,
                               any_fixture.r0, GridSpec(200))
        assert res.min_entropy <= 5e-3

    def test_vector_levels(self, fix_b):
        rs = [1.6, 2.0, 2.5]
        many = grid_min_general(fix_b.rho, fix_b.components, fix_b.pi, rs, GridSpec(100))
        for r, res in zip(rs, many):
            one = grid_min_general(fix_b.rho, fix_b.components, fix_b.pi, r, GridSpec(100))
            assert res.min_entropy == one.min_entropy


class TestGridMinCondition:
    def test_fixture_b(self, fix_b):
        res = grid_min_condition(psi_profile(fix_b.rho, fix_b.components, 2.0), fix_b.pi, GridSpec(400))
        assert res.min_entropy == pytest.approx(rate_value(fix_b, 2.0), abs=0.01)

    def test_degenerate(self):
        comps = (point_mass(1.0), point_mass(1.0))
        res = grid_min_condition(psi_profile(Mean(), comps, 1.3), [0.5, 0.5], GridSpec(100))
        assert res.min_entropy == math.inf and res.feasible_count == 0

    def test_argmin(self, fix_a):
        res = grid_min_condition(psi_profile(fix_a.rho, fix_a.components, 0.25), fix_a.pi, GridSpec(400))
        assert np.max(np.abs(res.argmin - [0.75, 0.25])) <= 2 / 400

    def test_frozen_minimum(self, fix_d):
        # frozen oracle output, m = 400
        res = grid_min_condition(psi_profile(fix_d.rho, fix_d.components, 0.5), fix_d.pi, GridSpec(400))
        assert res.min_entropy == pytest.approx(0.19737758, abs=6e-3)

    @settings(max_examples=15, deadline=None)
    @given(u=st.floats(0.05, 0.95))
    def test_upper_bounds_rate_on_exact_points(self, u):
        # grid points that hit the constraint exactly cannot beat the infimum
        fa = FIXTURES["A"]()
        m = 40
        r = round(u * m) / m
        res = grid_min_general(fa.rho, fa.components, fa.pi, r, GridSpec(m, 1e-12))
        assert res.min_entropy >= rate_value(fa, r) - 1e-12
