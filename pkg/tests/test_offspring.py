from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gwex.errors import BadAlpha, BadDensity, BadPMF, Subcritical, ZeroKey
from gwex.offspring import (constant_speed_bound, mean_escape, new_offspring, speed_constant,
                            speed_variable, tilted_root_degree_pmf, ugw_root_degree_pmf)

from strategies import offspring_laws, pmfs

REGULAR = {2: 1.0}
MIXED = {1: 0.5, 3: 0.5}


def exact_variable(pmf, rho):
    num = sum(F(p) * F(k - 1, k + 1) for k, p in pmf.items())
    den = sum(F(p) * F(1, k + 1) for k, p in pmf.items())
    return (1 - F(rho)) * num / den


def exact_constant(pmf, alpha):
    a = F(alpha)
    return sum(F(p) * F(k - 1, k + 1) / (a * (k + 1) + 1) for k, p in pmf.items())


class TestConstruction:
    def test_regular_mean(self):
        assert new_offspring(REGULAR).mean == 2.0

    def test_mixed_mean(self):
        assert new_offspring(MIXED).mean == 2.0

    def test_zero_key(self):
        with pytest.raises(ZeroKey):
            new_offspring({0: 0.2, 2: 0.8})

    def test_zero_key_with_zero_mass_is_dropped(self):
        assert new_offspring({0: 0.0, 2: 1.0}).support == ((2, 1.0),)

    def test_subcritical(self):
        with pytest.raises(Subcritical):
            new_offspring({1: 1.0})

    @pytest.mark.parametrize("pmf", [{2: -0.1, 3: 1.1}, {2: 0.5}, {}, {2.5: 1.0},
                                     [(2, 0.5), (2, 0.5)], {2: float("nan")}])
    def test_bad_pmf(self, pmf):
        with pytest.raises(BadPMF):
            new_offspring(pmf)

    def test_renormalizes_small_error(self):
        d = new_offspring({1: 0.5 + 4e-10, 3: 0.5})
        assert abs(sum(d.probs) - 1.0) <= 1e-12

    def test_accepts_pairs(self):
        assert new_offspring([(3, 0.5), (1, 0.5)]) == new_offspring(MIXED)

    @given(pmfs())
    def test_invariants(self, pmf):
        d = new_offspring(pmf)
        assert all(0 < p <= 1 for p in d.probs)
        assert abs(sum(d.probs) - 1.0) <= 1e-12
        assert min(d.ks) >= 1
        assert d.mean > 1
        assert list(d.ks) == sorted(d.ks)


class TestSpeeds:
    @pytest.mark.parametrize("pmf,rho,want", [(REGULAR, 0, 1.0), (REGULAR, 0.3, 0.7),
                                              (MIXED, 0, 2 / 3), (REGULAR, 0.6, 0.4)])
    def test_variable_examples(self, pmf, rho, want):
        got = speed_variable(new_offspring(pmf), rho)
        assert got == pytest.approx(want, abs=1e-12)
        assert got == pytest.approx(float(exact_variable(pmf, rho)), abs=1e-12)

    @pytest.mark.parametrize("pmf,alpha,want", [(REGULAR, 0, 1 / 3), (REGULAR, 0.5, 2 / 15),
                                                (MIXED, 1, 0.05)])
    def test_constant_examples(self, pmf, alpha, want):
        got = speed_constant(new_offspring(pmf), alpha)
        assert got == pytest.approx(want, abs=1e-12)
        assert got == pytest.approx(float(exact_constant(pmf, alpha)), abs=1e-12)

    @pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5, float("nan")])
    def test_bad_density(self, rho):
        with pytest.raises(BadDensity):
            speed_variable(new_offspring(REGULAR), rho)

    @pytest.mark.parametrize("alpha", [-0.1, float("inf"), float("nan")])
    def test_bad_alpha(self, alpha):
        with pytest.raises(BadAlpha):
            speed_constant(new_offspring(REGULAR), alpha)

    @given(pmfs(), st.floats(0, 0.999))
    def test_linear_in_vacancy(self, pmf, rho):
        d = new_offspring(pmf)
        assert speed_variable(d, rho) == pytest.approx((1 - rho) * speed_variable(d, 0), rel=1e-12)

    @given(pmfs())
    def test_constant_at_zero_is_walk_speed(self, pmf):
        d = new_offspring(pmf)
        direct = sum(p * (k - 1) / (k + 1) for k, p in pmf.items())
        assert speed_constant(d, 0.0) == pytest.approx(direct / sum(pmf.values()), abs=1e-12)
        assert mean_escape(d) == pytest.approx(speed_constant(d, 0.0), abs=1e-15)

    @given(pmfs(), st.floats(0, 50), st.floats(0.01, 50))
    def test_constant_decreasing(self, pmf, a, gap):
        d = new_offspring(pmf)
        if any(k > 1 for k in d.ks):
            assert speed_constant(d, a + gap) < speed_constant(d, a)
        assert speed_constant(d, 1e9) < 1e-8

    @given(st.integers(2, 8), st.floats(0, 20))
    def test_regular_time_change(self, m, alpha):
        d = new_offspring({m: 1.0})
        rho = 1 - 1 / (alpha * (m + 1) + 1)
        if rho >= 1:
            return
        assert speed_constant(d, alpha) * (m + 1) == pytest.approx(speed_variable(d, rho), rel=1e-9)

    @given(pmfs(), st.floats(0.01, 20))
    def test_bound(self, pmf, alpha):
        d = new_offspring(pmf)
        lhs, rhs = speed_constant(d, alpha), constant_speed_bound(d, alpha)
        if d.is_degenerate:
            assert lhs == pytest.approx(rhs, rel=1e-12)
        else:
            assert lhs < rhs

    def test_bound_exact_mixed(self):
        # 0.5*(1/2)*(1/5) against (1/4)*(0.5*(1/3) + 0.5*(1/5))
        d = new_offspring(MIXED)
        want = F(1, 4) * (F(1, 2) * F(1, 3) + F(1, 2) * F(1, 5))
        assert constant_speed_bound(d, 1.0) == pytest.approx(float(want), abs=1e-15)


class TestRootDegree:
    def test_regular(self):
        assert ugw_root_degree_pmf(new_offspring(REGULAR)) == [(3, 1.0)]

    def test_mixed(self):
        got = dict(ugw_root_degree_pmf(new_offspring(MIXED)))
        assert got[2] == pytest.approx(2 / 3, abs=1e-15)
        assert got[4] == pytest.approx(1 / 3, abs=1e-15)

    def test_tilted_mixed(self):
        # weights 0.5/3 and 0.5/5
        got = dict(tilted_root_degree_pmf(new_offspring(MIXED), 1.0))
        assert got[2] == pytest.approx(float(F(5, 8)), abs=1e-15)
        assert got[4] == pytest.approx(float(F(3, 8)), abs=1e-15)

    @given(pmfs())
    def test_normalized(self, pmf):
        d = new_offspring(pmf)
        assert sum(p for _, p in ugw_root_degree_pmf(d)) == pytest.approx(1.0, abs=1e-12)

    @given(pmfs())
    def test_matches_fractions(self, pmf):
        d = new_offspring(pmf)
        w = {k + 1: F(p) / (k + 1) for k, p in pmf.items()}
        z = sum(w.values())
        for deg, p in ugw_root_degree_pmf(d):
            assert p == pytest.approx(float(w[deg] / z), abs=1e-12)
