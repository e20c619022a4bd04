import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls_torus.field import Field, make_grid, random_zero_mean
from dnls_torus.functionals import (
    ProblemParams,
    alpha_conditions,
    blowup_functional,
    check_condition_i,
    choose_alpha,
    energy_E2,
    holder_majorant,
    holder_middle,
    lifespan_bound,
    lifespan_from_alpha,
    ode_lower_bound,
    ode_singular_time,
    pairing_integral,
    total_density,
)

from .oracles import pairing_dblquad, pairing_quadrature, skewed_field

TWO_PI = 2 * math.pi
seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestPairingIntegral:
    def test_unit_mode(self, grid64):
        u = Field.mode(grid64, 1)
        assert pairing_integral(u) == pytest.approx(2j * math.pi, rel=1e-15)
        assert pairing_quadrature(u) == pytest.approx(2j * math.pi, rel=1e-13)

    def test_zero(self, grid64):
        assert pairing_integral(Field.zeros(grid64)) == 0

    def test_cos_vanishes(self, grid64):
        u = Field(grid64, samples=np.cos(grid64.points))
        assert abs(pairing_integral(u)) < 1e-15
        assert abs(pairing_quadrature(u)) < 1e-13

    @pytest.mark.parametrize("k", [2, 3, -2, 7])
    def test_single_modes_against_oracle(self, grid64, k):
        u = Field.mode(grid64, k)
        oracle = pairing_quadrature(u)
        assert oracle == pytest.approx(TWO_PI * 1j / k, rel=1e-12)
        assert pairing_integral(u) == pytest.approx(oracle, rel=1e-12)

    def test_against_adaptive_double_quadrature(self, grid64):
        modes = {1: 0.7 - 0.2j, -2: 0.3j, 3: -0.4 + 0.1j}
        c = np.zeros(64, complex)
        for k, v in modes.items():
            c[grid64.index(k)] = v
        expected = pairing_dblquad(modes)
        assert abs(expected.real) < 1e-9
        assert pairing_integral(Field(grid64, coefficients=c)) == pytest.approx(expected, rel=1e-9)

    @given(seeds, st.integers(1, 40), st.floats(0.3, 3.0))
    @settings(max_examples=100, deadline=None)
    def test_closed_form_matches_quadrature(self, seed, n_modes, decay):
        u = skewed_field(make_grid(128), seed, n_modes, decay)
        closed = pairing_integral(u)
        oracle = pairing_quadrature(u)
        assert abs(closed - oracle) <= 1e-10 * abs(oracle) + 1e-14
        assert abs(oracle.real) <= 1e-10 * abs(oracle) + 1e-14

    def test_rejects_nonzero_mean(self, grid64):
        with pytest.raises(ValueError, match="zero-mean"):
            pairing_integral(Field(grid64, samples=np.ones(64)))


class TestBlowupFunctional:
    def test_examples(self, grid64):
        u = Field.mode(grid64, 1)
        assert blowup_functional(u, 1) == pytest.approx(TWO_PI)
        assert blowup_functional(u, 1j) == pytest.approx(0.0, abs=1e-15)
        assert blowup_functional(random_zero_mean(grid64, 1, 10), 0) == 0

    @given(seeds, st.floats(-10, 10), st.complex_numbers(max_magnitude=10))
    @settings(max_examples=50, deadline=None)
    def test_linear_in_real_scaling(self, seed, c, alpha):
        u = skewed_field(make_grid(64), seed, 12, 1.0)
        lhs = blowup_functional(u, c * alpha)
        rhs = c * blowup_functional(u, alpha)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300) + 1e-14


class TestConditions:
    def test_condition_i_examples(self, grid64):
        assert check_condition_i(Field.mode(grid64, 1), 1)
        assert not check_condition_i(Field.mode(grid64, 1), -1j)
        assert not check_condition_i(Field.mode(grid64, -1), 1)

    def test_choose_alpha_examples(self, grid64):
        u = Field.mode(grid64, 1)
        assert choose_alpha(u, 1) == 1.0
        a, b = alpha_conditions(u, 1, 1.0)
        assert a == 1.0 and b == pytest.approx(TWO_PI)
        assert choose_alpha(u, -2) is None
        assert choose_alpha(Field.zeros(grid64), 1) is None
        assert choose_alpha(Field.mode(grid64, -1), -3) == -1.0

    @given(seeds, st.floats(0.01, 5) | st.floats(-5, -0.01), st.floats(-5, 5))
    @settings(max_examples=200, deadline=None)
    def test_equivalence(self, seed, re_lam, im_lam):
        u = skewed_field(make_grid(64), seed, 12, 1.0)
        lam = complex(re_lam, im_lam)
        alpha = choose_alpha(u, lam)
        assert (alpha is not None) == check_condition_i(u, lam)
        if alpha is not None:
            a, b = alpha_conditions(u, lam, alpha)
            assert a > 0 and b > 0

    @given(seeds, st.floats(0.01, 5) | st.floats(-5, -0.01),
           st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
    @settings(max_examples=200, deadline=None)
    def test_no_complex_alpha_when_condition_fails(self, seed, re_lam, alpha):
        # I is purely imaginary, so Im(alpha I) = Re(alpha) Im(I): a valid alpha
        # of any phase exists only when the sign condition holds.
        u = skewed_field(make_grid(64), seed, 12, 1.0)
        lam = complex(re_lam, 0.3)
        a, b = alpha_conditions(u, lam, alpha)
        if a > 0 and b > 0:
            assert check_condition_i(u, lam)


class TestLifespanBound:
    def test_headline(self, grid64):
        assert lifespan_bound(Field.mode(grid64, 1), 3, 1) == pytest.approx(TWO_PI ** 2 / 2,
                                                                            rel=1e-14)
        assert TWO_PI ** 2 / 2 == pytest.approx(19.7392, abs=5e-5)

    @pytest.mark.parametrize("amp", [0.5, 2.0, 3.7])
    def test_amplitude_scaling(self, grid64, amp):
        b = lifespan_bound(Field.mode(grid64, 1, amp), 3, 1)
        assert b == pytest.approx(TWO_PI ** 2 / (2 * amp ** 2), rel=1e-14)

    @pytest.mark.parametrize("p", [1.5, 2.0, 5.0])
    def test_general_scaling(self, grid64, p):
        u = skewed_field(grid64, 4, 8)
        if not check_condition_i(u, 1):
            u = u.conj()
        assert lifespan_bound(3.0 * u, p, 1) == pytest.approx(
            lifespan_bound(u, p, 1) / 3.0 ** (p - 1), rel=1e-12)

    def test_errors(self, grid64):
        with pytest.raises(ValueError, match="undefined"):
            lifespan_bound(Field.mode(grid64, 1), 3, 1j)
        with pytest.raises(ValueError, match="infinite"):
            lifespan_bound(Field.zeros(grid64), 3, 1)

    @pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("p", [1.5, 3.0, 5.0])
    def test_alpha_scale_invariance(self, grid64, c, p):
        u = skewed_field(grid64, 11, 10)
        lam = 0.7 - 0.2j
        if not check_condition_i(u, lam):
            u = u.conj()
        alpha = choose_alpha(u, lam)
        m0 = blowup_functional(u, alpha)
        base = lifespan_from_alpha(m0, alpha, p, lam)
        scaled = lifespan_from_alpha(blowup_functional(u, c * alpha), c * alpha, p, lam)
        assert scaled == pytest.approx(base, rel=1e-12)
        assert base == pytest.approx(lifespan_bound(u, p, lam), rel=1e-12)

    @given(st.floats(0.01, 10), st.floats(-10, 10), st.floats(1.1, 6))
    @settings(max_examples=200, deadline=None)
    def test_complex_alpha_never_beats_real(self, re_a, im_a, p):
        g = make_grid(64)
        u = Field.mode(g, 1, 0.8)
        best = lifespan_bound(u, p, 1.0)
        m0 = blowup_functional(u, complex(re_a, im_a))
        assert lifespan_from_alpha(m0, complex(re_a, im_a), p, 1.0) >= best * (1 - 1e-12)


class TestTotalDensity:
    def test_examples(self, grid64):
        x = grid64.points
        assert total_density(Field(grid64, samples=np.ones(64))) == pytest.approx(TWO_PI)
        assert abs(total_density(Field.mode(grid64, 1))) == 0
        assert total_density(Field(grid64, samples=3 + np.exp(1j * x))) == pytest.approx(6 * math.pi)


class TestEnergyE2:
    def test_examples(self, grid64):
        assert energy_E2(Field.mode(grid64, 1)) == pytest.approx(3 * math.pi, rel=1e-13)
        assert energy_E2(Field.mode(grid64, -1)) == pytest.approx(math.pi, rel=1e-13)
        assert energy_E2(Field(grid64, samples=np.full(64, 2 - 1j))) == pytest.approx(0, abs=1e-13)

    def test_explicit_derivative(self, grid64):
        w = Field.mode(grid64, 2, 0.5)
        dw = 2j * w.samples
        assert energy_E2(w, dw) == pytest.approx(energy_E2(w), rel=1e-13)


class TestHolder:
    def test_headline_chain(self, grid64):
        u = Field.mode(grid64, 1)
        assert holder_majorant(u, 1, 3) == pytest.approx(TWO_PI ** 2, rel=1e-13)
        assert abs(blowup_functional(u, 1)) == pytest.approx(TWO_PI)
        assert holder_middle(u, 1) == pytest.approx(TWO_PI ** 2, rel=1e-13)

    def test_zero(self, grid64):
        assert holder_majorant(Field.zeros(grid64), 1, 3) == 0

    @given(seeds, st.complex_numbers(max_magnitude=100), st.floats(1.01, 7))
    @settings(max_examples=300, deadline=None)
    def test_domination(self, seed, alpha, p):
        u = random_zero_mean(make_grid(128), seed, 20, 1.0)
        m = abs(blowup_functional(u, alpha))
        mid = holder_middle(u, alpha)
        top = holder_majorant(u, alpha, p)
        assert m <= mid * (1 + 1e-10) + 1e-14
        assert mid <= top * (1 + 1e-10) + 1e-14

    def test_rejects_p(self, grid64):
        with pytest.raises(ValueError):
            holder_majorant(Field.mode(grid64, 1), 1, 1.0)


class TestOdeLowerBound:
    def test_t0(self):
        assert ode_lower_bound(TWO_PI, 0.0, 3, 1, 1) == pytest.approx(TWO_PI, rel=1e-15)

    def test_singular_time_matches_lifespan(self, grid64):
        t_star = TWO_PI ** 3 / (2 * TWO_PI)
        assert t_star == pytest.approx(TWO_PI ** 2 / 2)
        assert ode_singular_time(TWO_PI, 3, 1, 1) == pytest.approx(t_star, rel=1e-14)
        assert t_star == pytest.approx(lifespan_bound(Field.mode(grid64, 1), 3, 1), rel=1e-14)
        assert ode_lower_bound(TWO_PI, t_star * (1 + 1e-12), 3, 1, 1) == math.inf

    def test_near_singular_time(self):
        t_star = TWO_PI ** 2 / 2
        assert ode_lower_bound(TWO_PI, 0.999999 * t_star, 3, 1, 1) > 1e6 * TWO_PI

    def test_monotone(self):
        vals = [ode_lower_bound(1.0, t, 2.5, 0.5 + 1j, 2.0) for t in np.linspace(0, 50, 20)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_errors(self):
        with pytest.raises(ValueError):
            ode_lower_bound(0.0, 1.0, 3, 1, 1)
        with pytest.raises(ValueError):
            ode_lower_bound(-1.0, 1.0, 3, 1, 1)
        with pytest.raises(ValueError):
            ode_lower_bound(1.0, 1.0, 3, 1, -1)

    def test_solves_comparison_ode(self):
        # dM/dt = 2 (2pi)^-p |a|^-(p+1)/2 Re a Re lam M^((p+1)/2), checked by finite differences
        p, lam, a, m0 = 2.5, 0.8, 1.3 - 0.4j, 0.7
        rate = 2 * TWO_PI ** (-p) * abs(a) ** (-(p + 1) / 2) * a.real * lam
        for t in (0.5, 5.0, 20.0):
            h = 1e-4
            fd = (ode_lower_bound(m0, t + h, p, lam, a) - ode_lower_bound(m0, t - h, p, lam, a)) / (2 * h)
            m = ode_lower_bound(m0, t, p, lam, a)
            assert fd == pytest.approx(rate * m ** ((p + 1) / 2), rel=1e-6)


class TestProblemParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            ProblemParams(1.0, 1)
        p = ProblemParams(3, 1, None)
        assert p.lam == 1 + 0j and p.alpha is None
        assert not p.blowup_mode
        assert p.with_alpha(1).blowup_mode
        assert not p.with_alpha(-1).blowup_mode


def test_symmetric_random_fields_have_vanishing_pairing(grid128):
    # equal magnitudes at +k and -k cancel in sum |c_k|^2 / k
    for seed in range(20):
        u = random_zero_mean(grid128, seed, 20, 1.0)
        assert abs(pairing_integral(u)) < 1e-13
        assert abs(pairing_quadrature(u)) < 1e-12
