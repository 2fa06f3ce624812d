import json
import math

import numpy as np
import pytest

from l4twist.dynamics import RotatingState, energy_rotating, frequencies, lagrange_point
from l4twist.errors import (
    DegenerateFrequency,
    NoPositiveRoot,
    ResonanceTooClose,
)
from l4twist.normalform import (
    NormalForm,
    birkhoff_normalize,
    linear_symplectic_normalize,
    nf_rotation_number,
    nf_twist,
    nf_verify,
    normal_form,
    short_period_W_of_E,
    taylor_at_L4,
)

from oracles import order4_normal_form

J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


class TestTaylor:
    def test_low_degrees_vanish(self):
        h = taylor_at_L4(0.01, 6)
        assert all(sum(e) >= 2 for e in h.coeffs)

    def test_matches_energy_nearby(self):
        mu = 0.01
        h = taylor_at_L4(mu, 8)
        l4 = lagrange_point(mu).as_array()
        rng = np.random.default_rng(0)
        for _ in range(5):
            d = rng.normal(size=4)
            d *= 1e-2 / np.linalg.norm(d)
            taylor_val = complex(h.evaluate(d)).real
            exact = energy_rotating(RotatingState.from_array(l4 + d), mu)
            assert abs(taylor_val - exact) < 1e-14

    def test_quadratic_part_frequencies(self):
        mu = 0.013
        h2 = taylor_at_L4(mu, 4).degree_part(2)
        _, h2n = linear_symplectic_normalize(h2)
        f = frequencies(mu)
        assert complex(h2n.coeffs[(0, 0, 2, 0)]).real * 2 == pytest.approx(
            f.omega_s, abs=1e-12
        )
        assert complex(h2n.coeffs[(0, 2, 0, 0)]).real * 2 == pytest.approx(
            -f.omega_l, abs=1e-12
        )


class TestLinearNormalization:
    def test_symplectic_and_diagonal(self):
        h2 = taylor_at_L4(0.01, 4).degree_part(2)
        M, h2n = linear_symplectic_normalize(h2)
        assert np.max(np.abs(M.T @ J4 @ M - J4)) < 1e-12
        assert np.max(np.abs(M.imag)) == 0.0  # real transform
        # no cross terms survive
        for e, c in h2n.coeffs.items():
            assert e in {(2, 0, 0, 0), (0, 2, 0, 0), (0, 0, 2, 0), (0, 0, 0, 2)}, e
        # indefinite signature: the slow block is negative
        assert complex(h2n.coeffs[(0, 2, 0, 0)]).real < 0
        assert complex(h2n.coeffs[(2, 0, 0, 0)]).real > 0


class TestBirkhoff:
    def test_quadratic_coefficients_are_frequencies(self):
        res = normal_form(0.0098, 8)
        nf = res.normal_form
        f = frequencies(0.0098)
        assert nf.coeffs[1, 0] == pytest.approx(f.omega_s, abs=1e-12)
        assert nf.coeffs[0, 1] == pytest.approx(-f.omega_l, abs=1e-12)

    def test_order4_quartic_equals_order8(self):
        r4 = normal_form(0.0097, 4).normal_form
        r8 = normal_form(0.0097, 8).normal_form
        assert r4.A == r8.A and r4.B == r8.B and r4.C == r8.C

    @pytest.mark.parametrize("mu", [0.0092, 0.0105])
    def test_against_independent_solver(self, mu):
        oracle = order4_normal_form(mu)
        nf = normal_form(mu, 8).normal_form
        assert nf.A == pytest.approx(oracle["A"], abs=1e-10)
        assert nf.B == pytest.approx(oracle["B"], abs=1e-10)
        assert nf.C == pytest.approx(oracle["C"], abs=1e-10)

    def test_sweep_realness_and_residuals(self):
        for mu in np.linspace(0.0085, 0.0130, 20):
            try:
                res = normal_form(float(mu), 8)
            except ResonanceTooClose:
                continue
            nf = res.normal_form
            assert nf.imag_residue < 1e-10
            rep = nf_verify(res.taylor, res)
            assert rep.non_action_residual < 1e-10
            assert rep.imag_residue < 1e-10
            f = frequencies(float(mu))
            assert nf_rotation_number(nf, 0, 0) * f.ratio == pytest.approx(
                1.0, abs=1e-12
            )

    def test_twist_sign_change_at_critical_mass(self):
        c_low = nf_twist(normal_form(0.0104, 8).normal_form, 0, 0)
        c_high = nf_twist(normal_form(0.0115, 8).normal_form, 0, 0)
        assert c_low > 0 > c_high

    def test_resonance_rejection(self):
        with pytest.raises(ResonanceTooClose) as info:
            normal_form(0.013509, 8)
        assert info.value.k == (1, 3)
        with pytest.raises(ResonanceTooClose):
            normal_form(0.013516016022452504, 8)

    def test_residual_grows_toward_resonance(self):
        r_mid = nf_verify(*_taylor_result(0.0125))
        r_near = nf_verify(*_taylor_result(0.0133))
        assert r_near.non_action_residual > r_mid.non_action_residual

    def test_truncated_generators_leave_high_orders(self):
        res = normal_form(0.01, 8)
        full = nf_verify(res.taylor, res)
        partial = nf_verify(res.taylor, res, res.generators[:4])  # degrees 3..6
        assert full.non_action_residual < 1e-10
        assert partial.per_degree[7] > 1e2
        assert partial.per_degree[8] > 1e2


def _taylor_result(mu):
    res = normal_form(mu, 8)
    return res.taylor, res


class TestActionFunctions:
    def test_w_origin_is_inverse_ratio(self):
        nf = normal_form(0.01, 8).normal_form
        f = frequencies(0.01)
        assert nf_rotation_number(nf, 0, 0) == pytest.approx(1 / f.ratio, abs=1e-14)

    def test_w_quadratic_truncation_closed_form(self):
        nf = normal_form(0.0099, 8).normal_form
        nf2 = nf.truncated(2)
        i_s = 0.013
        expected = (nf.omega_l - nf.B * i_s) / (nf.omega_s + nf.A * i_s)
        assert nf_rotation_number(nf2, i_s, 0.0) == pytest.approx(expected, abs=1e-14)

    def test_w_continuity_at_origin(self):
        nf = normal_form(0.0095, 8).normal_form
        w0 = nf_rotation_number(nf, 0, 0)
        assert abs(nf_rotation_number(nf, 1e-9, 0) - w0) < 1e-7

    def test_twist_origin_closed_form(self):
        nf = normal_form(0.0102, 8).normal_form
        expected = (
            nf.A * nf.omega_l**2
            + nf.C * nf.omega_s**2
            + 2 * nf.B * nf.omega_s * nf.omega_l
        )
        assert nf_twist(nf, 0, 0) == pytest.approx(expected, rel=1e-12)

    def test_twist_matches_derivative_along_energy_line(self):
        # along H = E parametrized by I_l: dW/dI_l = -C / H1^3
        from l4twist.twist import _solve_is_on_line

        nf = normal_form(0.0097, 8).normal_form
        E, i_l = 0.02, 0.0008
        h = 1e-6

        def w_line(il):
            i_s = _solve_is_on_line(nf, E, il, E / nf.omega_s)
            return nf_rotation_number(nf, i_s, il)

        dw = (w_line(i_l + h) - w_line(i_l - h)) / (2 * h)
        i_s = _solve_is_on_line(nf, E, i_l, E / nf.omega_s)
        h1 = nf.partial(1, 0, i_s, i_l)
        c_from_derivative = -dw * h1**3
        assert nf_twist(nf, i_s, i_l) == pytest.approx(c_from_derivative, rel=1e-3)

    def test_short_period_roots(self):
        nf = normal_form(0.01, 8).normal_form
        f = frequencies(0.01)
        assert short_period_W_of_E(nf, 0.0) == pytest.approx(1 / f.ratio, abs=1e-14)
        with pytest.raises(NoPositiveRoot):
            short_period_W_of_E(nf, -0.01)

    def test_short_period_slope_matches_numerics(self):
        # sign of dW/dE agrees with the section fixed point at mu = 0.01135
        from l4twist.rotation import fixed_point_rotation_number

        nf = normal_form(0.01135, 8).normal_form
        slope_nf = (short_period_W_of_E(nf, 0.006) - short_period_W_of_E(nf, 0.004)) / 0.002
        w_lo = fixed_point_rotation_number(0.01135, 0.004)
        w_hi = fixed_point_rotation_number(0.01135, 0.006)
        slope_num = (w_hi - w_lo) / 0.002
        assert math.copysign(1, slope_nf) == math.copysign(1, slope_num)
        assert slope_nf == pytest.approx(slope_num, rel=0.05)

    def test_degenerate_frequency_guard(self):
        nf = NormalForm(
            0.01, 1.0, 0.3, 4, np.array([[0.0, -0.3, 0], [1.0, 0, 0], [0, 0, 0]]).T, 0.0
        )
        # H_s = 1 + 0*I_s: craft one whose H_s vanishes at I_s = 1 is awkward;
        # instead check the zero-gradient guard directly
        bad = NormalForm(0.01, 1.0, 0.3, 2, np.zeros((2, 2)), 0.0)
        with pytest.raises(DegenerateFrequency):
            nf_rotation_number(bad, 0.0, 0.0)


class TestSerialization:
    def test_json_round_trip(self):
        nf = normal_form(0.0093, 8).normal_form
        d = json.loads(nf.to_json())
        back = NormalForm.from_json_dict(d)
        assert back.mu == nf.mu
        assert back.order == nf.order
        assert np.array_equal(back.coeffs, nf.coeffs)
        assert {"mu", "omega_s", "omega_l", "order", "coefficients", "residual"} <= set(d)
