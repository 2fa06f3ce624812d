import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l4twist.dynamics import (
    MU1,
    MU3,
    MU4,
    RegularizedState,
    RotatingState,
    energy_regularized,
    energy_rotating,
    frequencies,
    from_regularized,
    jacobi_constant,
    lagrange_point,
    mass_ratio_for_resonance,
    s_constant,
    to_regularized,
    vector_field_regularized,
    vector_field_rotating,
)
from l4twist.errors import BranchPoint, HyperbolicEquilibrium, InvalidParameter, NonFiniteValue

from oracles import linearization_frequencies


class TestFrequencies:
    def test_table_resonance_ratio(self):
        # five-decimal mass ratio of the 1:3 row reproduces the ratio
        f = frequencies(0.01351)
        assert f.ratio == pytest.approx(3.0, abs=1e-3)

    def test_equal_frequencies_at_stability_bound(self):
        # the double root amplifies the rounding of MU1 itself by sqrt(eps)
        f = frequencies(MU1)
        assert f.omega_s == pytest.approx(1 / math.sqrt(2), abs=2e-8)
        assert f.omega_l == pytest.approx(1 / math.sqrt(2), abs=2e-8)

    def test_against_linearization_eigenvalues(self):
        f = frequencies(0.01)
        ws, wl = linearization_frequencies(0.01)
        assert f.omega_s == pytest.approx(ws, abs=1e-9)
        assert f.omega_l == pytest.approx(wl, abs=1e-9)
        assert round(f.omega_s, 5) == 0.96332
        assert round(f.omega_l, 5) == 0.26835
        # ratio 3.59 sits between the 7/2 and 11/3 resonance rows
        assert mass_ratio_for_resonance(11 / 3) < 0.01 < mass_ratio_for_resonance(7 / 2)

    def test_invariants_random_mu(self):
        rng = np.random.default_rng(7)
        for mu in rng.uniform(1e-6, MU1 * 0.999, size=100):
            f = frequencies(mu)
            assert f.omega_s >= f.omega_l > 0
            assert f.omega_s**2 + f.omega_l**2 == pytest.approx(1.0, abs=1e-12)
            assert f.omega_s**2 * f.omega_l**2 == pytest.approx(
                27 * mu * (1 - mu) / 4, abs=1e-12
            )

    def test_errors(self):
        with pytest.raises(HyperbolicEquilibrium):
            frequencies(MU1 + 1e-6)
        with pytest.raises(InvalidParameter):
            frequencies(0.0)
        with pytest.raises(InvalidParameter):
            frequencies(-0.1)


class TestResonanceMassRatio:
    @pytest.mark.parametrize(
        "r,expected",
        [(4.0, 0.00827), (11 / 3, 0.00964), (7 / 2, 0.01045), (10 / 3, 0.01135)],
    )
    def test_table_rows(self, r, expected):
        assert mass_ratio_for_resonance(r) == pytest.approx(expected, abs=5e-6)

    def test_one_three_resonance_closed_form(self):
        # mu_3 = (1 - sqrt(71/75))/2; the published table truncates its
        # five-decimal display (see the acceptance suite)
        assert mass_ratio_for_resonance(3.0) == pytest.approx(
            0.5 * (1 - math.sqrt(71 / 75)), abs=1e-15
        )

    def test_limit_r_to_one_is_stability_bound(self):
        assert mass_ratio_for_resonance(1 + 1e-9) == pytest.approx(MU1, abs=1e-7)

    def test_invalid(self):
        with pytest.raises(InvalidParameter):
            mass_ratio_for_resonance(1.0)
        with pytest.raises(InvalidParameter):
            mass_ratio_for_resonance(0.5)

    @given(st.floats(min_value=1.05, max_value=50.0))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, r):
        mu = mass_ratio_for_resonance(r)
        assert frequencies(mu).ratio == pytest.approx(r, rel=1e-9)


class TestRotatingFrame:
    def test_l4_energy_and_equilibrium(self):
        for mu in (0.005, 0.01, 0.02, 0.038):
            l4 = lagrange_point(mu)
            assert abs(energy_rotating(l4, mu)) < 1e-13
            assert np.max(np.abs(vector_field_rotating(l4, mu))) < 1e-13

    def test_l5_mirror(self):
        mu = 0.013
        l5 = lagrange_point(mu, "L5")
        assert abs(energy_rotating(l5, mu)) < 1e-13
        assert np.max(np.abs(vector_field_rotating(l5, mu))) < 1e-13

    def test_perturbation_positive_quadratic(self):
        mu = 0.01
        l4 = lagrange_point(mu)
        vals = []
        for dx in (1e-3, 5e-4):
            st_ = RotatingState(l4.x + dx, l4.y, l4.px, l4.py)
            e = energy_rotating(st_, mu)
            assert e > 0
            vals.append(e / dx**2)
        # quadratic in the displacement: E/dx^2 is constant to leading order
        assert vals[0] == pytest.approx(vals[1], rel=2e-3)

    def test_collision_raises(self):
        with pytest.raises(NonFiniteValue):
            energy_rotating(RotatingState(-0.5, 0.0, 0.0, 0.0), 0.01)
        with pytest.raises(NonFiniteValue):
            vector_field_rotating(RotatingState(0.5, 0.0, 0.1, 0.1), 0.01)

    def test_jacobi_constant(self):
        assert jacobi_constant(0.0, 1e-14) == pytest.approx(3.0, abs=1e-12)
        assert jacobi_constant(0.0, 0.01) == pytest.approx(2.9901, abs=1e-12)
        assert jacobi_constant(s_constant(0.01), 0.01) == 0.0

    def test_field_is_gradient(self):
        rng = np.random.default_rng(11)
        mu = 0.01
        J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
        checked = 0
        while checked < 100:
            arr = rng.uniform([-1.2, -1.2, -1.5, -1.5], [1.2, 1.2, 1.5, 1.5])
            st_ = RotatingState.from_array(arr)
            if math.hypot(st_.x + 0.5, st_.y) < 0.1 or math.hypot(st_.x - 0.5, st_.y) < 0.1:
                continue
            eps = 1e-6
            grad = np.empty(4)
            for i in range(4):
                e = np.zeros(4)
                e[i] = eps
                grad[i] = (
                    energy_rotating(RotatingState.from_array(arr + e), mu)
                    - energy_rotating(RotatingState.from_array(arr - e), mu)
                ) / (2 * eps)
            field = vector_field_rotating(st_, mu)
            ref = J @ grad
            scale = max(1.0, np.max(np.abs(ref)))
            assert np.max(np.abs(field - ref)) / scale < 1e-6
            checked += 1

    def test_reflection_symmetry(self):
        # (y, px) -> (-y, -px) is a time-reversing symmetry: f(Rx) = -R f(x)
        rng = np.random.default_rng(3)
        R = np.diag([1.0, -1.0, -1.0, 1.0])
        for _ in range(20):
            arr = rng.uniform([-0.3, 0.3, -1, -1], [0.3, 1.2, 1, 1])
            f = vector_field_rotating(RotatingState.from_array(arr), 0.012)
            f_r = vector_field_rotating(RotatingState.from_array(R @ arr), 0.012)
            assert np.max(np.abs(f_r + R @ f)) < 1e-12


class TestRegularizedChart:
    def test_branch_point(self):
        with pytest.raises(BranchPoint):
            to_regularized(RotatingState(0.5, 0.0, 0.0, 0.0), 0.0)

    def test_z_zero_maps_to_quarter_turn(self):
        reg = to_regularized(RotatingState(0.0, 0.0, 0.1, -0.2), 0.0)
        assert reg.u == pytest.approx(math.pi / 2, abs=1e-14)
        assert reg.v == pytest.approx(0.0, abs=1e-14)

    def test_round_trip_l4(self):
        l4 = lagrange_point(0.01)
        back = from_regularized(to_regularized(l4, 0.0))
        assert np.max(np.abs(back.as_array() - l4.as_array())) < 1e-12

    def test_round_trip_random(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            arr = rng.uniform([-0.4, 0.1, -1, -1], [0.4, 1.0, 1, 1])
            st_ = RotatingState.from_array(arr)
            back = from_regularized(to_regularized(st_, 0.3))
            assert np.max(np.abs(back.as_array() - arr)) < 1e-12

    def test_on_shell_k_vanishes(self):
        mu = 0.0095
        st_ = RotatingState(0.13, 0.55, -0.61, 0.43)
        reg = to_regularized(st_, energy_rotating(st_, mu))
        assert abs(energy_regularized(reg, mu)) < 1e-12

    def test_k_finite_at_collision(self):
        # cos(w) = -1 is the heavy primary; K stays regular there
        reg = RegularizedState(math.pi, 0.0, 0.1, -0.3, 0.0, 0.05)
        assert math.isfinite(energy_regularized(reg, 0.01))
        assert np.all(np.isfinite(vector_field_regularized(reg, 0.01)))

    def test_k_measures_energy_mismatch(self):
        mu = 0.011
        st_ = RotatingState(0.2, 0.7, -0.5, 0.3)
        e_true = energy_rotating(st_, mu)
        reg = to_regularized(st_, e_true - 0.21)
        sin2 = abs(np.sin(complex(reg.u, reg.v))) ** 2
        assert energy_regularized(reg, mu) * 4 / sin2 == pytest.approx(0.21, abs=1e-10)

    def test_regularized_field_is_gradient(self):
        rng = np.random.default_rng(13)
        mu, E = 0.01, 0.03
        checked = 0
        while checked < 100:
            arr = rng.uniform([0.3, -1.6, -1, -1, 0], [2.8, -0.2, 1, 1, 0])
            reg = RegularizedState.from_array(arr, E)
            eps = 1e-6
            grad = np.empty(4)
            for i in range(4):
                e = np.zeros(5)
                e[i] = eps
                grad[i] = (
                    energy_regularized(RegularizedState.from_array(arr + e, E), mu)
                    - energy_regularized(RegularizedState.from_array(arr - e, E), mu)
                ) / (2 * eps)
            f = vector_field_regularized(reg, mu)
            ref = np.array([grad[2], grad[3], -grad[0], -grad[1]])
            scale = max(1.0, np.max(np.abs(ref)))
            assert np.max(np.abs(f[:4] - ref)) / scale < 1e-6
            checked += 1

    def test_l4_is_fixed_point_of_regularized_flow(self):
        mu = 0.01
        reg = to_regularized(lagrange_point(mu), 0.0)
        f = vector_field_regularized(reg, mu)
        assert np.max(np.abs(f[:4])) < 1e-13
        assert f[4] > 0  # the physical clock still runs

    def test_conjugacy_with_rotating_flow(self):
        # pushing a short regularized trajectory back matches direct integration
        from l4twist.integrate import propagate_steps, rk4_step

        mu = 0.0098
        st0 = RotatingState(0.05, 0.82, -0.84, 0.46)
        e = energy_rotating(st0, mu)
        reg = to_regularized(st0, e)
        end, _ = propagate_steps(reg, mu, 600, step=1e-3)
        target = from_regularized(end)

        def field(arr):
            return vector_field_rotating(RotatingState.from_array(arr), mu)

        t_final = end.t
        n = 4000
        h = t_final / n
        arr = st0.as_array()
        for _ in range(n):
            arr = rk4_step(arr, field, h)
        assert np.max(np.abs(arr - target.as_array())) < 1e-8
