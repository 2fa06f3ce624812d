import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from l4twist.errors import NoSignChange, NoSolution
from l4twist.normalform import nf_rotation_number, nf_twist, normal_form
from l4twist.rotation import ProfilePoint
from l4twist.section import SectionPoint
from l4twist.twist import (
    _rotation_gradient,
    _twist_partial,
    action_action_chart,
    critical_mass_ratio,
    energy_line_scan,
    farey_levels,
    profile_maximum,
    reconnection_locus_nf,
    reconnection_mu_at_energy_nf,
    twistless_curve,
)


class TestCriticalMassRatio:
    def test_value(self):
        assert critical_mass_ratio() == pytest.approx(0.01091, abs=1e-4)

    def test_order_independent(self):
        m4 = critical_mass_ratio(order=4)
        m8 = critical_mass_ratio(order=8)
        assert abs(m4 - m8) < 1e-4

    def test_no_sign_change(self):
        with pytest.raises(NoSignChange):
            critical_mass_ratio(bracket=(0.0095, 0.0105))


class TestTwistlessCurve:
    def test_vertices_on_curve_and_tangency(self):
        tc = twistless_curve(0.0097)
        nf = normal_form(0.0097, 8).normal_form
        checked = 0
        for seg in tc.segments:
            for p in seg[:: max(1, len(seg) // 25)]:
                assert abs(nf_twist(nf, p[0], p[1])) < 1e-10
                # gradients of H and W are parallel where the twist vanishes
                gh = np.array(
                    [nf.partial(1, 0, p[0], p[1]), nf.partial(0, 1, p[0], p[1])]
                )
                gw = _rotation_gradient(nf, p[0], p[1])
                cross = gh[0] * gw[1] - gh[1] * gw[0]
                norm = np.hypot(*gh) * np.hypot(*gw)
                assert abs(cross) / norm < 1e-8
                checked += 1
        assert checked > 10

    def test_twist_partials_are_consistent(self):
        nf = normal_form(0.0099, 8).normal_form
        x = (0.011, 0.0015)
        h = 1e-7
        fd_s = (nf_twist(nf, x[0] + h, x[1]) - nf_twist(nf, x[0] - h, x[1])) / (2 * h)
        fd_l = (nf_twist(nf, x[0], x[1] + h) - nf_twist(nf, x[0], x[1] - h)) / (2 * h)
        assert _twist_partial(nf, x[0], x[1], 1, 0) == pytest.approx(fd_s, rel=1e-5)
        assert _twist_partial(nf, x[0], x[1], 0, 1) == pytest.approx(fd_l, rel=1e-5)

    def test_near_origin_segment_bracketing(self):
        # the near-origin branch is born exactly at the critical mass ratio
        mu_c = critical_mass_ratio()
        below = twistless_curve(mu_c - 5e-4)
        above = twistless_curve(mu_c + 5e-4)
        assert below.min_action_norm() < 0.6 * above.min_action_norm()
        assert nf_twist(normal_form(mu_c - 5e-4, 8).normal_form, 0, 0) > 0
        assert nf_twist(normal_form(mu_c + 5e-4, 8).normal_form, 0, 0) < 0


class TestEnergyLineNarrative:
    """The qualitative Fig.-7 sequence at E = 0.02 along decreasing mu."""

    def test_no_vanishing_twist_at_largest_mu(self):
        nf = normal_form(0.011283, 8).normal_form
        scan = energy_line_scan(nf, 0.02)
        assert scan.twistless_points() == []

    def test_new_segment_near_origin(self):
        tc = twistless_curve(0.0104)
        assert tc.min_action_norm() < 0.004

    def test_twistless_torus_at_energy_for_smaller_mu(self):
        for mu in (0.01, 0.009723, 0.009165):
            nf = normal_form(mu, 8).normal_form
            scan = energy_line_scan(nf, 0.02)
            assert len(scan.twistless_points()) >= 1, mu

    def test_double_rational_intersections(self):
        # 3/10 at mu = 0.009723 and 2/7 at mu = 0.009165, twistless between
        for mu, frac in ((0.009723, 0.3), (0.009165, 2 / 7)):
            nf = normal_form(mu, 8).normal_form
            scan = energy_line_scan(nf, 0.02)
            crossings = scan.rational_crossings(frac)
            assert len(crossings) == 2, (mu, frac)
            tl = scan.twistless_points()
            assert len(tl) == 1
            assert crossings[0] < tl[0] < crossings[1]


class TestChart:
    def test_grid_and_curves(self):
        chart = action_action_chart(0.009165, n_grid=40)
        assert chart.H.shape == (40, 40)
        f_ratio = chart.W[0, 0]
        from l4twist.dynamics import frequencies

        assert f_ratio == pytest.approx(1 / frequencies(0.009165).ratio, abs=1e-12)
        kinds = {c["kind"] for c in chart.curves}
        assert {"H", "W", "C0"} <= kinds
        w_levels = {c["level"] for c in chart.curves if c["kind"] == "W"}
        assert float(Fraction(2, 7)) in w_levels

    def test_farey_levels(self):
        levels = farey_levels(2)
        assert levels == sorted(levels)
        assert {Fraction(1, 4), Fraction(3, 11), Fraction(2, 7), Fraction(3, 10), Fraction(1, 3)} <= set(
            levels
        )
        assert all(Fraction(1, 4) <= f <= Fraction(1, 3) for f in levels)


class TestReconnectionLoci:
    def test_nf_locus_shape(self):
        mus = np.linspace(0.0088, 0.0105, 9)
        l27 = reconnection_locus_nf(Fraction(2, 7), mus)
        l310 = reconnection_locus_nf(Fraction(3, 10), mus)
        assert not l27.failures and not l310.failures
        e27 = [e for _, e in l27.points]
        e310 = [e for _, e in l310.points]
        assert all(b < a for a, b in zip(e27, e27[1:]))
        assert all(b < a for a, b in zip(e310, e310[1:]))
        assert all(b > a for a, b in zip(e27, e310))

    def test_nf_anchor_at_reference_energy(self):
        mu27 = reconnection_mu_at_energy_nf(Fraction(2, 7), 0.02, (0.0085, 0.0095))
        mu310 = reconnection_mu_at_energy_nf(Fraction(3, 10), 0.02, (0.0092, 0.0102))
        assert mu27 == pytest.approx(0.009165, abs=5e-4)
        assert mu310 == pytest.approx(0.009723, abs=5e-4)

    def test_three_elevenths_anchor(self):
        mu = reconnection_mu_at_energy_nf(Fraction(3, 11), 0.02, (0.0083, 0.0092))
        assert mu == pytest.approx(0.0086, abs=3e-4)

    def test_locus_residuals(self):
        from l4twist.twist import _reconnection_point_nf

        nf = normal_form(0.0095, 8).normal_form
        i_s, i_l = _reconnection_point_nf(nf, 2 / 7, 0.12)
        assert abs(nf_twist(nf, i_s, i_l)) < 1e-8
        assert abs(nf_rotation_number(nf, i_s, i_l) - 2 / 7) < 1e-8

    def test_json_schema(self):
        locus = reconnection_locus_nf(Fraction(2, 7), [0.0095])
        d = locus.as_json_dict()
        assert d["rational"] == "2/7"
        assert d["method"] == "normal_form"
        assert len(d["points"]) == 1


class TestProfileMaximum:
    def _points(self, xs, ws, flags=None):
        flags = flags or ["ok"] * len(xs)
        return [
            ProfilePoint(i, SectionPoint(0, 0, 0.02, -1), x, w, 1e-9, f)
            for i, (x, w, f) in enumerate(zip(xs, ws, flags))
        ]

    def test_parabola_recovery(self):
        xs = np.linspace(0.0, 1.0, 9)
        ws = 0.28 - 0.01 * (xs - 0.42) ** 2
        assert profile_maximum(self._points(xs, ws)) == pytest.approx(0.28, abs=1e-12)

    def test_flagged_points_excluded(self):
        xs = [0.1, 0.2, 0.3, 0.4, 0.5]
        ws = [0.27, 0.28, 0.9, 0.281, 0.27]  # the spike is flagged
        flags = ["ok", "ok", "resonant", "ok", "ok"]
        val = profile_maximum(self._points(xs, ws, flags))
        assert val < 0.3

    def test_needs_three_points(self):
        with pytest.raises(NoSolution):
            profile_maximum(self._points([0.1, 0.2], [0.27, 0.28]))
