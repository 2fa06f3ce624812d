import csv
import math

import numpy as np
import pytest

from l4twist.dynamics import energy_rotating, lagrange_point, RotatingState, vector_field_rotating
from l4twist.errors import ForbiddenRegion, NotOnSection
from l4twist.integrate import default_config
from l4twist.section import (
    SectionPoint,
    crossing_stream,
    poincare_return,
    section_lift,
    section_project,
    section_value,
    write_crossings_csv,
)

SQRT3 = math.sqrt(3.0)


class TestSectionGeometry:
    def test_value_at_reference_points(self):
        assert section_value(RotatingState(-0.5, 0.0, 0, 0)) == 0.0  # heavy primary
        assert abs(section_value(lagrange_point(0.01))) < 1e-15  # L4
        assert section_value(RotatingState(0.0, 0.0, 0, 0)) == pytest.approx(
            SQRT3 / 2
        )

    def test_project_l4(self):
        mu = 0.01
        p = section_project(lagrange_point(mu), 0.0, mu)
        assert p.a == pytest.approx(1.0, abs=1e-14)
        assert p.pa == pytest.approx(-SQRT3 * mu / 2, abs=1e-14)

    def test_project_heavy_primary_coordinate(self):
        st = RotatingState(-0.5, 0.0, 0.2, 0.1)
        p = section_project(st, 0.0, 0.01)
        assert p.a == 0.0

    def test_project_requires_on_section(self):
        with pytest.raises(NotOnSection):
            section_project(RotatingState(0.3, 0.1, 0, 0), 0.0, 0.01)

    def test_chart_is_canonical(self):
        # {a, p_a} = 1 for a = 2x + 1, p_a = px/2 + sqrt(3)/2 py
        da = np.array([2.0, 0.0, 0.0, 0.0])
        dpa = np.array([0.0, 0.0, 0.5, SQRT3 / 2])
        bracket = da[0] * dpa[2] + da[1] * dpa[3] - da[2] * dpa[0] - da[3] * dpa[1]
        assert bracket == 1.0

    def test_lift_project_round_trip(self):
        mu = 0.0095
        for direction in (1, -1):
            p = SectionPoint(0.88, -0.04, 0.02, direction)
            st = section_lift(p, mu)
            assert abs(section_value(st)) < 1e-14
            assert energy_rotating(st, mu) == pytest.approx(p.E, abs=1e-13)
            q = section_project(st, p.E, mu)
            assert q.a == pytest.approx(p.a, abs=1e-12)
            assert q.pa == pytest.approx(p.pa, abs=1e-12)
            assert q.direction == direction

    def test_lift_of_l4_image_is_equilibrium(self):
        mu = 0.01
        st = section_lift(SectionPoint(1.0, -SQRT3 * mu / 2, 0.0, -1), mu)
        assert np.max(np.abs(vector_field_rotating(st, mu))) < 1e-10

    def test_forbidden_region(self):
        # the tangential momentum is capped at each a; beyond it the energy
        # equation has no real transverse root
        with pytest.raises(ForbiddenRegion):
            section_lift(SectionPoint(0.9, 3.0, 0.001, 1), 0.01)


class TestReturnMap:
    def test_fixed_point_of_tiny_energy(self):
        # the family terminates at the equilibrium, which never leaves the
        # section; just off it the fixed point maps to itself
        from l4twist.rotation import find_fixed_point

        mu = 0.01
        fp = find_fixed_point(mu, 1e-5)
        r = poincare_return(fp.point, mu)
        assert abs(r.a - fp.point.a) < 1e-9
        assert abs(r.pa - fp.point.pa) < 1e-9

    def test_crossing_invariants(self, island_stream_001):
        points, _ = island_stream_001
        mu = 0.01
        sample = points[:200]
        for p in sample:
            st = section_lift(p, mu)
            assert abs(section_value(st)) < 1e-10
            assert abs(energy_rotating(st, mu) - p.E) < 1e-9
        # same-direction crossing times strictly increase
        times = [p.t_cross for p in points]
        assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))
        assert all(p.direction == points[0].direction for p in points)

    def test_area_preservation_generic_point(self, fp_001_002):
        from l4twist.rotation import return_map_jacobian

        pt = SectionPoint(
            fp_001_002.point.a + 0.018, fp_001_002.point.pa + 0.004, 0.02, -1
        )
        jac = return_map_jacobian(pt, 0.01)
        assert abs(np.linalg.det(jac) - 1.0) < 1e-6

    def test_period_seven_orbit_at_reconnection(self):
        # E = 0.02, mu = 0.009165: the stable period-7 chain of the
        # reconnection; seven returns close the orbit and it crosses the
        # section seven times in each direction per cycle
        from dataclasses import replace

        from l4twist.rotation import (
            find_fixed_point,
            find_periodic_orbit,
            island_radius,
            rotation_number_of_curve,
            sample_curve,
        )

        mu, E = 0.009165, 0.02
        cfg = default_config(mu)
        fp = find_fixed_point(mu, E)
        radius = island_radius(mu, E, fp.point)
        best = None
        for f in np.linspace(0.5, 0.9, 6):
            seed = replace(fp.point, a=fp.point.a + f * radius)
            try:
                s = sample_curve(seed, mu, 256, fp.point)
                est = rotation_number_of_curve(s, min_crossings=200)
            except Exception:
                continue
            if best is None or abs(est.W - 2 / 7) < best[0]:
                best = (abs(est.W - 2 / 7), seed)
        p7 = find_periodic_orbit(mu, E, 7, best[1])
        pt = p7
        for _ in range(7):
            pt = poincare_return(pt, mu, cfg)
        assert abs(pt.a - p7.a) < 1e-6
        assert abs(pt.pa - p7.pa) < 1e-6
        both = crossing_stream(p7, mu, 14, cfg, direction=0)
        t_cycle = [p for p in both if p.direction == p7.direction][6].t_cross
        in_cycle = [p for p in both if p.t_cross <= t_cycle + 1e-9]
        assert sum(1 for p in in_cycle if p.direction == -1) == 7
        assert sum(1 for p in in_cycle if p.direction == +1) == 7


class TestExport:
    def test_csv_round_trip(self, tmp_path):
        pts = [
            SectionPoint(0.8123456789012345, -0.0654321, 0.02, -1, 12.5),
            SectionPoint(0.9, 0.01, 0.02, 1, 13.75),
        ]
        path = tmp_path / "crossings.csv"
        write_crossings_csv(path, pts, 0.01)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert float(rows[0]["a"]) == pts[0].a
        assert float(rows[0]["pa"]) == pts[0].pa
        assert int(rows[1]["direction"]) == 1
        assert float(rows[0]["mu"]) == 0.01
