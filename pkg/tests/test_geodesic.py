import math

import numpy as np
import pytest
from scipy.integrate import quad

from kgeodesics.errors import ConePointHit, GeometryError, ZeroVector
from kgeodesics.geodesic import (
    close_up,
    equator_geodesic,
    great_circle,
    jacobi,
    meridian_geodesic,
    over_under_geodesic,
    shoot,
    torus_line,
)
from kgeodesics.surfaces import SurfacePoint, TangentVector, doubled_square

from conftest import random_point, random_unit_vector


def great_circle_formula(p_embed, v_embed, t):
    """Closed-form great circle on the unit sphere (the shoot oracle)."""
    return math.cos(t) * p_embed + math.sin(t) * v_embed


def quarter_meridian_length(c):
    """Quadrature oracle for the equator-to-pole meridian arc length."""
    val, _ = quad(lambda th: math.sqrt(math.cos(th) ** 2 + c * c * math.sin(th) ** 2),
                  0.0, math.pi / 2.0, epsabs=1e-13, epsrel=1e-13)
    return val


class TestShoot:
    def test_sphere_equator_to_antipode(self, sphere):
        arc = shoot(sphere, SurfacePoint(math.pi / 2, 0), TangentVector(0, 1), math.pi)
        end = arc.end
        assert end.u == pytest.approx(math.pi / 2, abs=1e-9)
        assert end.v == pytest.approx(math.pi, abs=1e-9)
        vel = arc.end_velocity
        assert sphere.norm(end, vel) == pytest.approx(1.0, abs=1e-9)
        assert abs(vel.a) < 1e-9  # still tangent to the equator

    def test_torus_straight_line(self, torus):
        arc = shoot(torus, SurfacePoint(0, 0), TangentVector(1, 0), 0.5)
        assert (arc.end.u, arc.end.v) == pytest.approx((0.5, 0.0))

    def test_ellipsoid_quarter_meridian_reaches_pole(self, ellipsoid):
        ql = quarter_meridian_length(0.5)
        arc = shoot(ellipsoid, SurfacePoint(math.pi / 2, 0.7), TangentVector(-2.0, 0.0), ql)
        assert arc.end.u == pytest.approx(0.0, abs=1e-8)

    def test_sphere_against_great_circle_formula(self, sphere):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = random_point(sphere, rng)
            v = random_unit_vector(sphere, p, rng)
            length = rng.uniform(0.1, 2 * math.pi)
            arc = shoot(sphere, p, v, length)
            expected = great_circle_formula(
                sphere.embed(p), sphere.embed_tangent(p, v), length
            )
            assert np.linalg.norm(arc.embed_at(length)[:3] - expected) < 1e-8

    def test_unit_speed_drift(self, sphere, ellipsoid):
        rng = np.random.default_rng(4)
        for surface in (sphere, ellipsoid):
            for _ in range(10):
                p = random_point(surface, rng)
                v = random_unit_vector(surface, p, rng)
                arc = shoot(surface, p, v, rng.uniform(0.5, 4.0))
                assert arc.speed_drift() < 1e-8

    def test_reversibility(self, sphere, ellipsoid, torus, square):
        rng = np.random.default_rng(5)
        for surface in (sphere, ellipsoid, torus, square):
            for _ in range(8):
                p = random_point(surface, rng)
                v = random_unit_vector(surface, p, rng)
                length = rng.uniform(0.3, 2.0)
                try:
                    fwd = shoot(surface, p, v, length)
                except ConePointHit:
                    continue
                back_p, back_v = fwd.sample_at(length)
                back = shoot(surface, back_p, TangentVector(-back_v.a, -back_v.b), length)
                assert surface.gap(back.end, p) < 1e-7 * length

    def test_polygon_straightness_in_unfolding(self, square):
        # one crossing: unfold across the crossed edge and check collinearity
        arc = shoot(square, SurfacePoint(0.25, 0.25), TangentVector(0.6, 0.8), 1.2)
        crossed = arc.meta["crossed_edges"]
        assert len(crossed) >= 1
        rows = arc.chart
        a, b = square.edge(crossed[0])
        d = (b - a) / np.linalg.norm(b - a)
        refl = lambda z: a + 2 * ((z - a) @ d) * d - (z - a)  # noqa: E731
        p0 = rows[0, :2]
        x1 = rows[1, :2]  # crossing point
        p2 = refl(rows[2, :2] if len(rows) > 2 else arc.chart[-1, :2])
        cross = (x1 - p0)[0] * (p2 - p0)[1] - (x1 - p0)[1] * (p2 - p0)[0]
        assert abs(cross) < 1e-12

    def test_cone_hit(self, square):
        with pytest.raises(ConePointHit):
            shoot(square, SurfacePoint(0.5, 0.5), TangentVector(1, 1), 2.0)

    def test_zero_vector(self, torus):
        with pytest.raises(ZeroVector):
            shoot(torus, SurfacePoint(0, 0), TangentVector(0, 0), 1.0)


class TestCloseUp:
    def test_sphere_perturbed_equator(self, sphere):
        seed = shoot(
            sphere, SurfacePoint(math.pi / 2, 0), TangentVector(0.004, 1.0), 2 * math.pi + 0.01
        )
        gamma = close_up(sphere, seed)
        assert gamma.length == pytest.approx(2 * math.pi, abs=1e-7)
        assert gamma.arc.meta["closure_gap"] < 1e-7 * gamma.length

    def test_torus_horizontal(self, torus):
        seed = shoot(torus, SurfacePoint(0.3, 0.8), TangentVector(1.0, 0.015), 1.02)
        gamma = close_up(torus, seed)
        assert gamma.length == pytest.approx(1.0)

    def test_over_under_length_via_unfolding_oracle(self, square):
        # unfolding oracle: reflect across the two crossed edges of one period
        # half; the straight segment between repeated copies has length
        # |(2, 2)| = 2*sqrt(2) for the unit square
        expected = 2.0 * math.sqrt(2.0)
        seed = shoot(
            square,
            SurfacePoint(0.5, 0.0),
            TangentVector(math.cos(math.pi / 4 + 0.03), math.sin(math.pi / 4 + 0.03)),
            expected + 0.05,
        )
        gamma = close_up(square, seed)
        assert gamma.length == pytest.approx(expected, abs=1e-12)

    def test_closure_invariants(self, sphere, torus, square):
        for gamma in (
            great_circle(sphere, SurfacePoint(1.0, 2.0), TangentVector(0.3, 1.0)),
            torus_line(torus, SurfacePoint(0.1, 0.9), 1, 1),
            over_under_geodesic(square, 1),
        ):
            gap = gamma.arc.meta["closure_gap"]
            ang = gamma.arc.meta["closure_angle"]
            assert gap < 1e-7 * gamma.length
            assert ang < 1e-6


class TestJacobi:
    def test_sphere_first_zero_at_pi_r(self):
        from kgeodesics.surfaces import RoundSphere

        for r in (1.0, 2.0):
            sphere = RoundSphere(r)
            arc = shoot(sphere, SurfacePoint(math.pi / 2, 0), TangentVector(0, 1 / r), 3.5 * r)
            sol = jacobi(sphere, arc)
            assert sol.first_zero == pytest.approx(math.pi * r, abs=1e-7)

    def test_flat_torus_no_zero(self, torus):
        arc = shoot(torus, SurfacePoint(0, 0), TangentVector(1, 0), 5.0)
        sol = jacobi(torus, arc)
        assert sol.first_zero is None
        assert np.allclose(sol.J, sol.ts)

    def test_polygon_raises(self, square):
        arc = shoot(square, SurfacePoint(0.2, 0.3), TangentVector(1, 0), 0.3)
        with pytest.raises(GeometryError):
            jacobi(square, arc)

    def test_ellipsoid_step_halving_consistency(self, ellipsoid):
        arc = shoot(ellipsoid, SurfacePoint(math.pi / 2, 0), TangentVector(0, 2.0), 2.0)
        coarse = jacobi(ellipsoid, arc)
        fine_arc = shoot(ellipsoid, SurfacePoint(math.pi / 2, 0), TangentVector(0, 2.0), 2.0,
                         atol=arc.meta["atol"] / 32.0)
        fine = jacobi(ellipsoid, fine_arc)
        assert coarse.first_zero == pytest.approx(fine.first_zero, abs=1e-6)
        # K = 1/c^2 along the equator, so the zero sits at pi*c
        assert coarse.first_zero == pytest.approx(math.pi * 0.5, abs=1e-7)


class TestEvaluate:
    def test_start_exact(self, sphere):
        gamma = great_circle(sphere, SurfacePoint(math.pi / 2, 0), TangentVector(0, 1))
        p, v = gamma.evaluate(0.0)
        assert (p.u, p.v) == pytest.approx((math.pi / 2, 0.0), abs=1e-12)
        assert (v.a, v.b) == pytest.approx((0.0, 1.0), abs=1e-12)

    def test_sphere_antipode_at_pi(self, sphere):
        gamma = great_circle(sphere, SurfacePoint(math.pi / 2, 0), TangentVector(0, 1))
        p, _ = gamma.evaluate(math.pi)
        assert sphere.gap(p, SurfacePoint(math.pi / 2, math.pi)) < 1e-8

    def test_periodicity(self, sphere, torus):
        rng = np.random.default_rng(6)
        gammas = [
            great_circle(sphere, SurfacePoint(1.1, 0.4), TangentVector(0.5, 0.6)),
            torus_line(torus, SurfacePoint(0.2, 0.5), 2, 1),
        ]
        for gamma in gammas:
            for _ in range(100):
                t = rng.uniform(0, 2 * math.pi)
                p1, _ = gamma.evaluate(t)
                p2, _ = gamma.evaluate(t + 2 * math.pi)
                assert gamma.surface.gap(p1, p2) < 1e-9

    def test_constant_speed_under_circle_parameter(self, ellipsoid):
        gamma = equator_geodesic(ellipsoid)
        dt = 1e-6
        for t in (0.3, 1.7, 4.0):
            p1, _ = gamma.evaluate(t)
            p2, _ = gamma.evaluate(t + dt)
            speed = ellipsoid.gap(p1, p2) / dt
            assert speed == pytest.approx(gamma.length / (2 * math.pi), rel=1e-5)


class TestCatalog:
    def test_meridian_length_vs_quadrature(self, ellipsoid):
        gamma = meridian_geodesic(ellipsoid)
        assert gamma.length == pytest.approx(4 * quarter_meridian_length(0.5), rel=1e-10)

    def test_equator_length(self, ellipsoid):
        assert equator_geodesic(ellipsoid).length == pytest.approx(2 * math.pi)

    def test_over_under_passes_midpoints(self, square):
        gamma = over_under_geodesic(square, 0)
        mids = [(0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)]
        for j, (u, v) in enumerate(mids):
            p, _ = gamma.evaluate(j * math.pi / 2)
            assert square.gap(p, SurfacePoint(u, v)) < 1e-12

    def test_arc_csv_export(self, torus):
        arc = shoot(torus, SurfacePoint(0, 0), TangentVector(1, 0), 0.5)
        csv = arc.to_csv()
        lines = csv.strip().splitlines()
        assert lines[0] == "t,u,v,du,dv"
        assert len(lines) == len(arc.ts) + 1
