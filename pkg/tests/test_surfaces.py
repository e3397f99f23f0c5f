import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgeodesics.errors import ConePointQuery, OutOfChart, ZeroVector
from kgeodesics.surfaces import (
    EllipsoidOfRevolution,
    FlatTorus,
    RoundSphere,
    SurfacePoint,
    TangentVector,
    doubled_regular_polygon,
    doubled_square,
    parse_surface,
)

from conftest import random_point


def fd_metric_from_embedding(surface, p, h=1e-6):
    """Pullback metric via central differences of the embedding map."""

    def emb(u, v):
        return surface.embed(SurfacePoint(u, v))

    du = (emb(p.u + h, p.v) - emb(p.u - h, p.v)) / (2 * h)
    dv = (emb(p.u, p.v + h) - emb(p.u, p.v - h)) / (2 * h)
    return np.array([[du @ du, du @ dv], [du @ dv, dv @ dv]])


def fd_christoffel(surface, p, h=1e-6):
    """Gamma^k_{ij} from central differences of the metric coefficients."""

    def g(u, v):
        return surface.metric_at(SurfacePoint(u, v))

    dg = np.empty((2, 2, 2))  # dg[l, i, j] = d g_ij / d x^l
    dg[0] = (g(p.u + h, p.v) - g(p.u - h, p.v)) / (2 * h)
    dg[1] = (g(p.u, p.v + h) - g(p.u, p.v - h)) / (2 * h)
    ginv = np.linalg.inv(g(p.u, p.v))
    gamma = np.empty((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                s = 0.0
                for l in range(2):
                    s += ginv[k, l] * (dg[i, l, j] + dg[j, l, i] - dg[l, i, j])
                gamma[k, i, j] = 0.5 * s
    return gamma


class TestMetric:
    def test_unit_sphere_equator(self, sphere):
        g = sphere.metric_at(SurfacePoint(math.pi / 2, 0.0))
        assert np.allclose(g, np.eye(2))

    def test_sphere_general(self, sphere):
        th = 1.1
        g = sphere.metric_at(SurfacePoint(th, 2.0))
        assert np.allclose(g, np.diag([1.0, math.sin(th) ** 2]))

    def test_flat_torus(self, torus):
        assert np.allclose(torus.metric_at(SurfacePoint(0.3, 0.9)), np.eye(2))

    def test_ellipsoid_vs_embedding_pullback(self, ellipsoid):
        p = SurfacePoint(0.35, 1.2)  # pole-adjacent latitude
        g = ellipsoid.metric_at(p)
        g_fd = fd_metric_from_embedding(ellipsoid, p)
        assert np.allclose(g, g_fd, rtol=1e-8, atol=1e-8)

    def test_spd_on_grid(self, sphere, torus, ellipsoid):
        for surface in (sphere, torus, ellipsoid):
            for th in np.linspace(0.15, math.pi - 0.15, 20):
                for ph in np.linspace(0.0, 2 * math.pi, 20, endpoint=False):
                    g = surface.metric_at(SurfacePoint(th, ph))
                    ev = np.linalg.eigvalsh(g)
                    assert np.all(ev > 0)

    def test_pole_is_chart_singular(self, ellipsoid):
        with pytest.raises(OutOfChart):
            ellipsoid.metric_at(SurfacePoint(0.0, 0.0))

    def test_cone_point_query(self, square):
        with pytest.raises(ConePointQuery):
            square.metric_at(SurfacePoint(0.0, 0.0))


class TestChristoffel:
    def test_torus_zero(self, torus):
        assert np.allclose(torus.christoffel_at(SurfacePoint(0.4, 0.7)), 0.0)

    def test_polygon_interior_zero(self, square):
        assert np.allclose(square.christoffel_at(SurfacePoint(0.4, 0.7)), 0.0)

    def test_sphere_analytic(self, sphere):
        th = 0.9
        gam = sphere.christoffel_at(SurfacePoint(th, 1.0))
        expected = np.zeros((2, 2, 2))
        expected[0, 1, 1] = -math.sin(th) * math.cos(th)
        expected[1, 0, 1] = expected[1, 1, 0] = math.cos(th) / math.sin(th)
        assert np.allclose(gam, expected, atol=1e-12)

    def test_symmetry_in_lower_indices(self, ellipsoid):
        gam = ellipsoid.christoffel_at(SurfacePoint(1.0, 2.0))
        assert np.allclose(gam[:, 0, 1], gam[:, 1, 0])

    @pytest.mark.parametrize("c", [0.5, 0.8])
    def test_ellipsoid_vs_finite_difference(self, c):
        surface = EllipsoidOfRevolution(c)
        for th in np.linspace(0.2, math.pi - 0.2, 20):
            for ph in np.linspace(0.1, 2 * math.pi, 20, endpoint=False):
                p = SurfacePoint(th, ph)
                gam = surface.christoffel_at(p)
                gam_fd = fd_christoffel(surface, p)
                assert np.allclose(gam, gam_fd, rtol=1e-6, atol=1e-6)


class TestInnerAndAngles:
    def test_flat_orthogonal(self, torus):
        val = torus.inner(SurfacePoint(0, 0), TangentVector(1, 0), TangentVector(0, 1))
        assert val == 0.0

    def test_sphere_equator_phi(self, sphere):
        p = SurfacePoint(math.pi / 2, 0.3)
        assert sphere.inner(p, TangentVector(0, 1), TangentVector(0, 1)) == pytest.approx(1.0)

    def test_ellipsoid_matches_embedding(self, ellipsoid):
        rng = np.random.default_rng(7)
        for _ in range(20):
            p = random_point(ellipsoid, rng)
            u = TangentVector(rng.normal(), rng.normal())
            ue = ellipsoid.embed_tangent(p, u)
            assert ellipsoid.inner(p, u, u) == pytest.approx(float(ue @ ue), rel=1e-10)

    def test_angle_identity_and_opposite(self, torus):
        # acos degrades to ~sqrt(eps) at its endpoints; that is inherent
        p = SurfacePoint(0.2, 0.2)
        v = TangentVector(0.4, -0.1)
        assert torus.angle_between(p, v, v) == pytest.approx(0.0, abs=1e-7)
        assert torus.angle_between(p, v, TangentVector(-0.4, 0.1)) == pytest.approx(math.pi, abs=1e-7)

    def test_angle_torus_diagonal(self, torus):
        p = SurfacePoint(0, 0)
        ang = torus.angle_between(p, TangentVector(1, 0), TangentVector(1, 1))
        assert ang == pytest.approx(math.pi / 4)

    def test_zero_vector_raises(self, torus):
        with pytest.raises(ZeroVector):
            torus.angle_between(SurfacePoint(0, 0), TangentVector(0, 0), TangentVector(1, 0))


class TestCanonicalize:
    def test_torus_wrap(self, torus):
        p = torus.canonicalize(SurfacePoint(1.25, -0.5))
        assert (p.u, p.v) == pytest.approx((0.25, 0.5))

    def test_sphere_phi_wrap(self, sphere):
        p = sphere.canonicalize(SurfacePoint(1.0, 2.0 + 2 * math.pi))
        assert (p.u, p.v) == pytest.approx((1.0, 2.0))

    def test_sphere_theta_reflection(self, sphere):
        p = sphere.canonicalize(SurfacePoint(-0.3, 0.5))
        assert (p.u, p.v) == pytest.approx((0.3, 0.5 + math.pi))

    def test_square_edge_crossing_reflects_to_back(self, square):
        p = square.canonicalize(SurfacePoint(0.5, -0.2, "front"))
        assert (p.u, p.v) == pytest.approx((0.5, 0.2))
        assert p.sheet == "back"

    @pytest.mark.parametrize("kind", ["sphere", "torus", "ellipsoid", "square", "pentagon"])
    def test_idempotent_on_random_points(self, kind, sphere, torus, ellipsoid, square, pentagon):
        surface = {
            "sphere": sphere,
            "torus": torus,
            "ellipsoid": ellipsoid,
            "square": square,
            "pentagon": pentagon,
        }[kind]
        rng = np.random.default_rng(11)
        for _ in range(1000):
            raw = SurfacePoint(rng.uniform(-4, 4), rng.uniform(-4, 4))
            once = surface.canonicalize(raw)
            twice = surface.canonicalize(once)
            assert (twice.u, twice.v, twice.sheet) == (once.u, once.v, once.sheet)

    @given(u=st.floats(-10, 10, allow_nan=False), v=st.floats(-10, 10, allow_nan=False))
    @settings(max_examples=80, deadline=None)
    def test_torus_canonical_in_domain(self, u, v):
        torus = FlatTorus(1.0, 1.0)
        p = torus.canonicalize(SurfacePoint(u, v))
        assert 0.0 <= p.u < 1.0 + 1e-12 and 0.0 <= p.v < 1.0 + 1e-12


class TestConeAngles:
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_cone_angles_are_twice_interior_and_sum(self, n):
        poly = doubled_regular_polygon(n, 1.0)
        angles = poly.cone_angles()
        assert all(0 < a < 2 * math.pi for a in angles)
        interior_sum = sum(a / 2.0 for a in angles)
        assert interior_sum == pytest.approx((n - 2) * math.pi)
        for i, a in enumerate(angles):
            assert a == pytest.approx(2.0 * poly.interior_angle(i))


class TestConfig:
    @pytest.mark.parametrize(
        "text",
        [
            "kind=sphere\nradius=2.0",
            "kind=ellipsoid\nc=0.5",
            "kind=torus\na=2.0\nb=1.0",
            "kind=doubled_polygon\nvertices=0.0,0.0;1.0,0.0;1.0,1.0;0.0,1.0",
        ],
    )
    def test_roundtrip(self, text):
        surface = parse_surface(text)
        again = parse_surface(surface.to_config())
        assert again == surface

    def test_compact_forms(self):
        assert isinstance(parse_surface("sphere"), RoundSphere)
        assert parse_surface("torus a=1 b=2").b == 2.0
        assert parse_surface("ellipsoid c=0.5").c == 0.5
        assert parse_surface("square side=2").polygon_diameter() == pytest.approx(2 * math.sqrt(2))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            parse_surface("klein")
