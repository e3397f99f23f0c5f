import heapq
import math

import numpy as np
import pytest

from kgeodesics.distance import (
    BASE_POINT,
    INCONCLUSIVE,
    ORDINARY_CUT,
    REGULAR,
    SINGULAR_CUT,
    classify_point,
    default_tol_len,
    directional_derivative,
    distance,
    gradient_dp,
    minimizers,
)
from kgeodesics.errors import NotDifferentiable, UndefinedAtBasePoint
from kgeodesics.geodesic import shoot
from kgeodesics.surfaces import FlatTorus, SurfacePoint, TangentVector

from conftest import random_point, random_unit_vector


def brute_force_lattice_count(torus, q, p, tol):
    """Independent tie enumeration for the torus minimizer count."""
    du = (p.u - q.u) % torus.a
    dv = (p.v - q.v) % torus.b
    cands = []
    for m in range(-4, 5):
        for n in range(-4, 5):
            cands.append(math.hypot(du + m * torus.a, dv + n * torus.b))
    d = min(cands)
    return d, sum(1 for r in cands if r <= d + tol)


def mesh_dijkstra_length(surface, q, p, n_th=96, n_ph=192, smooth_iters=4000):
    """Graph Dijkstra on a chart mesh, polished by midpoint-projection shortening.

    Returns an estimate of d(q, p) on a spheroid, independent of the shooting
    machinery: grid vertices joined to an 8-neighbourhood with embedded chord
    lengths give an upper-bound path, which discrete curve shortening then
    relaxes toward the true geodesic length.
    """
    ths = np.linspace(0.02, math.pi - 0.02, n_th)
    phs = np.linspace(0.0, 2 * math.pi, n_ph, endpoint=False)
    emb = np.empty((n_th, n_ph, 3))
    for i, th in enumerate(ths):
        for j, ph in enumerate(phs):
            emb[i, j] = surface.embed(SurfacePoint(th, ph))

    def node_of(point):
        i = int(np.argmin(np.abs(ths - point.u)))
        j = int(np.argmin(np.abs((phs - point.v + math.pi) % (2 * math.pi) - math.pi)))
        return i, j

    src = node_of(q)
    dst = node_of(p)
    dist_map = {src: 0.0}
    prev = {}
    heap = [(0.0, src)]
    offsets = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
    while heap:
        d0, node = heapq.heappop(heap)
        if node == dst:
            break
        if d0 > dist_map.get(node, math.inf):
            continue
        i, j = node
        for di, dj in offsets:
            i2 = i + di
            if not (0 <= i2 < n_th):
                continue
            j2 = (j + dj) % n_ph
            w = float(np.linalg.norm(emb[i, j] - emb[i2, j2]))
            nd = d0 + w
            if nd < dist_map.get((i2, j2), math.inf):
                dist_map[(i2, j2)] = nd
                prev[(i2, j2)] = node
                heapq.heappush(heap, (nd, (i2, j2)))
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    pts = np.array([emb[i, j] for i, j in reversed(path)])
    pts[0] = surface.embed(q)
    pts[-1] = surface.embed(p)

    def project(x):
        # restore (x0^2+x1^2)/a^2 + x2^2/c^2 = 1 along the constraint gradient
        for _ in range(3):
            f = (x[:, 0] ** 2 + x[:, 1] ** 2) / surface.a**2 + x[:, 2] ** 2 / surface.c**2 - 1.0
            n = np.stack(
                [x[:, 0] / surface.a**2, x[:, 1] / surface.a**2, x[:, 2] / surface.c**2], axis=1
            )
            x = x - (0.5 * f / np.einsum("ij,ij->i", n, n))[:, None] * n
        return x

    for _ in range(smooth_iters):
        mid = 0.5 * (pts[:-2] + pts[2:])
        pts[1:-1] = project(mid)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


class TestMinimizers:
    def test_torus_diagonal_ties(self, torus):
        ms = minimizers(torus, SurfacePoint(0, 0), SurfacePoint(0.5, 0.5))
        assert ms.distance == pytest.approx(math.sqrt(2) / 2)
        assert ms.multiplicity == 4
        dirs = sorted((round(d.a, 6), round(d.b, 6)) for d in ms.directions)
        s = round(math.sqrt(2) / 2, 6)
        assert dirs == [(-s, -s), (-s, s), (s, -s), (s, s)]

    def test_torus_wraparound(self, torus):
        assert distance(torus, SurfacePoint(0, 0), SurfacePoint(0.75, 0)) == pytest.approx(0.25)

    def test_sphere_short_arc(self, sphere):
        ms = minimizers(sphere, SurfacePoint(math.pi / 2, 0), SurfacePoint(math.pi / 2, 0.3))
        assert ms.distance == pytest.approx(0.3)
        assert ms.multiplicity == 1

    def test_sphere_antipode_continuum(self, sphere):
        ms = minimizers(sphere, SurfacePoint(math.pi / 2, 0), SurfacePoint(math.pi / 2, math.pi))
        assert ms.distance == pytest.approx(math.pi)
        assert ms.continuum

    def test_base_point(self, torus):
        ms = minimizers(torus, SurfacePoint(0.25, 0.5), SurfacePoint(0.25, 0.5))
        assert ms.distance == 0.0
        assert ms.multiplicity == 0

    def test_torus_count_matches_brute_enumeration(self, torus):
        rng = np.random.default_rng(17)
        tol = default_tol_len(torus)
        for _ in range(50):
            q = random_point(torus, rng)
            p = random_point(torus, rng)
            if torus.gap(q, p) < 1e-6:
                continue
            d_ref, count_ref = brute_force_lattice_count(torus, q, p, tol)
            ms = minimizers(torus, q, p)
            assert ms.distance == pytest.approx(d_ref, abs=1e-12)
            assert ms.multiplicity == count_ref

    def test_direction_membership(self, sphere, torus, ellipsoid, square):
        rng = np.random.default_rng(23)
        for surface in (sphere, torus, ellipsoid, square):
            for _ in range(6):
                q = random_point(surface, rng)
                p = random_point(surface, rng)
                if surface.gap(q, p) < 1e-3:
                    continue
                ms = minimizers(surface, q, p)
                for xi, seed in zip(ms.directions, ms._arc_seeds):
                    if seed[0] == "shoot":
                        start, direction, _ = seed[1]
                        arc = shoot(surface, start, direction, ms.distance)
                    else:
                        arc = seed[1]
                    assert surface.gap(arc.end, p) < 1e-6

    def test_ellipsoid_equator_antipodes_shorter_than_pi(self, ellipsoid):
        d = distance(ellipsoid, SurfacePoint(math.pi / 2, 0), SurfacePoint(math.pi / 2, math.pi))
        assert d < math.pi - 0.5
        # the over-the-pole meridian realizes it
        from scipy.special import ellipe

        assert d == pytest.approx(2 * ellipe(1 - 0.25), abs=1e-8)

    @pytest.mark.slow
    def test_ellipsoid_distance_vs_mesh_dijkstra(self, ellipsoid):
        q = SurfacePoint(math.pi / 2, 0.0)
        p = SurfacePoint(math.pi / 2, math.pi)
        d_bvp = distance(ellipsoid, q, p)
        d_mesh = mesh_dijkstra_length(ellipsoid, q, p)
        assert abs(d_bvp - d_mesh) < 1e-3

    def test_symmetry(self, sphere, torus, ellipsoid):
        rng = np.random.default_rng(29)
        for surface, n in ((sphere, 200), (torus, 200), (ellipsoid, 25)):
            for _ in range(n):
                q = random_point(surface, rng)
                p = random_point(surface, rng)
                assert abs(distance(surface, q, p) - distance(surface, p, q)) < 1e-8

    def test_triangle_inequality(self, sphere, torus, ellipsoid):
        rng = np.random.default_rng(31)
        for surface, n in ((sphere, 200), (torus, 200), (ellipsoid, 15)):
            for _ in range(n):
                a, b, c = (random_point(surface, rng) for _ in range(3))
                dab = distance(surface, a, b)
                dbc = distance(surface, b, c)
                dac = distance(surface, a, c)
                assert dac <= dab + dbc + 1e-8

    def test_minimizer_set_json(self, torus):
        ms = minimizers(torus, SurfacePoint(0, 0), SurfacePoint(0.5, 0.5))
        import json

        data = json.loads(ms.to_json())
        assert data["multiplicity"] == 4
        assert data["continuum"] is False


class TestClassifyPoint:
    def test_torus_diagonal_ordinary(self, torus):
        cls = classify_point(torus, SurfacePoint(0, 0), SurfacePoint(0.5, 0.5))
        assert cls.label == ORDINARY_CUT
        assert cls.multiplicity == 4

    def test_sphere_regular(self, sphere):
        cls = classify_point(sphere, SurfacePoint(math.pi / 2, 0), SurfacePoint(math.pi / 2, 0.3))
        assert cls.label == REGULAR

    def test_sphere_antipode_ordinary(self, sphere):
        cls = classify_point(sphere, SurfacePoint(math.pi / 2, 0), SurfacePoint(math.pi / 2, math.pi))
        assert cls.label == ORDINARY_CUT
        assert cls.continuum

    def test_base_point(self, sphere):
        cls = classify_point(sphere, SurfacePoint(1, 1), SurfacePoint(1, 1))
        assert cls.label == BASE_POINT

    def test_ellipsoid_singular_cut_at_conjugate(self, ellipsoid):
        # cut distance along the c=0.5 equator is pi*c = pi/2, conjugate-limited
        q = SurfacePoint(math.pi / 2, 0.0)
        cls = classify_point(ellipsoid, q, SurfacePoint(math.pi / 2, math.pi / 2))
        assert cls.label == SINGULAR_CUT
        cls = classify_point(ellipsoid, q, SurfacePoint(math.pi / 2, 1.2))
        assert cls.label == REGULAR
        cls = classify_point(ellipsoid, q, SurfacePoint(math.pi / 2, 2.0))
        assert cls.label == ORDINARY_CUT
        assert cls.multiplicity == 2


class TestDirectionalDerivative:
    def test_torus_diagonal_example(self, torus):
        val = directional_derivative(
            torus, SurfacePoint(0, 0), SurfacePoint(0.5, 0.5), TangentVector(1, 0)
        )
        assert val == pytest.approx(-math.sqrt(2) / 2, abs=1e-12)

    def test_regular_two_sided(self, sphere):
        p = SurfacePoint(math.pi / 2, 0)
        q = SurfacePoint(math.pi / 2, 0.3)
        sigma_dot = gradient_dp(sphere, p, q)
        rng = np.random.default_rng(37)
        for _ in range(10):
            v = TangentVector(rng.normal(), rng.normal())
            plus = directional_derivative(sphere, p, q, v)
            minus = directional_derivative(sphere, p, q, TangentVector(-v.a, -v.b))
            assert plus == pytest.approx(sphere.inner(q, v, sigma_dot), abs=1e-9)
            assert minus == pytest.approx(-plus, abs=1e-9)

    def test_positive_homogeneity(self, torus):
        p = SurfacePoint(0, 0)
        q = SurfacePoint(0.5, 0.5)
        v = TangentVector(0.3, -0.8)
        base = directional_derivative(torus, p, q, v)
        for c in (2.0, 0.5):
            scaled = directional_derivative(torus, p, q, TangentVector(c * v.a, c * v.b))
            assert scaled == pytest.approx(c * base, rel=1e-12)

    def test_min_achieved_by_witness(self, torus):
        p = SurfacePoint(0, 0)
        q = SurfacePoint(0.5, 0.25)
        ms = minimizers(torus, q, p)
        rng = np.random.default_rng(41)
        for _ in range(20):
            v = TangentVector(rng.normal(), rng.normal())
            val = directional_derivative(torus, p, q, v)
            best = min(-torus.inner(q, v, xi) for xi in ms.directions)
            assert val == pytest.approx(best, abs=1e-12)

    def _fd_check(self, surface, rng, n, include_cuts=None):
        worst = 0.0
        checked = 0
        cut_checked = 0
        while checked < n:
            if include_cuts is not None and cut_checked < include_cuts:
                # ordinary cut points of the torus center lie on the wrap lines
                p = SurfacePoint(0.0, 0.0)
                q = surface.canonicalize(
                    SurfacePoint(0.5, rng.uniform(0.05, 0.95))
                )
                cut_checked += 1
            else:
                p = random_point(surface, rng)
                q = random_point(surface, rng)
                if surface.gap(p, q) < 0.05:
                    continue
            v = random_unit_vector(surface, q, rng)
            analytic = directional_derivative(surface, p, q, v)
            h = 1e-4
            stepped = shoot(surface, q, v, h).end
            fd = (distance(surface, stepped, p) - distance(surface, q, p)) / h
            worst = max(worst, abs(fd - analytic))
            checked += 1
        return worst

    def test_fd_oracle_torus_including_cut_points(self, torus):
        rng = np.random.default_rng(43)
        assert self._fd_check(torus, rng, 20, include_cuts=10) < 1e-3

    def test_fd_oracle_sphere(self, sphere):
        rng = np.random.default_rng(47)
        assert self._fd_check(sphere, rng, 15) < 1e-3

    def test_fd_oracle_ellipsoid(self, ellipsoid):
        rng = np.random.default_rng(53)
        assert self._fd_check(ellipsoid, rng, 8) < 1e-3


class TestGradient:
    def test_sphere_terminal_velocity(self, sphere):
        p = SurfacePoint(math.pi / 2, 0)
        q = SurfacePoint(math.pi / 2, 0.3)
        grad = gradient_dp(sphere, p, q)
        # terminal velocity of the equatorial minimizer points along +phi
        assert grad.a == pytest.approx(0.0, abs=1e-9)
        assert grad.b == pytest.approx(1.0, rel=1e-9)
        assert sphere.norm(q, grad) == pytest.approx(1.0, rel=1e-9)

    def test_torus_example(self, torus):
        grad = gradient_dp(torus, SurfacePoint(0, 0), SurfacePoint(0.3, 0))
        assert (grad.a, grad.b) == pytest.approx((1.0, 0.0), abs=1e-12)

    def test_not_differentiable_at_ordinary_cut(self, torus):
        with pytest.raises(NotDifferentiable):
            gradient_dp(torus, SurfacePoint(0, 0), SurfacePoint(0.5, 0.5))

    def test_undefined_at_base(self, torus):
        with pytest.raises(UndefinedAtBasePoint):
            gradient_dp(torus, SurfacePoint(0.2, 0.2), SurfacePoint(0.2, 0.2))


class TestPolygonDistance:
    def test_square_adjacent_midpoints(self, square):
        ms = minimizers(square, SurfacePoint(0.5, 0.0), SurfacePoint(1.0, 0.5))
        assert ms.distance == pytest.approx(math.sqrt(2) / 2)
        assert ms.multiplicity == 2

    def test_pentagon_adjacent_midpoints(self, pentagon):
        a0, b0 = pentagon.edge(0)
        a1, b1 = pentagon.edge(1)
        m0 = SurfacePoint(*(0.5 * (a0 + b0)))
        m1 = SurfacePoint(*(0.5 * (a1 + b1)))
        ms = minimizers(pentagon, m0, m1)
        assert ms.distance == pytest.approx(math.cos(math.radians(36)))
        assert ms.multiplicity == 2

    def test_interior_cross_sheet(self, square):
        # front to back at the same chart location: over the nearest edge
        d = distance(
            square, SurfacePoint(0.5, 0.25, "front"), SurfacePoint(0.5, 0.25, "back")
        )
        assert d == pytest.approx(0.5)

    def test_seam_points_are_sheet_agnostic(self, square):
        d1 = distance(square, SurfacePoint(0.5, 0.0, "front"), SurfacePoint(0.2, 0.7))
        d2 = distance(square, SurfacePoint(0.5, 0.0, "back"), SurfacePoint(0.2, 0.7))
        assert d1 == pytest.approx(d2, abs=1e-12)
