"""Model surface catalog: charts, metrics, identifications, cone points.

Four surface families are supported:

* ``RoundSphere(radius)`` and ``EllipsoidOfRevolution(c)`` share a spheroid
  implementation (semi-axes ``(a, a, c)``; the ellipsoid family fixes the
  equatorial radius to 1, i.e. x^2 + y^2 + (z/c)^2 = 1).  Chart is colatitude/
  longitude, theta in (0, pi), phi in [0, 2*pi); the poles are chart-singular
  and differential queries there raise :class:`~kgeodesics.errors.OutOfChart`.
* ``FlatTorus(a, b)`` with fundamental domain [0, a) x [0, b) and the flat
  metric.
* ``DoubledPolygon(vertices)``: two mirror copies of a strictly convex polygon
  glued along the boundary.  Chart coordinates are shared by both sheets; a
  tangent vector at an interior point lives in its own sheet's chart basis,
  and at a seam point in the front basis.  Polygon corners are cone points
  (cone angle = twice the interior angle) where differential queries raise.

All queries are pure functions of immutable descriptors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConePointQuery, OutOfChart, ZeroVector


def _cross2(a, b) -> float:
    return float(a[0]) * float(b[1]) - float(a[1]) * float(b[0])

FRONT = "front"
BACK = "back"

_POLE_TOL = 1e-12


@dataclass(frozen=True)
class SurfacePoint:
    """Chart point (u, v); the sheet tag matters only on doubled polygons."""

    u: float
    v: float
    sheet: str = FRONT

    def __iter__(self):
        yield self.u
        yield self.v


@dataclass(frozen=True)
class TangentVector:
    """Chart components (a, b) of a tangent vector at some base point."""

    a: float
    b: float

    def __iter__(self):
        yield self.a
        yield self.b

    def scaled(self, s: float) -> "TangentVector":
        return TangentVector(self.a * s, self.b * s)

    def __neg__(self) -> "TangentVector":
        return TangentVector(-self.a, -self.b)


class SurfaceModel:
    """Base class; concrete surfaces implement the chart/metric interface."""

    kind = "abstract"

    # -- chart ---------------------------------------------------------------
    def canonicalize(self, p: SurfacePoint) -> SurfacePoint:
        raise NotImplementedError

    def is_cone_point(self, p: SurfacePoint) -> bool:
        return False

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        raise NotImplementedError

    def christoffel_at(self, p: SurfacePoint) -> np.ndarray:
        raise NotImplementedError

    def diameter_bound(self) -> float:
        """A finite upper bound for the intrinsic diameter."""
        raise NotImplementedError

    # -- derived -------------------------------------------------------------
    def inner(self, p: SurfacePoint, u: TangentVector, v: TangentVector) -> float:
        g = self.metric_at(p)
        return float(
            g[0, 0] * u.a * v.a + g[0, 1] * (u.a * v.b + u.b * v.a) + g[1, 1] * u.b * v.b
        )

    def norm(self, p: SurfacePoint, u: TangentVector) -> float:
        return math.sqrt(max(self.inner(p, u, u), 0.0))

    def angle_between(self, p: SurfacePoint, u: TangentVector, v: TangentVector) -> float:
        nu = self.norm(p, u)
        nv = self.norm(p, v)
        if nu == 0.0 or nv == 0.0:
            raise ZeroVector("angle_between requires nonzero vectors")
        c = self.inner(p, u, v) / (nu * nv)
        return math.acos(min(1.0, max(-1.0, c)))

    def unit(self, p: SurfacePoint, u: TangentVector) -> TangentVector:
        n = self.norm(p, u)
        if n == 0.0:
            raise ZeroVector("cannot normalize the zero vector")
        return TangentVector(u.a / n, u.b / n)

    def gap(self, p: SurfacePoint, q: SurfacePoint) -> float:
        """Cheap ambient-scale separation, used for closure/intersection tolerances."""
        raise NotImplementedError

    # -- config --------------------------------------------------------------
    def to_config(self) -> str:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Spheroids (sphere + ellipsoid of revolution)
# ---------------------------------------------------------------------------


class _Spheroid(SurfaceModel):
    """Shared implementation for surfaces of revolution (a, a, c)."""

    def __init__(self, a: float, c: float):
        if a <= 0 or c <= 0:
            raise ValueError("semi-axes must be positive")
        self.a = float(a)
        self.c = float(c)

    # chart helpers ----------------------------------------------------------
    def canonicalize(self, p: SurfacePoint) -> SurfacePoint:
        th = float(p.u) % (2.0 * math.pi)
        ph = float(p.v)
        if th > math.pi:
            th = 2.0 * math.pi - th
            ph += math.pi
        ph %= 2.0 * math.pi
        if th < _POLE_TOL or math.pi - th < _POLE_TOL:
            ph = 0.0
        return SurfacePoint(th, ph, FRONT)

    def is_pole(self, p: SurfacePoint) -> bool:
        s = math.sin(p.u)
        return abs(s) < 1e-9

    def _profile(self, th: float):
        # metric coefficients E(theta), G(theta) of the revolution chart
        ct, st = math.cos(th), math.sin(th)
        e = self.a * self.a * ct * ct + self.c * self.c * st * st
        g = self.a * self.a * st * st
        return e, g

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        p = self.canonicalize(p)
        if self.is_pole(p):
            raise OutOfChart("colatitude chart is singular at the poles")
        e, g = self._profile(p.u)
        return np.array([[e, 0.0], [0.0, g]])

    def christoffel_at(self, p: SurfacePoint) -> np.ndarray:
        p = self.canonicalize(p)
        if self.is_pole(p):
            raise OutOfChart("colatitude chart is singular at the poles")
        th = p.u
        ct, st = math.cos(th), math.sin(th)
        a2, c2 = self.a * self.a, self.c * self.c
        e, _ = self._profile(th)
        gamma = np.zeros((2, 2, 2))
        # indices [k, i, j] for Gamma^k_{ij}; 0 = theta, 1 = phi
        gamma[0, 0, 0] = (c2 - a2) * st * ct / e
        gamma[0, 1, 1] = -a2 * st * ct / e
        gamma[1, 0, 1] = gamma[1, 1, 0] = ct / st
        return gamma

    def gauss_curvature(self, p: SurfacePoint) -> float:
        e, _ = self._profile(self.canonicalize(p).u)
        return self.c * self.c / (e * e)

    def curvature_bounds(self):
        a2, c2 = self.a * self.a, self.c * self.c
        ks = [c2 / (a2 * a2), 1.0 / c2]  # values at poles / equator
        return min(ks), max(ks)

    # embedding --------------------------------------------------------------
    def embed(self, p: SurfacePoint) -> np.ndarray:
        p = self.canonicalize(p)
        st, ct = math.sin(p.u), math.cos(p.u)
        return np.array(
            [self.a * st * math.cos(p.v), self.a * st * math.sin(p.v), self.c * ct]
        )

    def chart_from_embed(self, x: np.ndarray) -> SurfacePoint:
        r = math.hypot(x[0], x[1])
        th = math.atan2(r / self.a, x[2] / self.c)
        ph = math.atan2(x[1], x[0]) % (2.0 * math.pi) if r > 1e-14 else 0.0
        return SurfacePoint(th, ph, FRONT)

    def embed_tangent(self, p: SurfacePoint, w: TangentVector) -> np.ndarray:
        p = self.canonicalize(p)
        st, ct = math.sin(p.u), math.cos(p.u)
        cp, sp = math.cos(p.v), math.sin(p.v)
        dth = np.array([self.a * ct * cp, self.a * ct * sp, -self.c * st])
        dph = np.array([-self.a * st * sp, self.a * st * cp, 0.0])
        return w.a * dth + w.b * dph

    def tangent_from_embed(self, x: np.ndarray, v: np.ndarray):
        """Chart point + chart tangent from an embedded (position, velocity) pair.

        At the poles the longitude is taken from the velocity direction, which
        makes the returned (theta-dot, 0) representation exact for curves
        passing through the pole.
        """
        r = math.hypot(x[0], x[1])
        th = math.atan2(r / self.a, x[2] / self.c)
        if r > 1e-9 * self.a:
            ph = math.atan2(x[1], x[0]) % (2.0 * math.pi)
            p = SurfacePoint(th, ph, FRONT)
            st, ct = math.sin(th), math.cos(th)
            cp, sp = math.cos(ph), math.sin(ph)
            dth_vec = np.array([self.a * ct * cp, self.a * ct * sp, -self.c * st])
            dph_vec = np.array([-self.a * st * sp, self.a * st * cp, 0.0])
            e, g = self._profile(th)
            return p, TangentVector(float(dth_vec @ v) / e, float(dph_vec @ v) / g)
        # pole: theta = 0 or pi
        speed = float(np.linalg.norm(v))
        north = x[2] > 0.0
        if speed < 1e-300:
            return SurfacePoint(0.0 if north else math.pi, 0.0, FRONT), TangentVector(0.0, 0.0)
        ph = math.atan2(v[1], v[0]) % (2.0 * math.pi)
        sign = 1.0 if north else -1.0
        p = SurfacePoint(0.0 if north else math.pi, ph, FRONT)
        e, _ = self._profile(p.u)
        return p, TangentVector(sign * speed / math.sqrt(e), 0.0)

    def tangent_frame(self, p: SurfacePoint):
        """Orthonormal embedded tangent basis at p (deterministic convention)."""
        x = self.embed(p)
        n = np.array([x[0] / self.a**2, x[1] / self.a**2, x[2] / self.c**2])
        n /= np.linalg.norm(n)
        if math.hypot(x[0], x[1]) > 1e-9 * self.a:
            e1 = self.embed_tangent(p, TangentVector(1.0, 0.0))
            e1 /= np.linalg.norm(e1)
        else:
            e1 = np.array([1.0, 0.0, 0.0])
            e1 -= (e1 @ n) * n
            e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return e1, e2

    def gap(self, p: SurfacePoint, q: SurfacePoint) -> float:
        return float(np.linalg.norm(self.embed(p) - self.embed(q)))

    def meridian_half_length(self) -> float:
        """Pole-to-pole arc length of a meridian (Gauss-Legendre quadrature)."""
        nodes, weights = np.polynomial.legendre.leggauss(96)
        th = 0.5 * math.pi * (nodes + 1.0)
        w = 0.5 * math.pi * weights
        a2, c2 = self.a * self.a, self.c * self.c
        integrand = np.sqrt(a2 * np.cos(th) ** 2 + c2 * np.sin(th) ** 2)
        return float(integrand @ w)

    def diameter_bound(self) -> float:
        return max(math.pi * self.a, self.meridian_half_length())


class RoundSphere(_Spheroid):
    kind = "sphere"

    def __init__(self, radius: float = 1.0):
        super().__init__(radius, radius)
        self.radius = float(radius)

    def to_config(self) -> str:
        return f"kind=sphere\nradius={self.radius!r}"

    def __repr__(self):
        return f"RoundSphere(radius={self.radius})"

    def __eq__(self, other):
        return isinstance(other, RoundSphere) and other.radius == self.radius

    def __hash__(self):
        return hash(("sphere", self.radius))


class EllipsoidOfRevolution(_Spheroid):
    """x^2 + y^2 + (z/c)^2 = 1 (equatorial radius fixed to 1)."""

    kind = "ellipsoid"

    def __init__(self, c: float):
        super().__init__(1.0, c)

    def to_config(self) -> str:
        return f"kind=ellipsoid\nc={self.c!r}"

    def __repr__(self):
        return f"EllipsoidOfRevolution(c={self.c})"

    def __eq__(self, other):
        return isinstance(other, EllipsoidOfRevolution) and other.c == self.c

    def __hash__(self):
        return hash(("ellipsoid", self.c))


# ---------------------------------------------------------------------------
# Flat torus
# ---------------------------------------------------------------------------


class FlatTorus(SurfaceModel):
    kind = "torus"

    def __init__(self, a: float = 1.0, b: float = 1.0):
        if a <= 0 or b <= 0:
            raise ValueError("torus side lengths must be positive")
        self.a = float(a)
        self.b = float(b)

    def canonicalize(self, p: SurfacePoint) -> SurfacePoint:
        return SurfacePoint(float(p.u) % self.a, float(p.v) % self.b, FRONT)

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        return np.eye(2)

    def christoffel_at(self, p: SurfacePoint) -> np.ndarray:
        return np.zeros((2, 2, 2))

    def diameter_bound(self) -> float:
        return 0.5 * math.hypot(self.a, self.b)

    def lattice_offsets(self, q: SurfacePoint, p: SurfacePoint, slack: float):
        """All lattice representatives of p - q with norm <= min + slack, sorted."""
        q = self.canonicalize(q)
        p = self.canonicalize(p)
        du, dv = p.u - q.u, p.v - q.v
        best = math.inf
        cands = []
        m0 = int(math.ceil((self.diameter_bound() + abs(du)) / self.a)) + 1
        n0 = int(math.ceil((self.diameter_bound() + abs(dv)) / self.b)) + 1
        for m in range(-m0, m0 + 1):
            for n in range(-n0, n0 + 1):
                w = (du + m * self.a, dv + n * self.b)
                r = math.hypot(*w)
                cands.append((r, w))
                best = min(best, r)
        cands = [(r, w) for r, w in cands if r <= best + slack or r <= best * (1 + 1e-12) + slack]
        cands.sort(key=lambda t: (t[0], math.atan2(t[1][1], t[1][0])))
        return cands

    def gap(self, p: SurfacePoint, q: SurfacePoint) -> float:
        offs = self.lattice_offsets(p, q, 0.0)
        return offs[0][0]

    def to_config(self) -> str:
        return f"kind=torus\na={self.a!r}\nb={self.b!r}"

    def __repr__(self):
        return f"FlatTorus(a={self.a}, b={self.b})"

    def __eq__(self, other):
        return isinstance(other, FlatTorus) and (other.a, other.b) == (self.a, self.b)

    def __hash__(self):
        return hash(("torus", self.a, self.b))


# ---------------------------------------------------------------------------
# Doubled convex polygon
# ---------------------------------------------------------------------------


def _reflect_point(z: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    d = d / np.linalg.norm(d)
    w = z - a
    return a + 2.0 * (w @ d) * d - w


def _reflect_dir(v: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    d = d / np.linalg.norm(d)
    return 2.0 * (v @ d) * d - v


class DoubledPolygon(SurfaceModel):
    """Double of a strictly convex polygon: flat, with cone points at corners."""

    kind = "doubled_polygon"

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("need at least 3 planar vertices")
        n = v.shape[0]
        for i in range(n):
            p0, p1, p2 = v[i], v[(i + 1) % n], v[(i + 2) % n]
            cross = _cross2(p1 - p0, p2 - p1)
            if cross <= 1e-12:
                raise ValueError("vertices must be strictly convex, counterclockwise")
        self.vertices = v
        self.n_edges = n
        self._edge_tol = 1e-9 * self.polygon_diameter()

    # basic geometry ----------------------------------------------------------
    def polygon_diameter(self) -> float:
        v = self.vertices
        return max(
            float(np.linalg.norm(v[i] - v[j]))
            for i in range(len(v))
            for j in range(i + 1, len(v))
        )

    def diameter_bound(self) -> float:
        # perimeter/2 bounds the intrinsic diameter of the double
        per = sum(
            float(np.linalg.norm(self.vertices[(i + 1) % self.n_edges] - self.vertices[i]))
            for i in range(self.n_edges)
        )
        return 0.5 * per

    def edge(self, i: int):
        return self.vertices[i], self.vertices[(i + 1) % self.n_edges]

    def interior_angle(self, i: int) -> float:
        v = self.vertices
        n = self.n_edges
        u1 = v[(i - 1) % n] - v[i]
        u2 = v[(i + 1) % n] - v[i]
        c = (u1 @ u2) / (np.linalg.norm(u1) * np.linalg.norm(u2))
        return math.acos(min(1.0, max(-1.0, float(c))))

    def cone_angles(self):
        return [2.0 * self.interior_angle(i) for i in range(self.n_edges)]

    def _signed_dists(self, z: np.ndarray) -> np.ndarray:
        # positive inside for CCW vertices
        out = np.empty(self.n_edges)
        for i in range(self.n_edges):
            a, b = self.edge(i)
            d = b - a
            out[i] = _cross2(d, z - a) / float(np.linalg.norm(d))
        return out

    def contains(self, z, tol=None) -> bool:
        tol = self._edge_tol if tol is None else tol
        return bool(np.all(self._signed_dists(np.asarray(z, float)) >= -tol))

    def vertex_index(self, z) -> int | None:
        z = np.asarray(z, float)
        for i in range(self.n_edges):
            if np.linalg.norm(z - self.vertices[i]) <= self._edge_tol:
                return i
        return None

    def edge_index(self, z) -> int | None:
        """Edge containing z in its (closed) interior, or None."""
        z = np.asarray(z, float)
        d = self._signed_dists(z)
        for i in range(self.n_edges):
            if abs(d[i]) <= self._edge_tol:
                a, b = self.edge(i)
                t = float((z - a) @ (b - a)) / float((b - a) @ (b - a))
                if -1e-12 <= t <= 1.0 + 1e-12:
                    return i
        return None

    def is_cone_point(self, p: SurfacePoint) -> bool:
        return self.vertex_index(np.array([p.u, p.v])) is not None

    def on_seam(self, p: SurfacePoint) -> bool:
        return self.edge_index(np.array([p.u, p.v])) is not None

    def canonicalize(self, p: SurfacePoint) -> SurfacePoint:
        z = np.array([float(p.u), float(p.v)])
        sheet = p.sheet if p.sheet in (FRONT, BACK) else FRONT
        for _ in range(64):
            d = self._signed_dists(z)
            worst = int(np.argmin(d))
            if d[worst] >= -self._edge_tol:
                break
            a, b = self.edge(worst)
            z = _reflect_point(z, a, b)
            sheet = BACK if sheet == FRONT else FRONT
        if self.on_seam(SurfacePoint(z[0], z[1], sheet)) or self.vertex_index(z) is not None:
            sheet = FRONT
        return SurfacePoint(float(z[0]), float(z[1]), sheet)

    def metric_at(self, p: SurfacePoint) -> np.ndarray:
        p = self.canonicalize(p)
        if self.is_cone_point(p):
            raise ConePointQuery("metric undefined at a cone point")
        return np.eye(2)

    def christoffel_at(self, p: SurfacePoint) -> np.ndarray:
        p = self.canonicalize(p)
        if self.is_cone_point(p):
            raise ConePointQuery("Christoffel symbols undefined at a cone point")
        return np.zeros((2, 2, 2))

    def gap(self, p: SurfacePoint, q: SurfacePoint) -> float:
        p = self.canonicalize(p)
        q = self.canonicalize(q)
        zp = np.array([p.u, p.v])
        zq = np.array([q.u, q.v])
        flat = float(np.linalg.norm(zp - zq))
        same = p.sheet == q.sheet or self.on_seam(p) or self.on_seam(q)
        if same:
            return flat
        return flat + 2.0 * min(
            min(np.abs(self._signed_dists(zp))), min(np.abs(self._signed_dists(zq)))
        )

    def canonical_tangent(self, p: SurfacePoint, w: TangentVector, sheet: str) -> TangentVector:
        """Express a sheet-tagged tangent at a seam point in the front chart basis."""
        p = self.canonicalize(p)
        if sheet == FRONT or not self.on_seam(p):
            return w
        i = self.edge_index(np.array([p.u, p.v]))
        a, b = self.edge(i)
        r = _reflect_dir(np.array([w.a, w.b]), a, b)
        return TangentVector(float(r[0]), float(r[1]))

    def to_config(self) -> str:
        pts = ";".join(f"{float(x)!r},{float(y)!r}" for x, y in self.vertices)
        return f"kind=doubled_polygon\nvertices={pts}"

    def __repr__(self):
        return f"DoubledPolygon({self.vertices.tolist()})"

    def __eq__(self, other):
        return isinstance(other, DoubledPolygon) and np.array_equal(
            other.vertices, self.vertices
        )

    def __hash__(self):
        return hash(("polygon", self.vertices.tobytes()))


def doubled_square(side: float = 1.0) -> DoubledPolygon:
    s = float(side)
    return DoubledPolygon([(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)])


def doubled_regular_polygon(n: int, side: float = 1.0) -> DoubledPolygon:
    """Regular n-gon with the given side length, first edge along +x from the origin."""
    r = side / (2.0 * math.sin(math.pi / n))
    cx, cy = side / 2.0, r * math.cos(math.pi / n)
    ang0 = math.atan2(0.0 - cy, 0.0 - cx)
    pts = [
        (cx + r * math.cos(ang0 + 2.0 * math.pi * k / n), cy + r * math.sin(ang0 + 2.0 * math.pi * k / n))
        for k in range(n)
    ]
    return DoubledPolygon(pts)


# ---------------------------------------------------------------------------
# Module-level operation wrappers (the public names)
# ---------------------------------------------------------------------------


def canonicalize(surface: SurfaceModel, p: SurfacePoint) -> SurfacePoint:
    return surface.canonicalize(p)


def metric_at(surface: SurfaceModel, p: SurfacePoint) -> np.ndarray:
    return surface.metric_at(p)


def christoffel_at(surface: SurfaceModel, p: SurfacePoint) -> np.ndarray:
    return surface.christoffel_at(p)


def inner(surface: SurfaceModel, p: SurfacePoint, u: TangentVector, v: TangentVector) -> float:
    return surface.inner(p, u, v)


def angle_between(
    surface: SurfaceModel, p: SurfacePoint, u: TangentVector, v: TangentVector
) -> float:
    return surface.angle_between(p, u, v)


# ---------------------------------------------------------------------------
# Plain-text config parsing
# ---------------------------------------------------------------------------


def parse_surface(text: str) -> SurfaceModel:
    """Parse a surface descriptor: either key=value lines or a compact one-liner.

    Accepted forms include ``sphere``, ``sphere radius=2``, ``ellipsoid c=0.5``,
    ``torus a=1 b=2``, ``square side=1``, ``pentagon side=1``, and
    ``kind=doubled_polygon`` with ``vertices=x,y;x,y;...``.
    """
    tokens: dict[str, str] = {}
    kind = None
    for raw in text.replace("\n", " ").split():
        if "=" in raw:
            k, val = raw.split("=", 1)
            tokens[k.strip()] = val.strip()
        else:
            kind = raw.strip()
    kind = tokens.pop("kind", kind)
    if kind is None:
        raise ValueError(f"no surface kind in {text!r}")
    kind = kind.lower()
    if kind == "sphere":
        return RoundSphere(float(tokens.get("radius", tokens.get("r", 1.0))))
    if kind == "ellipsoid":
        return EllipsoidOfRevolution(float(tokens["c"]))
    if kind == "torus":
        return FlatTorus(float(tokens.get("a", 1.0)), float(tokens.get("b", 1.0)))
    if kind == "square":
        return doubled_square(float(tokens.get("side", 1.0)))
    if kind == "pentagon":
        return doubled_regular_polygon(5, float(tokens.get("side", 1.0)))
    if kind == "doubled_polygon":
        pts = [tuple(map(float, pair.split(","))) for pair in tokens["vertices"].split(";")]
        return DoubledPolygon(pts)
    raise ValueError(f"unknown surface kind {kind!r}")
