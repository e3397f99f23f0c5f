"""Geodesic integration, closure into closed geodesics, Jacobi fields.

Spheroids integrate the geodesic ODE in the embedding (see ``_kernels``);
flat surfaces (torus, doubled polygons) trace exact straight lines, with
edge reflection implementing the sheet change on doubled polygons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (
    ConePointHit,
    ConePointQuery,
    DegenerateJacobian,
    GeometryError,
    IntegratorFailure,
    NoConvergence,
    ZeroVector,
)
from .surfaces import (
    BACK,
    FRONT,
    DoubledPolygon,
    FlatTorus,
    RoundSphere,
    SurfaceModel,
    SurfacePoint,
    TangentVector,
    _Spheroid,
    _reflect_dir,
)

_DEFAULT_ATOL = 1e-10


# ---------------------------------------------------------------------------
# Arc container
# ---------------------------------------------------------------------------


@dataclass
class GeodesicArc:
    """Unit-speed geodesic arc with its integration samples.

    ``ts`` holds accepted-step parameters (spheroids) or segment breakpoints
    (flat surfaces).  Spheroid samples live in ``emb`` as rows (x, v) in R^6;
    flat samples live in ``chart`` as rows (u, v, du, dv) — unwrapped for the
    torus, per-segment for polygons with ``sheets`` giving the sheet of the
    segment that starts at each breakpoint.
    """

    surface: SurfaceModel
    length: float
    ts: np.ndarray
    emb: np.ndarray | None = None
    chart: np.ndarray | None = None
    sheets: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    # -- raw sample access ----------------------------------------------------
    def _bracket(self, t: float) -> int:
        t = min(max(t, 0.0), self.length)
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        return min(max(i, 0), len(self.ts) - 2) if len(self.ts) > 1 else 0

    def embed_at(self, t: float) -> np.ndarray:
        """Embedded (x, v) row at parameter t (spheroids only), Hermite interpolated."""
        if self.emb is None:
            raise GeometryError("arc has no embedding samples")
        sph: _Spheroid = self.surface  # type: ignore[assignment]
        t = min(max(t, 0.0), self.length)
        i = self._bracket(t)
        t0, t1 = self.ts[i], self.ts[i + 1]
        h = t1 - t0
        y0, y1 = self.emb[i], self.emb[i + 1]
        if h <= 0:
            return y0.copy()
        s = (t - t0) / h
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        pos = h00 * y0[:3] + h10 * h * y0[3:] + h01 * y1[:3] + h11 * h * y1[3:]
        d00 = (6 * s2 - 6 * s) / h
        d10 = 3 * s2 - 4 * s + 1
        d01 = (-6 * s2 + 6 * s) / h
        d11 = 3 * s2 - 2 * s
        vel = d00 * y0[:3] + d10 * y0[3:] + d01 * y1[:3] + d11 * y1[3:]
        out = np.concatenate([pos, vel])
        K._project6(sph.a * sph.a, sph.c * sph.c, out)
        return out

    def sample_at(self, t: float):
        """(SurfacePoint, TangentVector) at parameter t, in canonical bases."""
        t = min(max(t, 0.0), self.length)
        if self.emb is not None:
            y = self.embed_at(t)
            return self.surface.tangent_from_embed(y[:3], y[3:])  # type: ignore[attr-defined]
        i = self._bracket(t)
        row = self.chart[i]
        u = row[0] + (t - self.ts[i]) * row[2]
        v = row[1] + (t - self.ts[i]) * row[3]
        vel = TangentVector(float(row[2]), float(row[3]))
        if isinstance(self.surface, DoubledPolygon):
            sheet = FRONT if self.sheets is None or self.sheets[i] == 0 else BACK
            p = self.surface.canonicalize(SurfacePoint(float(u), float(v), sheet))
            vel = self.surface.canonical_tangent(p, vel, sheet)
            return p, vel
        return self.surface.canonicalize(SurfacePoint(float(u), float(v))), vel

    def point_at(self, t: float) -> SurfacePoint:
        return self.sample_at(t)[0]

    def velocity_at(self, t: float) -> TangentVector:
        return self.sample_at(t)[1]

    @property
    def start(self) -> SurfacePoint:
        return self.point_at(0.0)

    @property
    def start_velocity(self) -> TangentVector:
        return self.velocity_at(0.0)

    @property
    def end(self) -> SurfacePoint:
        return self.point_at(self.length)

    @property
    def end_velocity(self) -> TangentVector:
        return self.velocity_at(self.length)

    def samples(self):
        """List of (t, SurfacePoint, TangentVector) at the stored parameters."""
        return [(float(t),) + self.sample_at(float(t)) for t in self.ts]

    def speed_drift(self) -> float:
        """Max |speed - 1| over stored samples (zero for flat surfaces by construction)."""
        if self.emb is None:
            drift = 0.0
            for i in range(len(self.ts) - 1 if len(self.ts) > 1 else 1):
                row = self.chart[i]
                drift = max(drift, abs(math.hypot(row[2], row[3]) - 1.0))
            return drift
        v = self.emb[:, 3:]
        return float(np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)))

    def to_csv(self) -> str:
        lines = ["t,u,v,du,dv"]
        for t, p, w in self.samples():
            lines.append(
                f"{t:.12g},{p.u:.12g},{p.v:.12g},{w.a:.12g},{w.b:.12g}"
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------


def _unit_or_raise(surface: SurfaceModel, p: SurfacePoint, v: TangentVector) -> TangentVector:
    n = surface.norm(p, v)
    if n == 0.0:
        raise ZeroVector("shoot requires a nonzero direction")
    return TangentVector(v.a / n, v.b / n)


def _shoot_spheroid(
    sph: _Spheroid, p: SurfacePoint, v: TangentVector, length: float, atol: float
) -> GeodesicArc:
    x = sph.embed(p)
    ve = sph.embed_tangent(p, v)
    ve /= np.linalg.norm(ve)
    y0 = np.concatenate([x, ve])
    a2, c2 = sph.a * sph.a, sph.c * sph.c
    cap = 4096
    while True:
        out_t = np.empty(cap)
        out_y = np.empty((cap, 6))
        n, status, max_err = K.integrate_spheroid(a2, c2, y0, float(length), atol, 1e9, out_t, out_y)
        if status == K.CAPACITY and cap < 1 << 18:
            cap *= 4
            continue
        break
    if status == K.STEP_UNDERFLOW:
        raise IntegratorFailure("step size underflow in geodesic integration")
    if status == K.CAPACITY:
        raise IntegratorFailure("sample capacity exhausted in geodesic integration")
    return GeodesicArc(
        surface=sph,
        length=float(length),
        ts=out_t[:n].copy(),
        emb=out_y[:n].copy(),
        meta={"steps": int(n - 1), "max_err": float(max_err), "atol": atol},
    )


def _shoot_torus(torus: FlatTorus, p: SurfacePoint, v: TangentVector, length: float) -> GeodesicArc:
    chart = np.array(
        [
            [p.u, p.v, v.a, v.b],
            [p.u + length * v.a, p.v + length * v.b, v.a, v.b],
        ]
    )
    return GeodesicArc(surface=torus, length=float(length), ts=np.array([0.0, float(length)]), chart=chart)


def _shoot_polygon(
    poly: DoubledPolygon, p: SurfacePoint, v: TangentVector, length: float
) -> GeodesicArc:
    cone_tol = 1e-9 * poly.polygon_diameter()
    z = np.array([p.u, p.v], dtype=float)
    sheet = 0 if p.sheet == FRONT else 1
    w = np.array([v.a, v.b], dtype=float)
    w /= np.linalg.norm(w)
    last_edge = -1
    # a seam start pointing out of the polygon really starts on the other sheet
    ei = poly.edge_index(z)
    if ei is not None:
        a, b = poly.edge(ei)
        d = (b - a) / np.linalg.norm(b - a)
        n_in = np.array([-d[1], d[0]])
        side = float(w @ n_in)
        if side < -1e-14:
            w = _reflect_dir(w, a, b)
            sheet ^= 1
            last_edge = ei
        elif side <= 1e-14:
            last_edge = -1  # along the seam; vertex hit will be detected by the walk
        else:
            last_edge = ei
    ts = [0.0]
    rows = [[z[0], z[1], w[0], w[1]]]
    sheets = [sheet]
    crossed = []
    t_done = 0.0
    remaining = float(length)
    guard = 0
    while remaining > 1e-15 * (1.0 + length):
        guard += 1
        if guard > 100000:
            raise IntegratorFailure("polygon walk did not terminate")
        # first exit through the boundary
        t_exit = math.inf
        hit_edge = -1
        for i in range(poly.n_edges):
            if i == last_edge:
                continue
            a, b = poly.edge(i)
            e = b - a
            det = w[0] * (-e[1]) - w[1] * (-e[0])
            if abs(det) < 1e-15:
                continue
            rhs = a - z
            t = (rhs[0] * (-e[1]) - rhs[1] * (-e[0])) / det
            s = (w[0] * rhs[1] - w[1] * rhs[0]) / det
            if t > 1e-12 and -1e-10 <= s <= 1.0 + 1e-10 and t < t_exit:
                t_exit = t
                hit_edge = i
        if t_exit >= remaining:
            zf = z + remaining * w
            ts.append(t_done + remaining)
            rows.append([zf[0], zf[1], w[0], w[1]])
            sheets.append(sheet)
            remaining = 0.0
            break
        if hit_edge < 0:
            raise IntegratorFailure("polygon ray found no exit edge")
        zx = z + t_exit * w
        if poly.vertex_index(zx) is not None or min(
            np.linalg.norm(zx - poly.vertices[k]) for k in range(poly.n_edges)
        ) <= cone_tol:
            raise ConePointHit("geodesic hits a polygon corner; not extendable")
        a, b = poly.edge(hit_edge)
        w = _reflect_dir(w, a, b)
        sheet ^= 1
        z = zx
        t_done += t_exit
        remaining -= t_exit
        last_edge = hit_edge
        ts.append(t_done)
        rows.append([z[0], z[1], w[0], w[1]])
        sheets.append(sheet)
        crossed.append(hit_edge)
    return GeodesicArc(
        surface=poly,
        length=float(length),
        ts=np.array(ts),
        chart=np.array(rows),
        sheets=np.array(sheets, dtype=np.int8),
        meta={"crossed_edges": crossed},
    )


def shoot(
    surface: SurfaceModel,
    p: SurfacePoint,
    v: TangentVector,
    length: float,
    atol: float = _DEFAULT_ATOL,
) -> GeodesicArc:
    """Integrate the unit-speed geodesic from p in direction v for the given length."""
    p = surface.canonicalize(p)
    if surface.is_cone_point(p):
        raise ConePointQuery("cannot shoot from a cone point")
    if length < 0:
        raise ValueError("length must be nonnegative")
    v = _unit_or_raise(surface, p, v)
    if isinstance(surface, _Spheroid):
        return _shoot_spheroid(surface, p, v, length, atol)
    if isinstance(surface, FlatTorus):
        return _shoot_torus(surface, p, v, length)
    if isinstance(surface, DoubledPolygon):
        return _shoot_polygon(surface, p, v, length)
    raise TypeError(f"unsupported surface {surface!r}")


# ---------------------------------------------------------------------------
# Closed geodesics
# ---------------------------------------------------------------------------


@dataclass
class ClosedGeodesic:
    """Closed unit-speed geodesic, parametrized by S^1 proportionally to arc length."""

    arc: GeodesicArc

    @property
    def surface(self) -> SurfaceModel:
        return self.arc.surface

    @property
    def length(self) -> float:
        return self.arc.length

    def _wrap(self, t: float) -> float:
        return (float(t) % (2.0 * math.pi)) / (2.0 * math.pi) * self.length

    def evaluate(self, t: float):
        """Point and (unit) velocity at circle parameter t in [0, 2*pi)."""
        return self.arc.sample_at(self._wrap(t))

    def point(self, t: float) -> SurfacePoint:
        return self.evaluate(t)[0]

    def velocity(self, t: float) -> TangentVector:
        return self.evaluate(t)[1]

    def embed_eval(self, t: float) -> np.ndarray:
        return self.arc.embed_at(self._wrap(t))

    def to_csv(self) -> str:
        return self.arc.to_csv()


def evaluate(gamma: ClosedGeodesic, t: float):
    return gamma.evaluate(t)


def _closure_defect(arc: GeodesicArc):
    """(position gap, velocity angle) between the arc's endpoint and its start."""
    surface = arc.surface
    gap = surface.gap(arc.end, arc.start)
    if arc.emb is not None:
        v0 = arc.emb[0, 3:]
        v1 = arc.embed_at(arc.length)[3:]
        c = float(v0 @ v1) / (np.linalg.norm(v0) * np.linalg.norm(v1))
        ang = math.acos(min(1.0, max(-1.0, c)))
    else:
        w0 = np.array(list(arc.start_velocity))
        w1 = np.array(list(arc.end_velocity))
        c = float(w0 @ w1) / (np.linalg.norm(w0) * np.linalg.norm(w1))
        ang = math.acos(min(1.0, max(-1.0, c)))
    return gap, ang


def _as_closed(arc: GeodesicArc, gap_tol_factor=1e-7, ang_tol=1e-6) -> ClosedGeodesic:
    gap, ang = _closure_defect(arc)
    if gap > gap_tol_factor * arc.length or ang > ang_tol:
        raise NoConvergence(
            f"closure invariants violated: gap={gap:.3e}, angle={ang:.3e} (L={arc.length:.6g})"
        )
    arc.meta["closure_gap"] = gap
    arc.meta["closure_angle"] = ang
    return ClosedGeodesic(arc)


def _close_torus(torus: FlatTorus, seed: GeodesicArc) -> ClosedGeodesic:
    row = seed.chart[0]
    du, dv = row[2], row[3]
    m = round(seed.length * du / torus.a)
    n = round(seed.length * dv / torus.b)
    if m == 0 and n == 0:
        raise DegenerateJacobian("seed winding is trivial")
    disp = np.array([m * torus.a, n * torus.b])
    ell = float(np.linalg.norm(disp))
    w = disp / ell
    if math.acos(min(1.0, max(-1.0, float(w @ np.array([du, dv]))))) > 0.2:
        raise NoConvergence("seed direction too far from a closing direction")
    arc = _shoot_torus(torus, seed.start, TangentVector(w[0], w[1]), ell)
    return _as_closed(arc)


def _close_polygon(poly: DoubledPolygon, seed: GeodesicArc) -> ClosedGeodesic:
    crossed = seed.meta.get("crossed_edges")
    if crossed is None:
        retrace = _shoot_polygon(poly, seed.start, seed.velocity_at(0.0), seed.length)
        crossed = retrace.meta["crossed_edges"]
    row = seed.chart[0]
    z0 = np.array([row[0], row[1]])
    w0 = np.array([row[2], row[3]])
    start_sheet = FRONT if (seed.sheets is None or seed.sheets[0] == 0) else BACK
    # compose plane reflections; try the longest translation prefix first
    qmats = []
    bvecs = []
    q = np.eye(2)
    bv = np.zeros(2)
    for i in crossed:
        a, b = poly.edge(i)
        a_pl = q @ a + bv
        b_pl = q @ b + bv
        d = (b_pl - a_pl) / np.linalg.norm(b_pl - a_pl)
        r = 2.0 * np.outer(d, d) - np.eye(2)
        bv = r @ (bv - a_pl) + a_pl
        q = r @ q
        qmats.append(q.copy())
        bvecs.append(bv.copy())
    for j in range(len(crossed), 0, -1):
        q = qmats[j - 1]
        bv = bvecs[j - 1]
        if np.max(np.abs(q - np.eye(2))) > 1e-9:
            continue
        tau = q @ z0 + bv - z0
        ell = float(np.linalg.norm(tau))
        if ell < 1e-12:
            raise DegenerateJacobian("unfolding holonomy fixes the start point")
        w = tau / ell
        if math.acos(min(1.0, max(-1.0, float(w @ w0)))) > 0.2:
            continue
        arc = _shoot_polygon(
            poly, SurfacePoint(z0[0], z0[1], start_sheet), TangentVector(w[0], w[1]), ell
        )
        gap, ang = _closure_defect(arc)
        if gap <= 1e-9 * max(ell, 1.0) and ang <= 1e-9:
            return _as_closed(arc)
    raise NoConvergence("no translation prefix of the unfolding holonomy closes the seed")


def _close_spheroid(sph: _Spheroid, seed: GeodesicArc, max_iter=50) -> ClosedGeodesic:
    a2, c2 = sph.a * sph.a, sph.c * sph.c
    atol = seed.meta.get("atol", _DEFAULT_ATOL)
    y0 = seed.emb[0]
    x0 = y0[:3].copy()
    v0 = y0[3:].copy()
    period = seed.length

    def normal(x):
        n = np.array([x[0] / a2, x[1] / a2, x[2] / c2])
        return n / np.linalg.norm(n)

    w_trans = np.cross(normal(x0), v0)
    w_trans /= np.linalg.norm(w_trans)

    def state(params):
        s, dalpha, period_ = params
        y = np.concatenate([x0 + s * w_trans, v0]).astype(float)
        K._project6(a2, c2, y)
        xs = y[:3]
        ns = normal(xs)
        t1 = y[3:]
        t2 = np.cross(ns, t1)
        vs = math.cos(dalpha) * t1 + math.sin(dalpha) * t2
        return xs, vs / np.linalg.norm(vs), t1, t2, ns, float(period_)

    yout = np.empty(6)

    def residual(params):
        xs, vs, t1, t2, ns, period_ = state(params)
        st = K.shoot_last(a2, c2, np.concatenate([xs, vs]), period_, atol, yout)
        if st != K.OK:
            raise IntegratorFailure("shoot failed inside closure Newton")
        dx = yout[:3] - xs
        e2 = np.cross(ns, vs)
        vf = yout[3:] - (yout[3:] @ ns) * ns
        nv = np.linalg.norm(vf)
        if nv == 0:
            raise DegenerateJacobian("vanishing end velocity")
        vf = vf / nv
        r3 = math.atan2(float(vf @ e2), float(vf @ vs))
        return np.array([float(dx @ vs), float(dx @ e2), r3])

    params = np.array([0.0, 0.0, period])
    scale = max(period, 1.0)
    stalls = 0
    for _ in range(max_iter):
        r = residual(params)
        if np.hypot(r[0], r[1]) < 1e-10 * scale and abs(r[2]) < 1e-9:
            xs, vs, *_ , period_ = state(params)
            p_chart, v_chart = sph.tangent_from_embed(xs, vs)
            arc = _shoot_spheroid(sph, p_chart, sph.unit(p_chart, v_chart), period_, atol)
            return _as_closed(arc)
        jac = np.empty((3, 3))
        h = 1e-7 * scale
        for k in range(3):
            dp = params.copy()
            dp[k] += h
            jac[:, k] = (residual(dp) - r) / h
        step, *_ = np.linalg.lstsq(jac, -r, rcond=1e-10)
        lim = np.array([0.1 * scale, 0.1, 0.1 * scale])
        step = np.clip(step, -lim, lim)
        if np.max(np.abs(step)) < 1e-15 * scale:
            stalls += 1
            if stalls >= 3:
                raise DegenerateJacobian("closure return map is degenerate at the seed")
        params = params + step
        if params[2] < 0.1 * period:
            params[2] = 0.1 * period
    raise NoConvergence("closure Newton did not converge in 50 steps")


def close_up(surface: SurfaceModel, seed: GeodesicArc) -> ClosedGeodesic:
    """Close a near-periodic seed arc into a genuine closed geodesic."""
    gap, ang = _closure_defect(seed)
    if gap > 0.05 * seed.length or ang > 0.2:
        raise ValueError(
            f"seed not near-closed (gap={gap:.3g}, angle={ang:.3g}); shoot closer first"
        )
    if isinstance(surface, FlatTorus):
        return _close_torus(surface, seed)
    if isinstance(surface, DoubledPolygon):
        return _close_polygon(surface, seed)
    if isinstance(surface, _Spheroid):
        return _close_spheroid(surface, seed)
    raise TypeError(f"unsupported surface {surface!r}")


# ---------------------------------------------------------------------------
# Jacobi fields
# ---------------------------------------------------------------------------


@dataclass
class JacobiSolution:
    """Scalar normal Jacobi field along an arc with J(0)=0, J'(0)=1."""

    ts: np.ndarray
    J: np.ndarray
    Jp: np.ndarray
    first_zero: float | None

    def value(self, t: float) -> float:
        return float(np.interp(t, self.ts, self.J))


def jacobi(surface: SurfaceModel, arc: GeodesicArc) -> JacobiSolution:
    """Solve J'' + K(t) J = 0 along the arc and report the first positive zero."""
    if isinstance(surface, DoubledPolygon):
        raise GeometryError("doubled polygons are flat; the Jacobi solver is not defined there")
    if isinstance(surface, FlatTorus):
        ts = arc.ts.copy()
        return JacobiSolution(ts=ts, J=ts.copy(), Jp=np.ones_like(ts), first_zero=None)
    sph: _Spheroid = surface  # type: ignore[assignment]
    a2, c2 = sph.a * sph.a, sph.c * sph.c
    atol = arc.meta.get("atol", _DEFAULT_ATOL)
    cap = max(4 * len(arc.ts) + 64, 4096)
    while True:
        out_t = np.empty(cap)
        out_j = np.empty(cap)
        out_jp = np.empty(cap)
        n, first_zero, status = K.jacobi_spheroid(
            a2, c2, arc.emb[0].copy(), arc.length, atol, out_t, out_j, out_jp
        )
        if status == K.CAPACITY and cap < 1 << 18:
            cap *= 4
            continue
        break
    if status == K.STEP_UNDERFLOW:
        raise IntegratorFailure("step underflow in Jacobi integration")
    if status == K.CAPACITY:
        raise IntegratorFailure("capacity exhausted in Jacobi integration")
    return JacobiSolution(
        ts=out_t[:n].copy(),
        J=out_j[:n].copy(),
        Jp=out_jp[:n].copy(),
        first_zero=None if first_zero < 0 else float(first_zero),
    )


# ---------------------------------------------------------------------------
# Catalog constructors
# ---------------------------------------------------------------------------


def equator_geodesic(sph: _Spheroid, atol: float = _DEFAULT_ATOL) -> ClosedGeodesic:
    p = SurfacePoint(math.pi / 2.0, 0.0)
    v = sph.unit(p, TangentVector(0.0, 1.0))
    return _as_closed(_shoot_spheroid(sph, p, v, 2.0 * math.pi * sph.a, atol))


def meridian_geodesic(sph: _Spheroid, phi0: float = 0.0, atol: float = _DEFAULT_ATOL) -> ClosedGeodesic:
    p = SurfacePoint(math.pi / 2.0, phi0)
    v = sph.unit(p, TangentVector(-1.0, 0.0))  # toward the north pole
    ell = 2.0 * sph.meridian_half_length()
    return _as_closed(_shoot_spheroid(sph, p, v, ell, atol))


def great_circle(sphere: RoundSphere, p: SurfacePoint, v: TangentVector, atol: float = _DEFAULT_ATOL) -> ClosedGeodesic:
    v = sphere.unit(sphere.canonicalize(p), v)
    return _as_closed(_shoot_spheroid(sphere, p, v, 2.0 * math.pi * sphere.radius, atol))


def torus_line(torus: FlatTorus, p: SurfacePoint, m: int, n: int) -> ClosedGeodesic:
    if m == 0 and n == 0:
        raise ValueError("winding numbers must not both vanish")
    disp = np.array([m * torus.a, n * torus.b])
    ell = float(np.linalg.norm(disp))
    w = disp / ell
    return _as_closed(_shoot_torus(torus, torus.canonicalize(p), TangentVector(w[0], w[1]), ell))


def over_under_geodesic(square: DoubledPolygon, which: int = 0) -> ClosedGeodesic:
    """One of the two over-under closed geodesics through the side midpoints of a square."""
    v0, v1 = square.vertices[0], square.vertices[1]
    side = float(np.linalg.norm(v1 - v0))
    m1 = SurfacePoint(*(0.5 * (v0 + v1)))
    d = (v1 - v0) / side
    n_in = np.array([-d[1], d[0]])
    w = (d + n_in) / math.sqrt(2.0) if which == 0 else (d - n_in) / math.sqrt(2.0)
    seed = _shoot_polygon(square, m1, TangentVector(w[0], w[1]), 2.0 * math.sqrt(2.0) * side)
    return _close_polygon(square, seed)
