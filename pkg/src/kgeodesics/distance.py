"""Minimizing geodesics, distance, cut classification, distance derivatives.

``minimizers`` enumerates the set of initial unit velocities at q of
minimizing geodesics from q to p, with a per-surface algorithm:

* sphere: closed form (great circles);
* ellipsoid of revolution: multi-start shooting over a direction grid with
  Gauss-Newton refinement, clustering, and tie filtering;
* flat torus: lattice translate enumeration, keeping ties;
* doubled polygon: breadth-first unfolding over edge sequences with angular
  window pruning, keeping ties.

Classification of a point against the distance function d_p follows the
regular / ordinary-cut / singular-cut trichotomy: ordinary means multiple
minimizers; singular means a unique minimizer with a Jacobi zero at the
distance; regular requires both a strict second-length margin and a clear
first conjugate point.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import geodesic as geo
from .errors import (
    BVPFailure,
    ConePointQuery,
    DepthBoundExceeded,
    NotDifferentiable,
    UndefinedAtBasePoint,
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

REGULAR = "Regular"
ORDINARY_CUT = "OrdinaryCut"
SINGULAR_CUT = "SingularCut"
BASE_POINT = "BasePoint"
INCONCLUSIVE = "Inconclusive"

_CLUSTER_TOL = 1e-3       # rad, direction dedup
_CONTINUUM_MIN = 32       # clusters on the start grid that flag a continuum
_CONJ_BAND = 1e-4         # relative Jacobi-zero band around L for singular cuts
_MARGIN_FACTOR = 10.0     # second-shortest must exceed min by this many tol_len
_FOCAL_MERGE_TOL = 0.05   # rad, tie bundle width treated as one focal minimizer


def default_tol_len(surface: SurfaceModel) -> float:
    return 1e-6 * surface.diameter_bound()


@dataclass
class MinimizerSet:
    """The minimizing directions from q to p plus the distance between them."""

    surface: SurfaceModel
    q: SurfacePoint
    p: SurfacePoint
    distance: float
    directions: list[TangentVector]          # unit initial velocities at q
    far_directions: list[TangentVector]      # matching members of the reversed set at p
    continuum: bool = False
    second_length: float | None = None
    _arc_seeds: list = field(default_factory=list, repr=False)  # (point, sheet/dir info, length)
    _arcs: list | None = field(default=None, repr=False)
    _conjugate_zero: float | None = field(default=None, repr=False)
    _conjugate_done: bool = field(default=False, repr=False)

    @property
    def multiplicity(self) -> int:
        return len(self.directions)

    @property
    def arcs(self) -> list:
        if self._arcs is None:
            self._arcs = [self._build_arc(seed) for seed in self._arc_seeds]
        return self._arcs

    def _build_arc(self, seed):
        kind, payload = seed
        if kind == "shoot":
            point, direction, length = payload
            return geo.shoot(self.surface, point, direction, length)
        if kind == "arc":
            return payload
        raise ValueError(kind)

    def first_conjugate_zero(self) -> float | None:
        """First Jacobi zero along the (first) minimizing direction; None when absent/flat.

        Integrates slightly past the distance so a zero sitting exactly at the
        endpoint (singular cut point) is still detected.
        """
        if not self._conjugate_done:
            if isinstance(self.surface, _Spheroid) and self.arcs:
                arc = self.arcs[0]
                sph: _Spheroid = self.surface
                a2, c2 = sph.a * sph.a, sph.c * sph.c
                span = arc.length * 1.001 + 1e-9
                cap = 65536
                out_t = np.empty(cap)
                out_j = np.empty(cap)
                out_jp = np.empty(cap)
                _, first_zero, status = K.jacobi_spheroid(
                    a2, c2, arc.emb[0].copy(), span, arc.meta.get("atol", 1e-10),
                    out_t, out_j, out_jp,
                )
                self._conjugate_zero = None if first_zero < 0 else float(first_zero)
            else:
                self._conjugate_zero = None
            self._conjugate_done = True
        return self._conjugate_zero

    def to_json(self) -> str:
        return json.dumps(
            {
                "distance": self.distance,
                "multiplicity": self.multiplicity,
                "continuum": self.continuum,
                "second_length": self.second_length,
                "directions": [[d.a, d.b] for d in self.directions],
            },
            sort_keys=True,
        )


@dataclass
class PointClass:
    """Cut classification of q relative to d_p, with its numeric evidence."""

    label: str
    multiplicity: int
    continuum: bool
    conjugate_zero: float | None
    distance: float
    second_length: float | None

    @property
    def is_cut(self) -> bool:
        return self.label in (ORDINARY_CUT, SINGULAR_CUT)


# ---------------------------------------------------------------------------
# Per-surface minimizer enumeration
# ---------------------------------------------------------------------------


def _sphere_minimizers(sphere: RoundSphere, q, p, tol_len) -> MinimizerSet:
    r = sphere.radius
    qe, pe = sphere.embed(q), sphere.embed(p)
    qh, ph = qe / r, pe / r
    cosp = float(np.clip(qh @ ph, -1.0, 1.0))
    psi = math.acos(cosp)
    d = r * psi

    def arc_from(w):
        n_rows = 65
        ss = np.linspace(0.0, psi, n_rows)
        rows = np.empty((n_rows, 6))
        for i, s in enumerate(ss):
            rows[i, :3] = r * (math.cos(s) * qh + math.sin(s) * w)
            rows[i, 3:] = -math.sin(s) * qh + math.cos(s) * w
        return geo.GeodesicArc(
            surface=sphere, length=d, ts=r * ss, emb=rows, meta={"atol": 1e-12, "analytic": True}
        )

    # antipodal within the tie tolerance: the two arcs of any great circle tie,
    # so the minimizing directions form a full circle
    if r * (math.pi - psi) <= tol_len:
        e1, e2 = sphere.tangent_frame(q)
        dirs, fars, seeds = [], [], []
        for j in range(_CONTINUUM_MIN):
            ang = 2.0 * math.pi * j / _CONTINUUM_MIN
            w = math.cos(ang) * e1 + math.sin(ang) * e2
            dirs.append(sphere.tangent_from_embed(qe, w)[1])
            fars.append(sphere.tangent_from_embed(pe, w)[1])
            seeds.append(("arc", arc_from(w)))
        return MinimizerSet(
            sphere, q, p, d, dirs, fars, continuum=True, second_length=None, _arc_seeds=seeds
        )
    w = ph - cosp * qh
    w /= np.linalg.norm(w)
    v_arr = -math.sin(psi) * qh + math.cos(psi) * w
    return MinimizerSet(
        sphere,
        q,
        p,
        d,
        [sphere.tangent_from_embed(qe, w)[1]],
        [sphere.tangent_from_embed(pe, -v_arr)[1]],
        continuum=False,
        second_length=r * (2.0 * math.pi - psi),
        _arc_seeds=[("arc", arc_from(w))],
    )


def _torus_minimizers(torus: FlatTorus, q, p, tol_len) -> MinimizerSet:
    cands = torus.lattice_offsets(q, p, slack=max(torus.a, torus.b))
    d = cands[0][0]
    dirs, fars, seeds = [], [], []
    second = None
    for r, w in cands:
        if r <= d + tol_len:
            ux, uy = w[0] / r, w[1] / r
            dirs.append(TangentVector(ux, uy))
            fars.append(TangentVector(-ux, -uy))
            seeds.append(("shoot", (q, TangentVector(ux, uy), r)))
        elif second is None and r > d + tol_len:
            second = r
    return MinimizerSet(torus, q, p, d, dirs, fars, second_length=second, _arc_seeds=seeds)


def _spheroid_minimizers(sph: _Spheroid, q, p, tol_len, n_starts=256) -> MinimizerSet:
    a2, c2 = sph.a * sph.a, sph.c * sph.c
    qe, pe = sph.embed(q), sph.embed(p)
    e1, e2 = sph.tangent_frame(q)
    diam = sph.diameter_bound()
    lmax = 1.2 * diam + 0.1
    probe_t = np.empty(n_starts)
    probe_d = np.empty(n_starts)
    K.multistart_probe(
        a2, c2, qe, e1, e2, pe[0], pe[1], pe[2], n_starts, lmax, 1e-8,
        max(diam / 64.0, 0.02), probe_t, probe_d,
    )
    keep_mask = probe_d < 0.05 * diam
    order = np.argsort(probe_d, kind="stable")
    keep = set(np.nonzero(keep_mask)[0].tolist()) | set(order[:16].tolist())
    keep = sorted(keep)[:96]
    if not keep:
        raise BVPFailure("no shooting start approached the target")
    angles = np.array([2.0 * math.pi * k / n_starts for k in keep])
    l0s = np.maximum(probe_t[keep], 1e-6)
    out = np.empty((len(keep), 4))
    yends = np.empty((len(keep), 6))
    K.refine_batch(
        a2, c2, qe, e1, e2, pe[0], pe[1], pe[2], angles, l0s, 1e-11, 1e-9 * (1.0 + diam), 60,
        out, yends,
    )
    recs = []
    for i in range(len(keep)):
        alpha, ell, resid, ok = out[i]
        if ok == 1.0 and ell <= lmax * 1.001:
            recs.append((alpha % (2.0 * math.pi), float(ell), yends[i].copy()))
    if not recs:
        raise BVPFailure("no shooting start converged; start grid too coarse")
    # angular clustering
    recs.sort(key=lambda t: t[0])
    clusters = []
    for rec in recs:
        placed = False
        for cl in clusters:
            da = abs(rec[0] - cl[0][0])
            da = min(da, 2.0 * math.pi - da)
            if da <= _CLUSTER_TOL and abs(rec[1] - cl[0][1]) <= max(10 * tol_len, 1e-7):
                cl.append(rec)
                placed = True
                break
        if not placed:
            clusters.append([rec])
    reps = [min(cl, key=lambda t: t[1]) for cl in clusters]
    lmin = min(r[1] for r in reps)
    mins = [r for r in reps if r[1] <= lmin + tol_len]
    rest = [r[1] for r in reps if r[1] > lmin + tol_len]
    second = min(rest) if rest else None
    continuum = len(mins) >= _CONTINUUM_MIN
    if continuum:
        mins.sort(key=lambda t: t[0])
        stride = max(1, len(mins) // _CONTINUUM_MIN)
        mins = mins[::stride][:_CONTINUUM_MIN]
    else:
        # Focal merging: tied directions bundled within a small cone are the
        # numerically-split image of a single minimizer at a conjugate point
        # (two genuinely distinct minimizers with nearly equal directions
        # would have a Jacobi zero between them).  Genuine ordinary-cut pairs
        # keep well-separated directions and are untouched.
        mins.sort(key=lambda t: t[0])
        merged = []
        for rec in mins:
            if merged and min(
                abs(rec[0] - merged[-1][-1][0]),
                2.0 * math.pi - abs(rec[0] - merged[-1][-1][0]),
            ) <= _FOCAL_MERGE_TOL:
                merged[-1].append(rec)
            else:
                merged.append([rec])
        if len(merged) > 1:
            first, last = merged[0], merged[-1]
            gap_wrap = min(
                abs(first[0][0] + 2.0 * math.pi - last[-1][0]),
                abs(first[0][0] - last[-1][0]),
            )
            if gap_wrap <= _FOCAL_MERGE_TOL:
                merged[0] = last + first
                merged.pop()
        # keep the angular center of each bundle: that is the actual minimizer
        # at a focal point (the shortest member only wins by focusing noise)
        mins = []
        for group in merged:
            mid = 0.5 * (group[0][0] + group[-1][0])
            mins.append(min(group, key=lambda t: abs(t[0] - mid)))
    dirs, fars, seeds = [], [], []
    for alpha, ell, yend in mins:
        w = math.cos(alpha) * e1 + math.sin(alpha) * e2
        dir_q = sph.tangent_from_embed(qe, w)[1]
        vf = yend[3:]
        far = sph.tangent_from_embed(pe, -vf / np.linalg.norm(vf))[1]
        dirs.append(dir_q)
        fars.append(far)
        seeds.append(("shoot", (q, dir_q, ell)))
    return MinimizerSet(
        sph, q, p, lmin, dirs, fars, continuum=continuum, second_length=second, _arc_seeds=seeds
    )


# ---- polygon unfolding -----------------------------------------------------


def _segment_min_dist(x, a, b):
    d = b - a
    t = float((x - a) @ d) / float(d @ d)
    t = min(1.0, max(0.0, t))
    return float(np.linalg.norm(a + t * d - x))


def _polygon_paths(poly: DoubledPolygon, zq, q_sheets, zp, p_sheets, depth_bound, slack):
    """Geodesic candidates on the doubled polygon via unfolding enumeration.

    Returns records (length, start_sheet, dir, end_sheet, end_dir_in, n_cross)
    with both directions in the chart of their own sheet; ``end_dir_in`` is the
    arrival velocity at p.  Raises DepthBoundExceeded when a pruned-at-depth
    branch could still have beaten the best found candidate.
    """
    zq = np.asarray(zq, float)
    zp = np.asarray(zp, float)
    vertex_tol = 1e-9 * poly.polygon_diameter()
    results = []
    best = math.inf
    bound_violation = math.inf
    same_point = bool(np.linalg.norm(zq - zp) < 1e-15)

    for s0 in q_sheets:
        # node: (Q, b, plane_edges list, last_edge, depth, window (c, h) or None)
        stack = [(np.eye(2), np.zeros(2), [], -1, 0, None)]
        while stack:
            qm, bv, pedges, last, depth, win = stack.pop()
            end_sheet = s0 if depth % 2 == 0 else (BACK if s0 == FRONT else FRONT)
            if end_sheet in p_sheets and not (depth == 0 and same_point):
                yp = qm @ zp + bv
                rel = yp - zq
                r = float(np.linalg.norm(rel))
                if r > 1e-15 and r < best + slack:
                    ok = True
                    if depth > 0:
                        ang = math.atan2(rel[1], rel[0])
                        if win is not None:
                            da = (ang - win[0] + math.pi) % (2.0 * math.pi) - math.pi
                            if abs(da) > win[1]:
                                ok = False
                        t_prev = 0.0
                        if ok:
                            for (ea, eb) in pedges:
                                de = eb - ea
                                det = rel[0] * (-de[1]) - rel[1] * (-de[0])
                                if abs(det) < 1e-15:
                                    ok = False
                                    break
                                rhs = ea - zq
                                tt = (rhs[0] * (-de[1]) - rhs[1] * (-de[0])) / det
                                ss = (rel[0] * rhs[1] - rel[1] * rhs[0]) / det
                                cross_pt = ea + ss * de
                                if not (t_prev + 1e-13 < tt < 1.0 - 1e-13):
                                    ok = False
                                    break
                                if (
                                    np.linalg.norm(cross_pt - ea) <= vertex_tol
                                    or np.linalg.norm(cross_pt - eb) <= vertex_tol
                                    or not (-1e-10 <= ss <= 1.0 + 1e-10)
                                ):
                                    ok = False
                                    break
                                t_prev = tt
                    if ok:
                        w = rel / r
                        dir_start = w.copy()
                        end_dir = qm.T @ w
                        results.append((r, s0, dir_start, end_sheet, end_dir, depth))
                        best = min(best, r)
            if depth >= depth_bound:
                continue
            for f in range(poly.n_edges):
                if f == last:
                    continue
                a, b = poly.edge(f)
                a_pl = qm @ a + bv
                b_pl = qm @ b + bv
                dmin = _segment_min_dist(zq, a_pl, b_pl)
                if dmin >= best + slack:
                    continue
                ra = a_pl - zq
                rb = b_pl - zq
                na, nb = np.linalg.norm(ra), np.linalg.norm(rb)
                if na < vertex_tol or nb < vertex_tol:
                    continue  # q sits on this unfolded edge's endpoint
                aa = math.atan2(ra[1], ra[0])
                ab = math.atan2(rb[1], rb[0])
                delta = (ab - aa + math.pi) % (2.0 * math.pi) - math.pi
                if abs(delta) < 1e-14:
                    continue
                c_new = aa + 0.5 * delta
                h_new = 0.5 * abs(delta)
                if win is not None:
                    off = (c_new - win[0] + math.pi) % (2.0 * math.pi) - math.pi
                    lo = max(-win[1], off - h_new)
                    hi = min(win[1], off + h_new)
                    if lo >= hi - 1e-15:
                        continue
                    c_child = win[0] + 0.5 * (lo + hi)
                    h_child = 0.5 * (hi - lo)
                else:
                    c_child = c_new
                    h_child = h_new
                if depth + 1 > depth_bound:
                    bound_violation = min(bound_violation, dmin)
                    continue
                de = (b_pl - a_pl) / np.linalg.norm(b_pl - a_pl)
                rmat = 2.0 * np.outer(de, de) - np.eye(2)
                b_new = rmat @ (bv - a_pl) + a_pl
                q_new = rmat @ qm
                stack.append((q_new, b_new, pedges + [(a_pl, b_pl)], f, depth + 1, (c_child, h_child)))

    if bound_violation < best + slack:
        raise DepthBoundExceeded(
            f"unfolding depth bound hit with a live branch at distance {bound_violation:.6g}"
        )
    results.sort(key=lambda t: (t[0], math.atan2(t[2][1], t[2][0])))
    return results


def _polygon_point_sheets(poly: DoubledPolygon, p: SurfacePoint):
    if poly.on_seam(p) or poly.is_cone_point(p):
        return (FRONT, BACK)
    return (p.sheet,)


def _polygon_minimizers(poly: DoubledPolygon, q, p, tol_len, depth_bound=12) -> MinimizerSet:
    if poly.is_cone_point(q) or poly.is_cone_point(p):
        raise ConePointQuery("minimizer directions are undefined at cone points")
    zq = np.array([q.u, q.v])
    zp = np.array([p.u, p.v])
    recs = _polygon_paths(
        poly, zq, _polygon_point_sheets(poly, q), zp, _polygon_point_sheets(poly, p),
        depth_bound, slack=max(tol_len, 0.25 * poly.polygon_diameter()),
    )
    if not recs:
        raise BVPFailure("polygon unfolding found no candidates")
    # dedupe by canonical start direction + length
    seen = {}
    for r, s0, w, es, ed, depth in recs:
        w_can = poly.canonical_tangent(q, TangentVector(w[0], w[1]), s0)
        key = (round(math.atan2(w_can.b, w_can.a), 9), round(r, 11))
        if key not in seen:
            seen[key] = (r, s0, w, es, ed, depth)
    uniq = sorted(seen.values(), key=lambda t: (t[0], math.atan2(t[2][1], t[2][0])))
    d = uniq[0][0]
    dirs, fars, seeds = [], [], []
    second = None
    for r, s0, w, es, ed, depth in uniq:
        if r <= d + tol_len:
            dirs.append(poly.canonical_tangent(q, TangentVector(w[0], w[1]), s0))
            fars.append(poly.canonical_tangent(p, TangentVector(-ed[0], -ed[1]), es))
            seeds.append(("shoot", (SurfacePoint(q.u, q.v, s0), TangentVector(w[0], w[1]), r)))
        elif second is None:
            second = r
    return MinimizerSet(poly, q, p, d, dirs, fars, second_length=second, _arc_seeds=seeds)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=16384)
def _minimizers_cached(surface, q, p, tol_key):
    tol_len = tol_key if tol_key is not None else default_tol_len(surface)
    if isinstance(surface, RoundSphere):
        return _sphere_minimizers(surface, q, p, tol_len)
    if isinstance(surface, _Spheroid):
        return _spheroid_minimizers(surface, q, p, tol_len)
    if isinstance(surface, FlatTorus):
        return _torus_minimizers(surface, q, p, tol_len)
    if isinstance(surface, DoubledPolygon):
        return _polygon_minimizers(surface, q, p, tol_len)
    raise TypeError(f"unsupported surface {surface!r}")


def minimizers(surface: SurfaceModel, q: SurfacePoint, p: SurfacePoint, tol_len=None) -> MinimizerSet:
    """All minimizing directions from q to p (the set of initial velocities)."""
    q = surface.canonicalize(q)
    p = surface.canonicalize(p)
    if q == p:
        return MinimizerSet(surface, q, p, 0.0, [], [], continuum=False)
    return _minimizers_cached(surface, q, p, tol_len)


def distance(surface: SurfaceModel, q: SurfacePoint, p: SurfacePoint) -> float:
    """Geodesic distance d(q, p)."""
    return minimizers(surface, q, p).distance


def classify_point(surface: SurfaceModel, p: SurfacePoint, q: SurfacePoint, ms=None) -> PointClass:
    """Classify q against d_p: Regular / OrdinaryCut / SingularCut / BasePoint.

    Inconclusive is reported when the margin test and the Jacobi-zero band
    disagree, never guessed away.
    """
    p_c = surface.canonicalize(p)
    q_c = surface.canonicalize(q)
    if p_c == q_c:
        return PointClass(BASE_POINT, 0, False, None, 0.0, None)
    if ms is None:
        ms = minimizers(surface, q_c, p_c)
    tol_len = default_tol_len(surface)
    if ms.continuum or ms.multiplicity >= 2:
        return PointClass(
            ORDINARY_CUT, ms.multiplicity, ms.continuum, None, ms.distance, ms.second_length
        )
    length = ms.distance
    gap_ok = ms.second_length is None or ms.second_length > length + _MARGIN_FACTOR * tol_len
    zero = ms.first_conjugate_zero()
    if zero is not None and abs(zero - length) <= _CONJ_BAND * length:
        label = SINGULAR_CUT if gap_ok else INCONCLUSIVE
    elif zero is None or zero > length * (1.0 + _CONJ_BAND):
        label = REGULAR if gap_ok else INCONCLUSIVE
    else:
        label = INCONCLUSIVE
    return PointClass(label, 1, False, zero, length, ms.second_length)


def directional_derivative(
    surface: SurfaceModel, p: SurfacePoint, q: SurfacePoint, v: TangentVector
) -> float:
    """One-sided derivative of d_p at q along v: min over minimizing dirs of -<v, xi>."""
    q_c = surface.canonicalize(q)
    ms = minimizers(surface, q_c, p)
    if not ms.directions:
        raise UndefinedAtBasePoint("directional derivative undefined at the base point")
    vals = [-surface.inner(q_c, v, xi) for xi in ms.directions]
    best = min(vals)
    if ms.continuum:
        # rotational continua are full circles; refine over the family angle
        g = surface.metric_at(q_c)
        e1 = TangentVector(1.0 / math.sqrt(g[0, 0]), 0.0)
        e2 = TangentVector(0.0, 1.0 / math.sqrt(g[1, 1]))

        def f(ang):
            xi = TangentVector(
                math.cos(ang) * e1.a + math.sin(ang) * e2.a,
                math.cos(ang) * e1.b + math.sin(ang) * e2.b,
            )
            return -surface.inner(q_c, v, xi)

        lo, hi = 0.0, 2.0 * math.pi
        xs = np.linspace(lo, hi, 128, endpoint=False)
        k = int(np.argmin([f(x) for x in xs]))
        a, b = xs[k] - 2 * math.pi / 128, xs[k] + 2 * math.pi / 128
        for _ in range(60):
            m1 = a + (b - a) * 0.381966
            m2 = b - (b - a) * 0.381966
            if f(m1) <= f(m2):
                b = m2
            else:
                a = m1
        best = min(best, f(0.5 * (a + b)))
    return float(best)


def gradient_dp(surface: SurfaceModel, p: SurfacePoint, q: SurfacePoint) -> TangentVector:
    """Gradient of d_p at q (terminal velocity of the unique minimizer from p)."""
    q_c = surface.canonicalize(q)
    p_c = surface.canonicalize(p)
    if q_c == p_c:
        raise UndefinedAtBasePoint("gradient undefined at the base point")
    ms = minimizers(surface, q_c, p_c)
    cls = classify_point(surface, p_c, q_c, ms=ms)
    if cls.label == ORDINARY_CUT:
        raise NotDifferentiable("d_p is not differentiable at an ordinary cut point")
    xi = ms.directions[0]
    return TangentVector(-xi.a, -xi.b)
