"""Uniform energy on k-tuples, balanced points, and their associated geodesics.

The uniform energy of a k-tuple is E = k * sum_i d(x_i, x_{i+1})^2 (indices
mod k).  A tuple is balanced when consecutive spacings are equal and at every
vertex some minimizing direction toward the next point is the exact opposite
of a minimizing direction toward the previous one; the antipodality residual
used here is the metric norm ||xi + eta|| minimized over the two direction
sets, which vanishes exactly at a balanced vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import distance as dist
from . import geodesic as geo
from .errors import EnumerationBound, OrdinaryPairError
from .surfaces import (
    BACK,
    FRONT,
    DoubledPolygon,
    SurfaceModel,
    SurfacePoint,
    TangentVector,
)

NOT_BALANCED = "NotBalanced"
SMOOTH_BALANCED = "SmoothBalanced"
UNIQUELY_BALANCED = "UniquelyBalanced"
NON_SMOOTH_BALANCED = "NonSmoothBalanced"
CONE_DEGENERATE = "ConeDegenerate"

_VEL_ANGLE_TOL = 1e-4


def default_tol_spacing(surface: SurfaceModel) -> float:
    return 1e-6 * surface.diameter_bound()


DEFAULT_TOL_ANTIPODAL = 1e-5


# ---------------------------------------------------------------------------
# Tuples
# ---------------------------------------------------------------------------


class TuplePoint:
    """Ordered k-tuple of surface points with cached consecutive minimizer sets."""

    def __init__(self, surface: SurfaceModel, points):
        pts = tuple(surface.canonicalize(p) for p in points)
        if len(pts) < 2:
            raise ValueError("a tuple point needs k >= 2 entries")
        self.surface = surface
        self.points = pts
        self._pairs: dict[int, dist.MinimizerSet] = {}

    @property
    def k(self) -> int:
        return len(self.points)

    def pair_set(self, i: int) -> dist.MinimizerSet:
        i %= self.k
        if i not in self._pairs:
            self._pairs[i] = dist.minimizers(
                self.surface, self.points[i], self.points[(i + 1) % self.k]
            )
        return self._pairs[i]

    def pair_distance(self, i: int) -> float:
        return self.pair_set(i).distance

    def forward_directions(self, i: int):
        """Minimizing directions at x_i toward x_{i+1}."""
        return self.pair_set(i).directions

    def backward_directions(self, i: int):
        """Minimizing directions at x_i toward x_{i-1}."""
        return self.pair_set((i - 1) % self.k).far_directions

    def min_pair_distance(self) -> float:
        return min(self.pair_distance(i) for i in range(self.k))

    def with_points(self, points) -> "TuplePoint":
        return TuplePoint(self.surface, points)

    def replace(self, i: int, point: SurfacePoint) -> "TuplePoint":
        pts = list(self.points)
        pts[i % self.k] = point
        return TuplePoint(self.surface, pts)

    def __repr__(self):
        inner = ", ".join(f"({p.u:.6g},{p.v:.6g},{p.sheet[0]})" for p in self.points)
        return f"TuplePoint[{inner}]"


def as_tuple_point(surface: SurfaceModel, x) -> TuplePoint:
    return x if isinstance(x, TuplePoint) else TuplePoint(surface, x)


# ---------------------------------------------------------------------------
# Energy and gradient
# ---------------------------------------------------------------------------


def uniform_energy(surface: SurfaceModel, x) -> float:
    """E = k * sum of squared consecutive distances (cyclic)."""
    tp = as_tuple_point(surface, x)
    return tp.k * sum(tp.pair_distance(i) ** 2 for i in range(tp.k))


def energy_gradient(surface: SurfaceModel, x):
    """Chain-rule gradient of the uniform energy; one chart tangent per vertex.

    Raises OrdinaryPairError when a consecutive pair is an ordinary cut pair
    (multiple minimizers), where the component distance is not differentiable.
    """
    tp = as_tuple_point(surface, x)
    k = tp.k
    for i in range(k):
        ms = tp.pair_set(i)
        if ms.continuum or ms.multiplicity >= 2:
            raise OrdinaryPairError(i)
    grads = []
    for i in range(k):
        d_prev = tp.pair_distance((i - 1) % k)
        d_next = tp.pair_distance(i)
        eta = tp.backward_directions(i)[0]
        xi = tp.forward_directions(i)[0]
        # grad d_{x_{i-1}}(x_i) = -eta, grad d_{x_{i+1}}(x_i) = -xi
        ga = -2.0 * k * (d_prev * eta.a + d_next * xi.a)
        gb = -2.0 * k * (d_prev * eta.b + d_next * xi.b)
        grads.append(TangentVector(ga, gb))
    return grads


def gradient_norm(surface: SurfaceModel, tp: TuplePoint, grads) -> float:
    return math.sqrt(
        sum(surface.inner(tp.points[i], g, g) for i, g in enumerate(grads))
    )


# ---------------------------------------------------------------------------
# Balance test
# ---------------------------------------------------------------------------


@dataclass
class BalanceReport:
    spacing_residual: float
    antipodal_residual: float
    classification: str
    uniquely: bool
    matched: list                      # per-vertex (xi, eta) achieving the residual
    cut_mask: list                     # per-pair bool: pair (x_i, x_{i+1}) is a cut pair
    ordinary_mask: list                # per-pair bool: ordinary cut pair
    cone_vertices: list                # indices of cone-point vertices (polygons)
    tol_spacing: float
    tol_antipodal: float
    distances: list

    @property
    def balanced(self) -> bool:
        return self.classification not in (NOT_BALANCED,)

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "classification": self.classification,
                "uniquely": self.uniquely,
                "spacing_residual": self.spacing_residual,
                "antipodal_residual": self.antipodal_residual,
                "cut_mask": self.cut_mask,
                "distances": self.distances,
            },
            sort_keys=True,
        )


def _pair_distance_allow_cones(surface: SurfaceModel, tp: TuplePoint, i: int) -> float:
    """Consecutive pair distance, usable even when an endpoint is a cone point."""
    a = tp.points[i]
    b = tp.points[(i + 1) % tp.k]
    if isinstance(surface, DoubledPolygon) and (
        surface.is_cone_point(a) or surface.is_cone_point(b)
    ):
        recs = dist._polygon_paths(
            surface,
            np.array([a.u, a.v]),
            dist._polygon_point_sheets(surface, a),
            np.array([b.u, b.v]),
            dist._polygon_point_sheets(surface, b),
            12,
            max(1e-9, 1e-6 * surface.polygon_diameter()),
        )
        return recs[0][0]
    return tp.pair_distance(i)


def _cone_coordinate(poly: DoubledPolygon, vi: int, w: np.ndarray, sheet: str):
    """Angle of a direction around the cone at vertex vi, in [0, 2A)."""
    n = poly.n_edges
    v = poly.vertices
    u_b = v[(vi + 1) % n] - v[vi]
    u_b = u_b / np.linalg.norm(u_b)
    a_int = poly.interior_angle(vi)
    ang = math.atan2(
        float(u_b[0]) * float(w[1]) - float(u_b[1]) * float(w[0]), float(np.dot(u_b, w))
    )
    ang = min(max(ang, 0.0), a_int)  # clamp into the wedge
    if sheet == FRONT:
        return ang
    return 2.0 * a_int - ang


def _cone_vertex_deficit(poly: DoubledPolygon, tp: TuplePoint, i: int):
    """Cone-splitting deficit at a cone-point vertex: both parts must be >= A."""
    zq = np.array([tp.points[i].u, tp.points[i].v])
    vi = poly.vertex_index(zq)
    a_int = poly.interior_angle(vi)
    nxt = np.array([tp.points[(i + 1) % tp.k].u, tp.points[(i + 1) % tp.k].v])
    prv = np.array([tp.points[(i - 1) % tp.k].u, tp.points[(i - 1) % tp.k].v])
    slack = max(1e-9, 1e-6 * poly.polygon_diameter())
    best = math.inf
    recs_f = dist._polygon_paths(
        poly, zq, (FRONT, BACK), nxt, dist._polygon_point_sheets(poly, tp.surface.canonicalize(tp.points[(i + 1) % tp.k])),
        12, slack,
    )
    recs_b = dist._polygon_paths(
        poly, zq, (FRONT, BACK), prv, dist._polygon_point_sheets(poly, tp.surface.canonicalize(tp.points[(i - 1) % tp.k])),
        12, slack,
    )
    dmin_f = recs_f[0][0]
    dmin_b = recs_b[0][0]
    for rf in recs_f:
        if rf[0] > dmin_f + slack:
            continue
        cf = _cone_coordinate(poly, vi, rf[2], rf[1])
        for rb in recs_b:
            if rb[0] > dmin_b + slack:
                continue
            cb = _cone_coordinate(poly, vi, rb[2], rb[1])
            delta = abs(cf - cb) % (2.0 * a_int)
            split_min = min(delta, 2.0 * a_int - delta)
            best = min(best, max(0.0, a_int - split_min))
    return best


def balance_test(
    surface: SurfaceModel,
    x,
    tol_spacing: float | None = None,
    tol_antipodal: float | None = None,
    classify_cuts: bool | None = None,
) -> BalanceReport:
    """Spacing/antipodality residuals, balance verdict, and cut-pair classification.

    Cut-pair classification (which may require Jacobi integrations) runs only
    for balanced tuples unless ``classify_cuts`` forces it either way.
    """
    tp = as_tuple_point(surface, x)
    k = tp.k
    tol_spacing = default_tol_spacing(surface) if tol_spacing is None else tol_spacing
    tol_antipodal = DEFAULT_TOL_ANTIPODAL if tol_antipodal is None else tol_antipodal
    cone_vertices = [
        i for i in range(k) if surface.is_cone_point(tp.points[i])
    ]
    ds = [_pair_distance_allow_cones(surface, tp, i) for i in range(k)]
    if min(ds) <= 0.0:
        raise ValueError("balance test requires pairwise-distinct consecutive points")
    spacing = max(abs(ds[i - 1] - ds[i]) for i in range(k))
    antip = 0.0
    matched = []
    for i in range(k):
        if i in cone_vertices:
            deficit = _cone_vertex_deficit(surface, tp, i)  # type: ignore[arg-type]
            antip = max(antip, deficit)
            matched.append(None)
            continue
        fwd = tp.forward_directions(i)
        bwd = tp.backward_directions(i)
        best = math.inf
        best_pair = None
        p_i = tp.points[i]
        for xi in fwd:
            for eta in bwd:
                s = TangentVector(xi.a + eta.a, xi.b + eta.b)
                r = surface.norm(p_i, s)
                if r < best:
                    best = r
                    best_pair = (xi, eta)
        antip = max(antip, best)
        matched.append(best_pair)
    balanced = spacing <= tol_spacing and antip <= tol_antipodal
    do_classify = balanced if classify_cuts is None else classify_cuts
    cut_mask = []
    ordinary_mask = []
    for i in range(k):
        if not do_classify or i in cone_vertices or (i + 1) % k in cone_vertices:
            cut_mask.append(False)
            ordinary_mask.append(False)
            continue
        ms = tp.pair_set(i)
        cls = dist.classify_point(
            surface, tp.points[(i + 1) % k], tp.points[i], ms=ms
        )
        cut_mask.append(cls.is_cut)
        ordinary_mask.append(cls.label == dist.ORDINARY_CUT)
    uniquely = balanced and not any(ordinary_mask)
    if cone_vertices:
        classification = CONE_DEGENERATE
    elif not balanced:
        classification = NOT_BALANCED
    elif not any(cut_mask):
        classification = SMOOTH_BALANCED
    elif not any(ordinary_mask):
        classification = UNIQUELY_BALANCED
    else:
        classification = NON_SMOOTH_BALANCED
    return BalanceReport(
        spacing_residual=spacing,
        antipodal_residual=antip,
        classification=classification,
        uniquely=uniquely,
        matched=matched,
        cut_mask=cut_mask,
        ordinary_mask=ordinary_mask,
        cone_vertices=cone_vertices,
        tol_spacing=tol_spacing,
        tol_antipodal=tol_antipodal,
        distances=ds,
    )


# ---------------------------------------------------------------------------
# Balanced-point search
# ---------------------------------------------------------------------------


@dataclass
class SearchOptions:
    max_iter: int = 10000
    tol_spacing: float | None = None
    tol_antipodal: float | None = None
    collapse_tol: float = 1e-6
    near_antipodal: float = 0.1     # residual level that triggers the polish phase
    near_spacing_rel: float = 0.1   # spacing residual relative to the mean distance
    residual_step0: float | None = None
    residual_sweeps: int = 400
    keep_trace: bool = False


@dataclass
class SearchResult:
    status: str                 # converged | collapsed | stalled
    tuple_point: TuplePoint
    report: BalanceReport | None
    iterations: int
    energy: float
    trace: list = field(default_factory=list)

    def trace_csv(self) -> str:
        lines = ["iter,E,spacing_residual,antipodal_residual"]
        for row in self.trace:
            lines.append(",".join(f"{v:.12g}" for v in row))
        return "\n".join(lines) + "\n"


def _move(surface, tp: TuplePoint, vecs, lam):
    pts = [
        surface.canonicalize(
            SurfacePoint(p.u + lam * w.a, p.v + lam * w.b, p.sheet)
        )
        for p, w in zip(tp.points, vecs)
    ]
    return TuplePoint(surface, pts)


def _residual_value(surface, tp, tol_s, tol_a):
    try:
        rep = balance_test(surface, tp, tol_s, tol_a)
    except ValueError:
        return math.inf, None
    return rep.spacing_residual**2 + rep.antipodal_residual**2, rep


def _residual_phase(surface, tp, opts: SearchOptions, it0, trace):
    tol_s = default_tol_spacing(surface) if opts.tol_spacing is None else opts.tol_spacing
    tol_a = DEFAULT_TOL_ANTIPODAL if opts.tol_antipodal is None else opts.tol_antipodal
    step = opts.residual_step0 or 1e-2 * surface.diameter_bound()
    val, rep = _residual_value(surface, tp, tol_s, tol_a)
    it = it0
    for _ in range(opts.residual_sweeps):
        if rep is not None and rep.balanced:
            return SearchResult("converged", tp, rep, it, uniform_energy(surface, tp), trace)
        if tp.min_pair_distance() < opts.collapse_tol:
            return SearchResult("collapsed", tp, rep, it, uniform_energy(surface, tp), trace)
        improved = False
        for i in range(tp.k):
            for (da, db) in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
                p = tp.points[i]
                cand = tp.replace(
                    i, surface.canonicalize(SurfacePoint(p.u + da, p.v + db, p.sheet))
                )
                v2, r2 = _residual_value(surface, cand, tol_s, tol_a)
                if v2 < val - 1e-18:
                    tp, val, rep = cand, v2, r2
                    improved = True
        it += 1
        if opts.keep_trace and rep is not None:
            trace.append(
                (it, uniform_energy(surface, tp), rep.spacing_residual, rep.antipodal_residual)
            )
        if not improved:
            step *= 0.5
            if step < 1e-10:
                break
    status = "converged" if (rep is not None and rep.balanced) else "stalled"
    return SearchResult(status, tp, rep, it, uniform_energy(surface, tp), trace)


def find_balanced(surface: SurfaceModel, k: int, seed, options: SearchOptions | None = None) -> SearchResult:
    """Search for a balanced k-tuple near the seed.

    Gradient descent on the uniform energy with backtracking while the
    gradient is defined and large; switches to direct minimization of the
    balance residual (compass search) when an ordinary pair blocks the
    gradient, the step stalls, or the gradient becomes small near a critical
    point.  Collapsing tuples (consecutive distance below the collapse
    tolerance) terminate with status ``collapsed`` -- the trivial class.
    """
    opts = options or SearchOptions()
    tp = as_tuple_point(surface, seed)
    if tp.k != k:
        raise ValueError(f"seed has k={tp.k}, expected {k}")
    tol_s = default_tol_spacing(surface) if opts.tol_spacing is None else opts.tol_spacing
    tol_a = DEFAULT_TOL_ANTIPODAL if opts.tol_antipodal is None else opts.tol_antipodal
    trace: list = []
    energy = uniform_energy(surface, tp)
    for it in range(opts.max_iter):
        try:
            rep = balance_test(surface, tp, tol_s, tol_a)
        except ValueError:
            return SearchResult("collapsed", tp, None, it, energy, trace)
        if opts.keep_trace:
            trace.append((it, energy, rep.spacing_residual, rep.antipodal_residual))
        if rep.balanced:
            return SearchResult("converged", tp, rep, it, energy, trace)
        if tp.min_pair_distance() < opts.collapse_tol:
            return SearchResult("collapsed", tp, rep, it, energy, trace)
        mean_d = sum(rep.distances) / k
        near = (
            rep.antipodal_residual < opts.near_antipodal
            and rep.spacing_residual < opts.near_spacing_rel * mean_d
        )
        if near:
            # close to the balanced set; energy descent cannot converge to a
            # saddle, so polish by minimizing the balance residual directly
            return _residual_phase(surface, tp, opts, it, trace)
        try:
            grads = energy_gradient(surface, tp)
        except OrdinaryPairError:
            return _residual_phase(surface, tp, opts, it, trace)
        gnorm = gradient_norm(surface, tp, grads)
        lam = 0.1 * tp.min_pair_distance() / max(gnorm, 1e-300)
        accepted = False
        while lam * gnorm > 1e-12:
            cand = _move(surface, tp, [TangentVector(-g.a, -g.b) for g in grads], lam)
            e_new = uniform_energy(surface, cand)
            if e_new < energy - 1e-15:
                tp, energy = cand, e_new
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return _residual_phase(surface, tp, opts, it, trace)
    return SearchResult("stalled", tp, balance_test(surface, tp, tol_s, tol_a), opts.max_iter, energy, trace)


# ---------------------------------------------------------------------------
# Associated geodesics and classes of balanced points
# ---------------------------------------------------------------------------


def associated_geodesics(surface: SurfaceModel, x, report: BalanceReport | None = None, combo_bound: int = 4096):
    """Closed geodesics associated to a balanced tuple (possibly none).

    Enumerates matched direction choices, shoots from x_1 for k*d, and keeps
    trajectories that pass through every vertex with matched velocity
    (angle < 1e-4) before closing up; duplicates are removed.
    """
    tp = as_tuple_point(surface, x)
    if report is None:
        report = balance_test(surface, tp)
    if not report.balanced:
        return []
    k = tp.k
    d_mean = sum(report.distances) / k
    ell = k * d_mean
    tol_pair = max(10.0 * report.antipodal_residual, 10.0 * report.tol_antipodal)
    options = []
    n_combos = 1
    for i in range(k):
        fwd = tp.forward_directions(i)
        bwd = tp.backward_directions(i)
        opts_i = []
        p_i = tp.points[i]
        for xi in fwd:
            for eta in bwd:
                s = TangentVector(xi.a + eta.a, xi.b + eta.b)
                if surface.norm(p_i, s) <= tol_pair:
                    opts_i.append(xi)
        options.append(opts_i)
        n_combos *= max(len(opts_i), 1)
        if n_combos > combo_bound:
            raise EnumerationBound(f"matched combinations exceed {combo_bound}")
    found = []
    pos_tol = max(1e-5 * ell, 1e-9)
    seen_dirs = []
    for xi1 in options[0]:
        if any(
            surface.norm(tp.points[0], TangentVector(xi1.a - s.a, xi1.b - s.b)) < 1e-7
            for s in seen_dirs
        ):
            continue
        seen_dirs.append(xi1)
        try:
            arc = geo.shoot(surface, tp.points[0], xi1, ell)
        except Exception:
            continue
        ok = True
        for j in range(1, k):
            pt, vel = arc.sample_at(j * d_mean)
            if surface.gap(pt, tp.points[j % k]) > pos_tol:
                ok = False
                break
            opts_j = options[j % k]
            if not opts_j:
                ok = False
                break
            ang = min(surface.angle_between(pt, vel, w) for w in opts_j)
            if ang > _VEL_ANGLE_TOL:
                ok = False
                break
        if not ok:
            continue
        try:
            gamma = geo.close_up(surface, arc)
        except Exception:
            continue
        dup = False
        for g0 in found:
            if abs(g0.length - gamma.length) < 1e-7 * ell and _same_geodesic(surface, g0, gamma):
                dup = True
                break
        if not dup:
            found.append(gamma)
    return found


def _same_geodesic(surface, g0: geo.ClosedGeodesic, g1: geo.ClosedGeodesic) -> bool:
    ts = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
    tol = 1e-5 * max(g0.length, 1.0)
    for t in ts:
        p = g1.point(t)
        dmin = min(surface.gap(p, g0.point(s)) for s in np.linspace(0, 2 * math.pi, 64, endpoint=False))
        if dmin > tol:
            return False
    return True


@dataclass
class BalancedClass:
    """S^1 class of balanced tuples rotated along an associated closed geodesic."""

    geodesic: geo.ClosedGeodesic
    k: int
    ts: list
    reports: list
    smooth_class: bool
    non_smooth: bool

    @property
    def energies(self):
        return [
            self.k * sum(d * d for d in rep.distances) for rep in self.reports
        ]


@dataclass
class NotRotating:
    t0: float
    reason: str
    report: BalanceReport | None = None


def build_class(
    surface: SurfaceModel,
    gamma: geo.ClosedGeodesic,
    k: int,
    n_grid: int = 64,
    tol_spacing: float | None = None,
    tol_antipodal: float | None = None,
):
    """Verify the S^1 family of k-tuples rotated along gamma is a balanced class.

    Samples the rotation parameter on a grid (with refinement near failures)
    and requires every sampled tuple to be balanced with gamma associated,
    i.e. the geodesic's own velocities must realize the matching.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    step = 2.0 * math.pi / n_grid
    ts = [j * step for j in range(n_grid)]
    reports = []
    for t in list(ts):
        res = _check_rotation(surface, gamma, k, t, tol_spacing, tol_antipodal)
        if isinstance(res, NotRotating):
            # adaptive refinement: confirm the failure is not a sampling artifact
            for dt in (0.25 * step, -0.25 * step):
                res2 = _check_rotation(surface, gamma, k, t + dt, tol_spacing, tol_antipodal)
                if isinstance(res2, NotRotating):
                    return res2
            return res
        reports.append(res)
    smooth = all(rep.classification == SMOOTH_BALANCED for rep in reports)
    non_smooth = any(
        rep.classification in (NON_SMOOTH_BALANCED, UNIQUELY_BALANCED) and any(rep.cut_mask)
        for rep in reports
    )
    return BalancedClass(
        geodesic=gamma, k=k, ts=ts, reports=reports, smooth_class=smooth, non_smooth=non_smooth
    )


def _check_rotation(surface, gamma, k, t, tol_spacing, tol_antipodal):
    pts = []
    vels = []
    for i in range(k):
        p, v = gamma.evaluate(t + 2.0 * math.pi * i / k)
        pts.append(p)
        vels.append(v)
    if any(surface.is_cone_point(p) for p in pts):
        return NotRotating(t0=t, reason="tuple vertex is a cone point")
    tp = TuplePoint(surface, pts)
    try:
        rep = balance_test(surface, tp, tol_spacing, tol_antipodal)
    except ValueError:
        return NotRotating(t0=t, reason="degenerate tuple")
    if not rep.balanced or rep.classification == CONE_DEGENERATE:
        return NotRotating(t0=t, reason="tuple not balanced", report=rep)
    for i in range(k):
        fwd_set = tp.pair_set(i)
        bwd_set = tp.pair_set((i - 1) % k)
        v = vels[i]
        # continuum sets are full rotational families; every direction belongs
        if not fwd_set.continuum:
            ang_f = min(surface.angle_between(pts[i], v, w) for w in fwd_set.directions)
            if ang_f > _VEL_ANGLE_TOL:
                return NotRotating(
                    t0=t, reason="geodesic velocity not in the minimizer set", report=rep
                )
        if not bwd_set.continuum:
            neg = TangentVector(-v.a, -v.b)
            ang_b = min(
                surface.angle_between(pts[i], neg, w) for w in bwd_set.far_directions
            )
            if ang_b > _VEL_ANGLE_TOL:
                return NotRotating(
                    t0=t, reason="geodesic velocity not in the minimizer set", report=rep
                )
    return rep
