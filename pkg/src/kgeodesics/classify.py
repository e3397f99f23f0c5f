"""1/k-geodesic verdicts, minimal k, Grove-Shiohama criticality, theorem checks.

A closed geodesic is a 1/k-geodesic when d(gamma(t), gamma(t + 2*pi/k)) equals
length/k for every t; the verdict is *strict* when some such pair is a pair of
cut points and *openly* otherwise.  Grove-Shiohama criticality of q for d_p is
tested through its two-dimensional equivalent: the maximum angular gap between
consecutive minimizing directions at q is at most pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import distance as dist
from . import energy as en
from . import geodesic as geo
from .errors import HypothesisUnmet
from .surfaces import (
    FlatTorus,
    SurfaceModel,
    SurfacePoint,
    TangentVector,
    _Spheroid,
)

NOT_K_GEODESIC = "NotKGeodesic"
OPENLY_K = "OpenlyK"
STRICT_K = "StrictK"
INCONCLUSIVE_K = "InconclusiveK"


# ---------------------------------------------------------------------------
# 1/k-geodesic verdicts
# ---------------------------------------------------------------------------


@dataclass
class KGeodesicReport:
    k: int
    verdict: str
    defect_max: float          # max over t of length/k - d(gamma(t), gamma(t+2pi/k))
    witness_t: float           # rotation parameter achieving the defect
    cut_witness_t: float | None
    length: float
    tol: float
    n_samples: int

    @property
    def is_k_geodesic(self) -> bool:
        return self.verdict in (OPENLY_K, STRICT_K)

    def to_csv_row(self) -> str:
        cw = "" if self.cut_witness_t is None else f"{self.cut_witness_t:.12g}"
        return (
            f"{self.k},{self.verdict},{self.defect_max:.12g},{self.witness_t:.12g},"
            f"{cw},{self.length:.12g}"
        )


def _pair_data(surface, gamma, k, t):
    p = gamma.point(t)
    q = gamma.point(t + 2.0 * math.pi / k)
    ms = dist.minimizers(surface, p, q)
    return p, q, ms


def is_k_geodesic(
    surface: SurfaceModel,
    gamma: geo.ClosedGeodesic,
    k: int,
    n_grid: int = 128,
    tol: float | None = None,
    refine_rounds: int = 2,
) -> KGeodesicReport:
    """Verdict on whether gamma minimizes on every subinterval of length L/k."""
    if k < 2:
        raise ValueError("k must be >= 2")
    length = gamma.length
    target = length / k
    tol = 1e-5 * length if tol is None else tol
    ts = list(np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False))
    cache: dict[float, tuple] = {}

    def sample(t):
        if t not in cache:
            p, q, ms = _pair_data(surface, gamma, k, t)
            cache[t] = (target - ms.distance, ms, p, q)
        return cache[t]

    for t in ts:
        sample(t)
    # adaptive bisection refinement near failures
    for _ in range(refine_rounds):
        ordered = sorted(cache.keys())
        new_ts = []
        for i, t in enumerate(ordered):
            defect = cache[t][0]
            if defect > 0.1 * tol:
                t_prev = ordered[i - 1] if i > 0 else ordered[-1] - 2.0 * math.pi
                t_next = ordered[(i + 1) % len(ordered)] + (2.0 * math.pi if i + 1 == len(ordered) else 0.0)
                new_ts.extend([(t + t_prev) / 2.0 % (2.0 * math.pi), (t + t_next) / 2.0 % (2.0 * math.pi)])
        for t in new_ts:
            sample(t)
    defect_max = -math.inf
    witness = 0.0
    for t, (defect, ms, p, q) in cache.items():
        if defect > defect_max:
            defect_max = defect
            witness = t
    if defect_max > tol:
        return KGeodesicReport(
            k, NOT_K_GEODESIC, defect_max, witness, None, length, tol, len(cache)
        )
    # strict vs openly: look for a cut pair at the 1/k spacing
    cut_t = None
    inconclusive = False
    min_gap = math.inf
    min_gap_t = None
    for t, (defect, ms, p, q) in sorted(cache.items()):
        cls = dist.classify_point(surface, p, q, ms=ms)
        if cls.is_cut:
            cut_t = t
            break
        if cls.label == dist.INCONCLUSIVE:
            inconclusive = True
        if ms.second_length is not None:
            gap = ms.second_length - ms.distance
            if gap < min_gap:
                min_gap = gap
                min_gap_t = t
    if cut_t is None and min_gap_t is not None and min_gap < 0.05 * length:
        # isolated cut events (e.g. the over-under midpoints) sit at the minimum
        # of the second-shortest gap; refine it by golden-section search
        t = _refine_gap_minimum(surface, gamma, k, min_gap_t, 2.0 * math.pi / n_grid)
        p, q, ms = _pair_data(surface, gamma, k, t)
        cls = dist.classify_point(surface, p, q, ms=ms)
        if cls.is_cut:
            cut_t = t
        elif cls.label == dist.INCONCLUSIVE:
            inconclusive = True
    if cut_t is not None:
        return KGeodesicReport(k, STRICT_K, defect_max, witness, cut_t, length, tol, len(cache))
    if inconclusive:
        return KGeodesicReport(k, INCONCLUSIVE_K, defect_max, witness, None, length, tol, len(cache))
    return KGeodesicReport(k, OPENLY_K, defect_max, witness, None, length, tol, len(cache))


def _refine_gap_minimum(surface, gamma, k, t0, span):
    def gap(t):
        _, _, ms = _pair_data(surface, gamma, k, t)
        if ms.multiplicity >= 2 or ms.continuum:
            return 0.0
        if ms.second_length is None:
            return math.inf
        return ms.second_length - ms.distance

    a, b = t0 - span, t0 + span
    for _ in range(40):
        m1 = a + 0.381966 * (b - a)
        m2 = b - 0.381966 * (b - a)
        if gap(m1) <= gap(m2):
            b = m2
        else:
            a = m1
        if b - a < 1e-10:
            break
    return 0.5 * (a + b) % (2.0 * math.pi)


def minimal_k(
    surface: SurfaceModel,
    gamma: geo.ClosedGeodesic,
    k_max: int = 64,
    n_grid: int = 128,
    tol: float | None = None,
):
    """Smallest k in [2, k_max] for which gamma is a 1/k-geodesic, or None.

    Binary search is valid because minimizing segments have minimizing
    subsegments, so the 1/k property is monotone in k.
    """

    def ok(k):
        return is_k_geodesic(surface, gamma, k, n_grid=n_grid, tol=tol).is_k_geodesic

    if not ok(k_max):
        return None
    lo, hi = 2, k_max  # invariant: ok(hi) holds
    if ok(2):
        return 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Grove-Shiohama criticality
# ---------------------------------------------------------------------------


@dataclass
class GSCriticalReport:
    p: SurfacePoint
    q: SurfacePoint
    critical: bool
    max_gap: float
    gaps: list
    witness: TangentVector | None      # a criterion-violating direction when not critical
    multiplicity: int
    continuum: bool


def _direction_angles(surface, q, directions):
    g = surface.metric_at(q)
    s0, s1 = math.sqrt(g[0, 0]), math.sqrt(g[1, 1])
    return sorted(math.atan2(d.b * s1, d.a * s0) % (2.0 * math.pi) for d in directions)


def gs_critical(
    surface: SurfaceModel, p: SurfacePoint, q: SurfacePoint, tol_angle: float = 1e-6
) -> GSCriticalReport:
    """Criticality of q for d_p: every direction within pi/2 of some minimizer.

    In two dimensions this is equivalent to the maximum angular gap between
    consecutive minimizing directions being at most pi.
    """
    q_c = surface.canonicalize(q)
    ms = dist.minimizers(surface, q_c, p)
    angles = _direction_angles(surface, q_c, ms.directions)
    n = len(angles)
    if n == 0:
        raise ValueError("q equals p; criticality undefined at the base point")
    gaps = []
    for i in range(n):
        nxt = angles[(i + 1) % n] + (2.0 * math.pi if i + 1 == n else 0.0)
        gaps.append(nxt - angles[i])
    max_gap = max(gaps)
    critical = max_gap <= math.pi + tol_angle
    witness = None
    if not critical:
        i = int(np.argmax(gaps))
        mid = angles[i] + 0.5 * gaps[i]
        g = surface.metric_at(q_c)
        witness = TangentVector(
            math.cos(mid) / math.sqrt(g[0, 0]), math.sin(mid) / math.sqrt(g[1, 1])
        )
    return GSCriticalReport(
        p=surface.canonicalize(p),
        q=q_c,
        critical=critical,
        max_gap=max_gap,
        gaps=gaps,
        witness=witness,
        multiplicity=ms.multiplicity,
        continuum=ms.continuum,
    )


def _hull_min_norm(vectors) -> float:
    """Min norm over the convex hull of 2D points (vertices + edge projections)."""
    pts = [np.asarray(v, float) for v in vectors]
    if not pts:
        return math.inf
    best = min(float(np.linalg.norm(v)) for v in pts)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = pts[j] - pts[i]
            dd = float(d @ d)
            if dd < 1e-30:
                continue
            t = -float(pts[i] @ d) / dd
            if 0.0 < t < 1.0:
                best = min(best, float(np.linalg.norm(pts[i] + t * d)))
    return best


def enumerate_gs_critical(
    surface: SurfaceModel, p: SurfacePoint, grid_n: int = 32, dedupe_tol: float | None = None
):
    """Scan the chart for Grove-Shiohama critical points of d_p and refine them."""
    if grid_n < 16:
        raise ValueError("grid_n must be >= 16")
    p = surface.canonicalize(p)
    if isinstance(surface, FlatTorus):
        us = np.linspace(0, surface.a, grid_n, endpoint=False)
        vs = np.linspace(0, surface.b, grid_n, endpoint=False)
        cell = math.hypot(surface.a / grid_n, surface.b / grid_n)
    elif isinstance(surface, _Spheroid):
        us = np.linspace(0.05, math.pi - 0.05, grid_n)
        vs = np.linspace(0, 2 * math.pi, grid_n, endpoint=False)
        cell = 2.0 * surface.diameter_bound() / grid_n
    else:
        raise TypeError("critical-point enumeration supports torus and spheroid charts")
    candidates = []
    for u in us:
        for v in vs:
            q = surface.canonicalize(SurfacePoint(float(u), float(v)))
            if q == p:
                continue
            ms = dist.minimizers(surface, q, p)
            near_tie = ms.multiplicity >= 2 or ms.continuum or (
                ms.second_length is not None and ms.second_length - ms.distance < 3.0 * cell
            )
            if near_tie:
                candidates.append(q)
    found = []
    dedupe = dedupe_tol if dedupe_tol is not None else max(2.0 * cell, 1e-6)
    for q0 in candidates:
        q_ref = _refine_critical(surface, p, q0, cell)
        if q_ref is None:
            continue
        rep = gs_critical(surface, p, q_ref)
        if not rep.critical:
            continue
        if any(surface.gap(q_ref, f) < dedupe for f in found):
            continue
        found.append(q_ref)
    found.sort(key=lambda s: (round(s.u, 9), round(s.v, 9)))
    return found


def _refine_critical(surface, p, q0, cell):
    """Compass-search refinement of a candidate toward a critical point."""

    def score(q):
        try:
            rep = gs_critical(surface, p, q)
        except ValueError:
            return math.inf
        if rep.multiplicity == 1 and not rep.continuum:
            ms = dist.minimizers(surface, surface.canonicalize(q), p)
            gap = (
                ms.second_length - ms.distance
                if ms.second_length is not None
                else math.inf
            )
            return 1.0 + gap
        excess = max(0.0, rep.max_gap - math.pi)
        ms = dist.minimizers(surface, surface.canonicalize(q), p)
        gm = surface.metric_at(surface.canonicalize(q))
        s0, s1 = math.sqrt(gm[0, 0]), math.sqrt(gm[1, 1])
        dirs = [np.array([d.a * s0, d.b * s1]) for d in ms.directions]
        return _hull_min_norm(dirs) + excess

    q = surface.canonicalize(q0)
    val = score(q)
    step = cell
    for _ in range(300):
        if val < 1e-9:
            break
        improved = False
        for (da, db) in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            cand = surface.canonicalize(SurfacePoint(q.u + da, q.v + db, q.sheet))
            v2 = score(cand)
            if v2 < val - 1e-15:
                q, val = cand, v2
                improved = True
        if not improved:
            step *= 0.5
            if step < 1e-9:
                break
    return q if val < 1e-6 else None


def balanced_implies_gs(surface: SurfaceModel, x) -> bool:
    """Both members of a balanced 2-tuple are mutually Grove-Shiohama critical."""
    tp = en.as_tuple_point(surface, x)
    if tp.k != 2:
        raise ValueError("this check applies to 2-tuples")
    p, q = tp.points
    return gs_critical(surface, p, q).critical and gs_critical(surface, q, p).critical


# ---------------------------------------------------------------------------
# Intersection theorem verification
# ---------------------------------------------------------------------------


@dataclass
class IntersectionCheck:
    candidate_index: int
    t_on_gamma: float
    s_on_candidate: float
    separation: float
    length_ok: bool
    half_geodesic: bool
    passes_opposite: bool | None
    opposite_separation: float | None
    length_match: bool | None


@dataclass
class TheoremReport:
    curvature_floor: float
    length_threshold: float       # pi / sqrt(H)
    gamma_length: float
    checks: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _closed_geodesic_points(gamma: geo.ClosedGeodesic, n: int):
    ts = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return ts, [gamma.point(float(t)) for t in ts]


def _find_intersections(surface, gamma, sigma, n=192, tol=1e-4):
    ts, pg = _closed_geodesic_points(gamma, n)
    ss, ps = _closed_geodesic_points(sigma, n)
    gaps = np.array([[surface.gap(a, b) for b in ps] for a in pg])
    coarse = max(gamma.length, sigma.length) / n * 1.5
    hits = []
    for i in range(n):
        for j in range(n):
            if gaps[i, j] < coarse:
                local = True
                for di, dj in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                    if gaps[(i + di) % n, (j + dj) % n] < gaps[i, j]:
                        local = False
                        break
                if local:
                    hits.append((float(ts[i]), float(ss[j])))
    refined = []
    for t0, s0 in hits:
        t, s, d = _refine_intersection(surface, gamma, sigma, t0, s0, 2.0 * math.pi / n)
        if d <= tol and not any(
            min(abs(t - t1), 2 * math.pi - abs(t - t1)) < 1e-3
            and min(abs(s - s1), 2 * math.pi - abs(s - s1)) < 1e-3
            for t1, s1, _ in refined
        ):
            refined.append((t, s, d))
    return refined


def _refine_intersection(surface, gamma, sigma, t0, s0, span):
    t, s = t0, s0
    step = span
    val = surface.gap(gamma.point(t), sigma.point(s))
    for _ in range(200):
        improved = False
        for (dt, ds) in ((step, 0), (-step, 0), (0, step), (0, -step)):
            v2 = surface.gap(gamma.point(t + dt), sigma.point(s + ds))
            if v2 < val:
                t, s, val = t + dt, s + ds, v2
                improved = True
        if not improved:
            step *= 0.5
            if step < 1e-12:
                break
    return t % (2 * math.pi), s % (2 * math.pi), val


def verify_theorem_behavior(
    surface: SurfaceModel,
    gamma: geo.ClosedGeodesic,
    candidates,
    curvature_floor: float | None = None,
    intersect_tol: float = 1e-4,
    length_tol_rel: float = 1e-5,
    half_flags=None,
) -> TheoremReport:
    """Check the curvature-pinched intersection conclusions on concrete geodesics.

    For each candidate that intersects gamma: its length must be at least
    l(gamma); candidates that are themselves half-geodesics must also pass
    through the point half a period along gamma from the intersection and
    match gamma's length.
    """
    if curvature_floor is None:
        if not isinstance(surface, _Spheroid):
            raise ValueError("curvature_floor is required for non-spheroid surfaces")
        curvature_floor = surface.curvature_bounds()[0]
    threshold = math.pi / math.sqrt(curvature_floor)
    report = TheoremReport(
        curvature_floor=curvature_floor,
        length_threshold=threshold,
        gamma_length=gamma.length,
    )
    if gamma.length <= threshold:
        raise HypothesisUnmet(
            f"half-geodesic length {gamma.length:.6g} is not above pi/sqrt(H) = {threshold:.6g}"
        )
    tol_len = length_tol_rel * gamma.length
    for idx, sigma in enumerate(candidates):
        if half_flags is not None:
            is_half = bool(half_flags[idx])
        else:
            is_half = is_k_geodesic(surface, sigma, 2, n_grid=48).is_k_geodesic
        for (t, s, sep) in _find_intersections(surface, gamma, sigma, tol=intersect_tol):
            length_ok = sigma.length >= gamma.length - tol_len
            passes_opp = None
            opp_sep = None
            len_match = None
            if is_half:
                target = gamma.point(t + math.pi)
                best = math.inf
                s_best = 0.0
                for sc in np.linspace(0, 2 * math.pi, 256, endpoint=False):
                    gsep = surface.gap(sigma.point(float(sc)), target)
                    if gsep < best:
                        best = gsep
                        s_best = float(sc)
                best = _refine_point_pass(surface, sigma, s_best, target)
                passes_opp = best <= intersect_tol
                opp_sep = best
                len_match = abs(sigma.length - gamma.length) <= tol_len
            check = IntersectionCheck(
                candidate_index=idx,
                t_on_gamma=t,
                s_on_candidate=s,
                separation=sep,
                length_ok=length_ok,
                half_geodesic=is_half,
                passes_opposite=passes_opp,
                opposite_separation=opp_sep,
                length_match=len_match,
            )
            report.checks.append(check)
            if not length_ok or (is_half and (not passes_opp or not len_match)):
                report.violations.append(check)
    return report


def _refine_point_pass(surface, sigma, s0, target):
    s = s0
    step = 0.05
    val = surface.gap(sigma.point(s), target)
    for _ in range(200):
        improved = False
        for ds in (step, -step):
            v2 = surface.gap(sigma.point(s + ds), target)
            if v2 < val:
                s, val = s + ds, v2
                improved = True
        if not improved:
            step *= 0.5
            if step < 1e-13:
                break
    return val

