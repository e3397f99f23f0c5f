"""Parameter-family experiments on the oblate ellipsoid family.

The equators of the family x^2 + y^2 + (z/c)^2 = 1 are closed geodesics of
length 2*pi whose cut distance along the equator shrinks with c.  The sweep
locates the threshold c0 at which the equator stops being a 1/3-geodesic,
demonstrates that the smooth balanced classes above c0 persist only as a
non-smooth class at c0, and tabulates the blow-up of the minimal k as c
decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import classify as cl
from . import distance as dist
from . import energy as en
from . import geodesic as geo
from .errors import BadBracket
from .surfaces import EllipsoidOfRevolution, SurfacePoint

EQUATOR_LENGTH = 2.0 * math.pi


@dataclass
class SweepRecord:
    c: float
    cut_distance: float
    equator_length: float
    verdict_k3: str
    minimal_k: int | None
    balanced_class_found: bool
    smooth_class: bool

    def to_csv_row(self) -> str:
        mk = "NotFound" if self.minimal_k is None else str(self.minimal_k)
        return (
            f"{self.c:.12g},{self.cut_distance:.12g},{self.equator_length:.12g},"
            f"{self.verdict_k3},{mk},{int(self.balanced_class_found)},{int(self.smooth_class)}"
        )


def _equator(c: float) -> tuple[EllipsoidOfRevolution, geo.ClosedGeodesic]:
    surface = EllipsoidOfRevolution(c)
    return surface, geo.equator_geodesic(surface)


def equator_cut_distance(c: float, tol_bisect: float = 1e-6, detect: float = 1e-8) -> float:
    """Arc length along the equator at which the equatorial arc stops minimizing.

    Bisection on s of the predicate d(gamma(0), gamma(s)) < s - detect; the
    competing geodesics open only quadratically past the cut, so the detected
    position carries a small positive bias on top of the bisection interval.
    """
    if not (0.0 < c < 1.0):
        raise ValueError("the equator cut-distance sweep expects an oblate family, 0 < c < 1")
    surface = EllipsoidOfRevolution(c)
    q0 = SurfacePoint(math.pi / 2.0, 0.0)

    def stopped(s: float) -> bool:
        d = dist.distance(surface, q0, SurfacePoint(math.pi / 2.0, s))
        return d < s - detect

    lo, hi = 0.05, math.pi - 1e-9
    if stopped(lo):
        raise BadBracket(f"equatorial arc already non-minimizing at s={lo}")
    if not stopped(hi):
        return math.pi
    while hi - lo > tol_bisect:
        mid = 0.5 * (lo + hi)
        if stopped(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def find_c0(bracket=(0.2, 0.99), tol_c: float = 1e-5, **cut_kwargs) -> float:
    """Bisection for the c at which the equator cut distance crosses 2*pi/3."""
    c_lo, c_hi = bracket
    target = 2.0 * math.pi / 3.0
    f_lo = equator_cut_distance(c_lo, **cut_kwargs) - target
    f_hi = equator_cut_distance(c_hi, **cut_kwargs) - target
    if not (f_lo < 0.0 < f_hi):
        raise BadBracket(
            f"cut distance - 2*pi/3 does not change sign on [{c_lo}, {c_hi}] "
            f"({f_lo:.3g}, {f_hi:.3g})"
        )
    while c_hi - c_lo > tol_c:
        mid = 0.5 * (c_lo + c_hi)
        if equator_cut_distance(mid, **cut_kwargs) - target < 0.0:
            c_lo = mid
        else:
            c_hi = mid
    return 0.5 * (c_lo + c_hi)


def sweep_record(c: float, n_grid: int = 16, k_max: int = 64, with_class: bool = True) -> SweepRecord:
    surface, equator = _equator(c)
    cutdist = equator_cut_distance(c)
    rep3 = cl.is_k_geodesic(surface, equator, 3, n_grid=n_grid)
    mk = cl.minimal_k(surface, equator, k_max=k_max, n_grid=n_grid)
    found = False
    smooth = False
    if with_class:
        bc = en.build_class(surface, equator, 3, n_grid=max(8, n_grid // 2))
        found = isinstance(bc, en.BalancedClass)
        smooth = found and bc.smooth_class
    return SweepRecord(
        c=c,
        cut_distance=cutdist,
        equator_length=EQUATOR_LENGTH,
        verdict_k3=rep3.verdict,
        minimal_k=mk,
        balanced_class_found=found,
        smooth_class=smooth,
    )


def sweep_grid(cs, n_grid: int = 16, k_max: int = 64, with_classes: bool = True):
    return [sweep_record(float(c), n_grid=n_grid, k_max=k_max, with_class=with_classes) for c in cs]


@dataclass
class PersistenceReport:
    c_values: list
    c0: float
    smooth_flags: list          # one per c_i
    class_at_c0: bool
    non_smooth_at_c0: bool
    no_variation: bool = False
    details: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            not self.no_variation
            and all(self.smooth_flags)
            and self.class_at_c0
            and self.non_smooth_at_c0
        )


def persistence_experiment(c_sequence, c0: float, k: int = 3, n_grid: int = 12) -> PersistenceReport:
    """Smooth classes above c0 persist only as a non-smooth class at c0.

    ``c_sequence`` must be strictly decreasing toward c0 (all entries above
    c0); a constant/non-decreasing sequence is flagged, not computed.
    """
    cs = [float(c) for c in c_sequence]
    if any(b >= a for a, b in zip(cs, cs[1:])) or not cs:
        return PersistenceReport(cs, c0, [], False, False, no_variation=True)
    smooth_flags = []
    details = []
    for c in cs:
        surface, equator = _equator(c)
        bc = en.build_class(surface, equator, k, n_grid=n_grid)
        is_class = isinstance(bc, en.BalancedClass)
        smooth_flags.append(is_class and bc.smooth_class)
        details.append((c, is_class, is_class and bc.smooth_class))
    surface0, equator0 = _equator(c0)
    bc0 = en.build_class(surface0, equator0, k, n_grid=n_grid)
    class_at_c0 = isinstance(bc0, en.BalancedClass)
    non_smooth_at_c0 = class_at_c0 and bc0.non_smooth and not bc0.smooth_class
    details.append((c0, class_at_c0, class_at_c0 and bc0.smooth_class))
    return PersistenceReport(
        c_values=cs,
        c0=c0,
        smooth_flags=smooth_flags,
        class_at_c0=class_at_c0,
        non_smooth_at_c0=non_smooth_at_c0,
        details=details,
    )


@dataclass
class BlowupReport:
    rows: list                  # (c, minimal_k or None)
    k_max: int

    @property
    def monotone(self) -> bool:
        """minimal_k non-decreasing as c decreases (None sorts above k_max)."""
        ks = [self.k_max + 1 if mk is None else mk for _, mk in self.rows]
        return all(k2 >= k1 for k1, k2 in zip(ks, ks[1:]))

    def to_csv(self) -> str:
        lines = ["c,minimal_k"]
        for c, mk in self.rows:
            lines.append(f"{c:.12g},{'NotFound' if mk is None else mk}")
        return "\n".join(lines) + "\n"


def blowup_experiment(c_sequence, k_max: int = 64, n_grid: int = 12) -> BlowupReport:
    """minimal_k of the equator along a decreasing c sequence (NotFound when > k_max)."""
    cs = [float(c) for c in c_sequence]
    if any(b >= a for a, b in zip(cs, cs[1:])):
        raise ValueError("c_sequence must be strictly decreasing")
    rows = []
    for c in cs:
        surface, equator = _equator(c)
        rows.append((c, cl.minimal_k(surface, equator, k_max=k_max, n_grid=n_grid)))
    return BlowupReport(rows=rows, k_max=k_max)
