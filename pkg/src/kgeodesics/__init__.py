"""Closed geodesics and balanced points of the uniform energy on model surfaces.

The package computes minimizing geodesics and distance derivatives on a small
catalog of model surfaces (round sphere, ellipsoid of revolution, flat torus,
doubled convex polygons), finds and classifies balanced points of the uniform
energy on k-tuples, certifies 1/k-geodesics, tests Grove-Shiohama criticality
of the distance function, and runs parameter-family experiments on the oblate
ellipsoid family.
"""

# Import submodules before re-exporting names: the `distance` operation below
# shadows the `distance` module attribute, so internal `from . import distance`
# bindings must resolve first.
from . import _kernels, errors, surfaces, geodesic, distance, energy, classify, sweep, svg, cli  # noqa: F401  isort: skip

from ._kernels import BACKEND
from .errors import (
    BVPFailure,
    BadBracket,
    ConePointHit,
    ConePointQuery,
    DegenerateJacobian,
    DepthBoundExceeded,
    EnumerationBound,
    GeometryError,
    HypothesisUnmet,
    IntegratorFailure,
    NoConvergence,
    NotDifferentiable,
    OrdinaryPairError,
    OutOfChart,
    UndefinedAtBasePoint,
    ZeroVector,
)
from .surfaces import (
    DoubledPolygon,
    EllipsoidOfRevolution,
    FlatTorus,
    RoundSphere,
    SurfaceModel,
    SurfacePoint,
    TangentVector,
    angle_between,
    canonicalize,
    christoffel_at,
    doubled_regular_polygon,
    doubled_square,
    inner,
    metric_at,
    parse_surface,
)
from .geodesic import (
    ClosedGeodesic,
    GeodesicArc,
    JacobiSolution,
    close_up,
    equator_geodesic,
    evaluate,
    great_circle,
    jacobi,
    meridian_geodesic,
    over_under_geodesic,
    shoot,
    torus_line,
)
from .distance import (
    MinimizerSet,
    PointClass,
    classify_point,
    directional_derivative,
    distance,
    gradient_dp,
    minimizers,
)
from .energy import (
    BalanceReport,
    BalancedClass,
    NotRotating,
    SearchOptions,
    SearchResult,
    TuplePoint,
    associated_geodesics,
    balance_test,
    build_class,
    energy_gradient,
    find_balanced,
    uniform_energy,
)
from .classify import (
    GSCriticalReport,
    KGeodesicReport,
    TheoremReport,
    balanced_implies_gs,
    enumerate_gs_critical,
    gs_critical,
    is_k_geodesic,
    minimal_k,
    verify_theorem_behavior,
)
from .sweep import (
    BlowupReport,
    PersistenceReport,
    SweepRecord,
    blowup_experiment,
    equator_cut_distance,
    find_c0,
    persistence_experiment,
    sweep_grid,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
