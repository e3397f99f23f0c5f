import math

import numpy as np
import pytest

from kgeodesics import _kernels
from kgeodesics.surfaces import (
    EllipsoidOfRevolution,
    FlatTorus,
    RoundSphere,
    SurfacePoint,
    TangentVector,
    doubled_regular_polygon,
    doubled_square,
)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the numba kernels once so timed tests measure computation only
    _kernels.warm_up()


@pytest.fixture(scope="session")
def sphere():
    return RoundSphere(1.0)


@pytest.fixture(scope="session")
def torus():
    return FlatTorus(1.0, 1.0)


@pytest.fixture(scope="session")
def ellipsoid():
    return EllipsoidOfRevolution(0.5)


@pytest.fixture(scope="session")
def square():
    return doubled_square(1.0)


@pytest.fixture(scope="session")
def pentagon():
    return doubled_regular_polygon(5, 1.0)


def random_point(surface, rng):
    """A random chart point away from chart-singular loci."""
    if isinstance(surface, (RoundSphere, EllipsoidOfRevolution)):
        return SurfacePoint(rng.uniform(0.25, math.pi - 0.25), rng.uniform(0.0, 2.0 * math.pi))
    if isinstance(surface, FlatTorus):
        return SurfacePoint(rng.uniform(0.0, surface.a), rng.uniform(0.0, surface.b))
    # polygon: rejection-sample the interior, away from edges and corners
    v = surface.vertices
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    while True:
        z = np.array([rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1])])
        if surface.contains(z, tol=-1e-3):
            sheet = "front" if rng.random() < 0.5 else "back"
            return SurfacePoint(float(z[0]), float(z[1]), sheet)


def random_unit_vector(surface, p, rng):
    ang = rng.uniform(0.0, 2.0 * math.pi)
    g = surface.metric_at(p)
    return TangentVector(
        math.cos(ang) / math.sqrt(g[0, 0]), math.sin(ang) / math.sqrt(g[1, 1])
    )
