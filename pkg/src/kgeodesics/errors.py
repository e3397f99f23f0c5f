"""Exception hierarchy shared by all modules.

Everything derives from :class:`GeometryError` so callers (and the CLI) can
distinguish domain errors (exit code 2) from usage errors (exit code 1).
"""


class GeometryError(Exception):
    """Base class for all domain errors raised by this package."""


class ConePointQuery(GeometryError):
    """A differential quantity was requested at a cone point."""


class OutOfChart(GeometryError):
    """Point cannot be canonicalized into the chart domain (incl. chart-singular poles)."""


class ZeroVector(GeometryError):
    """An angle or direction was requested for a zero tangent vector."""


class ConePointHit(GeometryError):
    """A polygon geodesic ran into a cone point; it is not extendable."""


class IntegratorFailure(GeometryError):
    """The adaptive ODE stepper failed (step underflow or capacity exceeded)."""


class NoConvergence(GeometryError):
    """An iterative solve (Newton closure, search) did not converge."""


class DegenerateJacobian(GeometryError):
    """The closure return map is degenerate at the seed."""


class BVPFailure(GeometryError):
    """No shooting start converged; the start grid is too coarse."""


class DepthBoundExceeded(GeometryError):
    """Polygon unfolding hit its edge-crossing depth bound with live candidates."""


class NotDifferentiable(GeometryError):
    """The distance function has no gradient at this point (ordinary cut point)."""


class UndefinedAtBasePoint(GeometryError):
    """The requested quantity is undefined at the base point itself."""


class OrdinaryPairError(GeometryError):
    """A consecutive tuple pair is an ordinary cut pair; the energy gradient is blocked."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"pair ({index}, {index + 1}) is an ordinary cut pair")


class ConePointVertex(GeometryError):
    """A tuple vertex sits on a cone point where the balance test does not apply."""


class EnumerationBound(GeometryError):
    """Minimizer combination enumeration exceeded its bound."""


class BadBracket(GeometryError):
    """A bisection bracket does not straddle the target value."""


class HypothesisUnmet(GeometryError):
    """Curvature/length hypothesis of the intersection theorem is not satisfied."""
