"""Exception types shared across the package."""


class FinslerBilliardsError(Exception):
    """Base class for all package errors."""


class InvalidParameters(FinslerBilliardsError):
    """Arguments violate a documented precondition."""


class NoConvergence(FinslerBilliardsError):
    """An iterative solver exhausted its budget without reaching tolerance."""


class ZeroVector(InvalidParameters):
    """A direction argument was (numerically) zero."""


class NotOnIndicatrix(InvalidParameters):
    """A vector expected to have unit Finsler length does not."""


class NotOnFiguratrix(InvalidParameters):
    """A covector expected to have unit dual norm does not."""


class FieldTooStrong(InvalidParameters):
    """Magnetic one-form reaches dual norm >= 1, so the Lagrangian is not positive."""


class CoincidentPoints(InvalidParameters):
    """Geodesic endpoints coincide."""


class ChordTooLongForField(InvalidParameters):
    """Endpoints farther apart than the Larmor diameter; no connecting arc."""


class SingularMass(FinslerBilliardsError):
    """Velocity Hessian of the Lagrangian is singular transverse to the ray direction."""


class GrazingRay(FinslerBilliardsError):
    """Incoming direction is tangent to the boundary within tolerance."""


class GrazingDeparture(FinslerBilliardsError):
    """Departure direction is tangent to the boundary within tolerance."""


class NoExit(FinslerBilliardsError):
    """A forward ray never crossed the boundary within the search horizon."""


class ZeroWinding(FinslerBilliardsError):
    """Polygon does not wind around the table centroid."""


class AmbiguousCanonicalization(FinslerBilliardsError):
    """Two cyclic rotations tie under rounding but differ beyond tolerance."""
