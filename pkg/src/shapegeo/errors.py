"""Exception hierarchy shared by all shapegeo modules."""


class ShapeGeoError(Exception):
    """Base class for domain errors raised by this package."""


class CollisionError(ShapeGeoError):
    """Two bodies coincide; ``pair`` holds the 1-based indices of the colliding bodies."""

    def __init__(self, pair, message=None):
        self.pair = tuple(pair)
        super().__init__(message or f"collision between bodies {self.pair[0]} and {self.pair[1]}")


class SymmetryError(ShapeGeoError):
    """Configuration is not parallelogram symmetric (q3 = -q1, q4 = -q2)."""


class CenterError(ShapeGeoError):
    """Configuration does not have its center of mass at the origin."""


class GaugeDegenerateError(ShapeGeoError):
    """The gauge section z1 > 0 breaks down (r12 -> 0 along the fiber)."""

    def __init__(self, message, time=None):
        self.time = time
        super().__init__(message if time is None else f"{message} (t={time!r})")


class StiffnessError(ShapeGeoError):
    """Adaptive step size underflowed in the Newtonian integrator."""


class PoleError(ShapeGeoError):
    """The requested point is the excluded pole of a stereographic chart."""


class EndSingularityError(ShapeGeoError):
    """Evaluation requested at (or within the exclusion radius of) a shirt end."""

    def __init__(self, label, message=None):
        self.label = label
        super().__init__(message or f"point lies on the {label} end")


class CollisionSingularityError(ShapeGeoError):
    """A singular denominator of the collinear conformal factor vanished."""

    def __init__(self, term, message=None):
        self.term = term
        super().__init__(message or f"singular term {term!r} vanished")


class ArcRangeError(ShapeGeoError):
    """Arc parameter outside [0, 1]."""


class QuadratureError(ShapeGeoError):
    """A quadrature domain touches a singular set or failed to converge."""


class DomainError(ShapeGeoError):
    """State lies outside the domain of the chart it is attached to."""


class StepUnderflowError(ShapeGeoError):
    """Geodesic integrator step size underflowed."""


class DomainEscapeError(ShapeGeoError):
    """Integration left the chart domain without triggering a boundary event."""


class NotFallingError(ShapeGeoError):
    """Trajectory tail does not fall into a boundary collar."""


class PunctureAngleError(ShapeGeoError):
    """Equator angle coincides with one of the four collision punctures."""


class NoBracketError(ShapeGeoError):
    """Shooting scan never brackets the target landing point."""

    def __init__(self, message, landing_range=None):
        self.landing_range = landing_range
        super().__init__(message)


class ConvergenceError(ShapeGeoError):
    """Root finder exhausted its iteration budget."""


class EscapeError(ShapeGeoError):
    """Landing map integration failed before reaching the boundary."""


class StencilDomainError(ShapeGeoError):
    """Finite-difference stencil touches a non-finite value."""
