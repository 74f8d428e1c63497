"""Exception types shared across the package."""


class SrElasticaError(Exception):
    """Base class for all package errors."""


class DegenerateBoundary(SrElasticaError):
    """Boundary conditions with coincident endpoints or a vanishing direction."""


class VanishingVelocity(SrElasticaError):
    """Curve speed underflows the threshold; tangent/curvature undefined there."""


class NonIntegrable(SrElasticaError):
    """Cost integrand diverges under refinement."""


class ZeroCost(SrElasticaError):
    """Trajectory has zero total control cost (it is a point)."""


class ZeroScale(SrElasticaError):
    """Homothety with scale factor zero."""


class InvalidSpec(SrElasticaError):
    """Extremal spec violates its invariants (e.g. fully degenerate covector)."""


class EventDetectionFailure(SrElasticaError):
    """A switching root of h1 could not be localized in time."""


class InsufficientSamples(SrElasticaError):
    """Too few samples for the requested finite-difference check."""


class NoConvergence(SrElasticaError):
    """No shooting start converged. Carries the best mismatch attained."""

    def __init__(self, message, best_mismatch=None):
        super().__init__(message)
        self.best_mismatch = best_mismatch


class NoDescent(SrElasticaError):
    """All oracle restarts failed to reduce the cost below the initializer."""


class XiTooLarge(SrElasticaError):
    """Requested half-interval outruns the valid two-arc window."""


class DegenerateIntersection(SrElasticaError):
    """Tangent lines in the approximating construction are (numerically) parallel."""


class DegenerateSegment(SrElasticaError):
    """Discrete curve contains a (near-)zero-length segment."""
