"""Exception hierarchy for the solver."""


class SurfNSError(Exception):
    """Base class for all errors raised by :mod:`surfns`."""


class DomainError(SurfNSError, ValueError):
    """A point lies outside the domain where a level set is defined."""


class DegenerateGradientError(SurfNSError, ValueError):
    """The level-set gradient is too small for a regular frame."""


class InvalidIndexError(SurfNSError, ValueError):
    """Spherical-harmonic degree/order pair out of range."""


class TooFarFromSurfaceError(SurfNSError, ValueError):
    """Near-surface evaluation requested at a point far from the surface."""


class LevelOutOfRangeError(SurfNSError, ValueError):
    pass


class EmptyBandError(SurfNSError, RuntimeError):
    """No background tetrahedron is intersected by the surface."""


class MeshMismatchError(SurfNSError, ValueError):
    pass


class BandInclusionError(SurfNSError, RuntimeError):
    """Cut elements of the new band are missing from a history band.

    ``violations`` holds the offending tetrahedron ids.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class NonTangentialError(SurfNSError, ValueError):
    pass


class SolverError(SurfNSError, RuntimeError):
    """Linear solve failed; carries the best iterate and its residual."""

    def __init__(self, message, x=None, residual=float("nan")):
        super().__init__(message)
        self.x = x
        self.residual = residual


class SingularMatrixError(SolverError):
    pass
