"""Exception hierarchy shared by every module of the package."""


class CSKError(Exception):
    """Base class for all errors raised by csk."""


class QuadratureFailure(CSKError, ArithmeticError):
    """A numerical integral could not be evaluated to the requested accuracy."""


class NonFinite(QuadratureFailure):
    """An integrand returned NaN or infinity at a quadrature node."""


class ToleranceNotMet(QuadratureFailure):
    """Adaptive refinement stalled before reaching the tolerance."""


class NoConvergence(QuadratureFailure):
    """A limit sequence failed to settle (extrapolation residual grows)."""


class InsufficientSamples(CSKError, ValueError):
    pass


class DimensionMismatch(CSKError, ValueError):
    pass


class InvalidGamma(CSKError, ValueError):
    """Power-law exponent outside the admissible range gamma > -1."""


class UnsupportedPower(CSKError, ValueError):
    pass


class NotCompact(CSKError, ValueError):
    """Generator orbits are not periodic, so no normalized invariant measure exists."""


class NotClosedAlgebra(CSKError, ValueError):
    pass


class FirstClassViolation(CSKError, ValueError):
    pass


class PSDViolation(CSKError, ArithmeticError):
    """A Gram matrix has a significantly negative eigenvalue."""


class NotOnSurface(CSKError, ValueError):
    pass


class StepRejected(CSKError, ArithmeticError):
    pass


class NoNullSpace(UserWarning):
    """Warning: the operator whose null space is projected onto has a trivial kernel."""
