"""Exception types raised by gpcert."""


class GPCertError(Exception):
    """Base class for all gpcert failures."""


class NumericalError(GPCertError, ArithmeticError):
    """A factorization or variance computation failed.

    ``pivot`` holds the 1-based index of the failing leading minor when the
    error comes from a Cholesky factorization.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DomainError(GPCertError, ValueError):
    """A query point lies outside the set on which a bound is certified."""


class DivergenceError(GPCertError):
    """Simulation produced a non-finite state."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class CapacityError(GPCertError):
    """A problem exceeds a configured dense-solve size."""


class StageError(GPCertError):
    """An experiment stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
