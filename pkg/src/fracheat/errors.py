"""Exception types shared across the package."""


class FracheatError(ValueError):
    """Base class for all package-specific errors."""


class PreconditionError(FracheatError):
    """An operation was called outside its hypotheses (bad exponents,
    invalid grid parameters, smallness condition violated, ...)."""


class RepresentationError(PreconditionError):
    """Field passed in the wrong representation (physical vs spectral)."""


class ContaminationError(PreconditionError):
    """Whole-space emulation failed: too much |f|-mass outside the
    central half-box, or spectral content too close to the Nyquist edge."""


class ConvergenceError(FracheatError):
    """A fixed-point iteration failed to converge within its budget."""
