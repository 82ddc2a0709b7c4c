"""Exception types raised by the library."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ResolutionError(RuntimeError):
    """The frequency grid is too coarse for the requested CIR truncation."""


class SingularityError(RuntimeError):
    """A covariance matrix could not be factorised."""
