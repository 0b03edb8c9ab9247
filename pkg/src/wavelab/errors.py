"""Exception types raised across the package."""


class WavelabError(Exception):
    """Base class for all package errors."""


class DomainError(WavelabError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ValidationError(WavelabError, ValueError):
    """A spacetime/grid pair failed validation."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class CFLError(ValidationError):
    """The time step violates the CFL margin.

    ``required_dt`` is the largest time step that would satisfy the margin.
    """

    def __init__(self, message, required_dt):
        super().__init__(message, [message])
        self.required_dt = required_dt


class PaddingError(WavelabError, ValueError):
    """A section is not supported strictly inside the time interior."""


class ShapeError(WavelabError, ValueError):
    """Rank or grid mismatch between operands."""


class UnsupportedOrderError(WavelabError, ValueError):
    """A derivative order beyond what is representable was requested."""


class PreconditionError(WavelabError, ValueError):
    """A documented precondition of an operation does not hold."""


class ConfigError(WavelabError, ValueError):
    """A scenario configuration is malformed or refers to something unknown."""
