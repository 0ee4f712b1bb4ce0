"""Exception hierarchy shared by every module."""


class GfmaxError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(GfmaxError, ValueError):
    """A sequence, innovation or run configuration is malformed."""


class DomainError(GfmaxError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class RegimeError(GfmaxError):
    """The model does not satisfy the preconditions of the requested regime."""


class ResourceError(GfmaxError):
    """A request exceeds a configured memory or horizon cap."""


class InsufficientSampleError(GfmaxError):
    """Too few conditioned paths were produced to compute a statistic."""

    def __init__(self, message, achieved=0):
        super().__init__(message)
        self.achieved = achieved
