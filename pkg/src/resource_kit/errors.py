"""Exception hierarchy shared by every module."""


class ResourceKitError(Exception):
    """Base class for all errors raised by resource_kit."""


class NotHermitian(ResourceKitError, ValueError):
    pass


class NonSquare(ResourceKitError, ValueError):
    pass


class ShapeMismatch(ResourceKitError, ValueError):
    pass


class BadSubsystems(ResourceKitError, ValueError):
    pass


class DimMismatch(ResourceKitError, ValueError):
    pass


class BadDimension(ResourceKitError, ValueError):
    pass


class InvalidState(ResourceKitError, ValueError):
    """A matrix failed one of the density-matrix invariants."""


class NotUnitary(ResourceKitError, ValueError):
    pass


class NotADistribution(ResourceKitError, ValueError):
    pass


class NotPure(ResourceKitError, ValueError):
    pass


class BadAlpha(ResourceKitError, ValueError):
    pass


class SpecInvalid(ResourceKitError, ValueError):
    """The map handed to mc_extend is not DIO."""


class FillerInvalid(ResourceKitError, ValueError):
    pass


class SamplingFailed(ResourceKitError, RuntimeError):
    pass


class TooLarge(ResourceKitError, ValueError):
    """A sequence enumeration or dense construction would exceed its guard."""

    def __init__(self, size, limit, what="enumeration"):
        super().__init__(f"{what} size {size} exceeds limit {limit}")
        self.size = size
        self.limit = limit


class EmptyPool(ResourceKitError, ValueError):
    pass


class DomainViolation(ResourceKitError, ValueError):
    pass


class CompletionFailed(ResourceKitError, RuntimeError):
    pass
