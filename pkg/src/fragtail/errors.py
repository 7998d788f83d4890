"""Exception hierarchy shared by all fragtail modules."""


class FragtailError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FragtailError):
    """Invalid measure definition, parameters, or command configuration."""


class UnsupportedSampling(FragtailError):
    """Operation needs a finite, sampleable dislocation measure."""


class NumericalFailure(FragtailError):
    """A numerical routine did not reach its requested accuracy.

    Carries ``achieved`` (error estimate actually reached) when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DomainError(FragtailError):
    """Argument outside the mathematical domain of the operation."""


class UnsupportedExpansion(FragtailError):
    """Expansion has correction exponents at or below 1/2; the transform
    rules implemented here would miss second-order cross terms."""


class UncoveredRegion(FragtailError):
    """Family parameters fall outside the region with a known closed-form
    tail shape."""


class InsufficientWindow(FragtailError):
    """Too few survival-curve points inside the requested fit window."""
