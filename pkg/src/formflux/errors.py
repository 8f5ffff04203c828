"""Exception types shared across the package."""


class FormfluxError(Exception):
    """Base class for all package-specific errors."""


class ArgumentError(FormfluxError, ValueError):
    """Invalid argument combination (dimension/degree mismatch, bad config)."""


class UnsupportedOperationError(FormfluxError):
    """Operation not available for this backend or shape (e.g. exterior
    derivative of a rough form, shrink of a non-convex domain)."""


class InefficiencyError(FormfluxError):
    """Raised when a rejection or indicator acceptance ratio is too low for
    the estimate to be meaningful."""

    def __init__(self, message, acceptance_ratio=None, samples=None):
        super().__init__(message)
        self.acceptance_ratio = acceptance_ratio
        self.samples = samples
