"""Exception hierarchy shared across the toolkit."""


class FeverscreenError(Exception):
    """Base class for all toolkit errors."""


class TrialParseError(FeverscreenError):
    """Raised when a trial or profile document cannot be decoded."""


class TrialValidationError(FeverscreenError):
    """Raised when a decoded record violates a data-model invariant."""


class InsufficientDataError(FeverscreenError):
    """Raised when a series has too few samples for the requested operation."""


class CoolingDirectionError(FeverscreenError):
    """Raised when the device is warmer than the source (last reading below the first)."""


class NoContactError(FeverscreenError):
    """Raised when a contact centroid is requested for an empty mask."""


class SensorNotFoundError(FeverscreenError):
    """Raised when a trial has no series for the requested sensor."""


class UnderdeterminedError(FeverscreenError):
    """Raised when a regression has fewer examples than basis terms."""


class DegenerateLabelsError(FeverscreenError):
    """Raised when ROC analysis is attempted with a single class."""
