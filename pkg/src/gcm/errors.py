"""Exception types shared across the package."""


class GcmError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(GcmError, ValueError):
    """Model and data disagree on the number of features."""

    def __init__(self, expected: int, actual: int, context: str = ""):
        self.expected = expected
        self.actual = actual
        msg = f"expected {expected} features, got {actual}"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class DomainError(GcmError, ValueError):
    """A scalar parameter is outside its permitted range."""


class ConfigurationError(GcmError, ValueError):
    """The requested combination of data and settings cannot be run."""


class NumericalError(GcmError, ArithmeticError):
    """A computation produced a non-finite value where one is required."""


class DataFormatError(GcmError):
    """A dataset or model file violates its format contract.

    ``location`` is a human-readable position (line number, row index or
    group id) so the offending record can be found.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class MalformedRecordError(DataFormatError):
    """A single record could not be parsed or violates record-level rules."""


class MixedLabelGroupError(DataFormatError):
    """A group contains both positive and negative rows."""


class MissingKeyError(DataFormatError):
    """A positive group has no row flagged as the key candidate."""


class MultipleKeysError(DataFormatError):
    """A positive group has more than one row flagged as the key candidate."""


class UnsortedGroupError(DataFormatError):
    """Binary dataset rows are not sorted by group id."""


class VersionMismatchError(DataFormatError):
    """A file was written with an unsupported format version."""
