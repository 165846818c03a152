"""Exception hierarchy shared by every stage of the pipeline."""


class HIFError(Exception):
    """Base class for all package errors."""


class AlignmentError(HIFError):
    """Channels disagree on sampling rate, start time or length."""


class ParameterError(HIFError, ValueError):
    """A numeric parameter is outside its admissible range."""


class RangeError(HIFError, IndexError):
    """An index or window falls outside the data it refers to."""


class SequencingError(HIFError):
    """Operations were invoked out of their required order."""


class OracleError(HIFError):
    """Numerical integration diverged or produced non-finite values."""


class IngestionError(HIFError):
    """A waveform file could not be parsed into a record."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ManifestError(HIFError):
    """A corpus manifest does not follow the expected schema."""
