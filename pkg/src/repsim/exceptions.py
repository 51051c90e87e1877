"""Exception hierarchy shared across the library.

Data-shape and degenerate-input problems raise subclasses of
:class:`RepsimError` so callers (and the CLI) can distinguish bad data
from ordinary bugs.
"""


class RepsimError(Exception):
    """Base class for all errors raised by repsim."""


class DimensionMismatchError(RepsimError):
    """Operands have incompatible shapes or example counts."""


class DegenerateInputError(RepsimError):
    """Input is valid in shape but carries no usable signal
    (constant activations, zero variance, empty class, ...)."""


class NonFiniteValueError(RepsimError):
    """Input contains NaN or infinite entries."""


class NumericalError(RepsimError):
    """An iterative numerical routine failed to converge."""


class DumpFormatError(RepsimError):
    """Base class for malformed activation/prediction dump files."""


class BadMagicError(DumpFormatError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersionError(DumpFormatError):
    """File declares a format version this reader does not understand."""


class TruncatedFileError(DumpFormatError):
    """File ends before the declared payload is complete."""


class TrailingDataError(DumpFormatError):
    """File contains bytes past the end of the declared payload."""


class DuplicateNameError(DumpFormatError):
    """Layer or model names within one dump are not unique."""


class InvalidFieldError(DumpFormatError):
    """A header field holds a value outside its legal range
    (unknown tag byte, label >= classCount, zero-sized dimension, ...)."""
