"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes (IO=2, protocol=3, validation=4) and the
service maps them onto HTTP statuses.
"""


class RefeedNetError(Exception):
    """Base class for all package errors."""


class ValidationError(RefeedNetError, ValueError):
    """Bad argument, shape mismatch, or violated invariant."""


class InputShapeError(ValidationError):
    """Input tensor shape does not match what the model expects."""


class GradientShapeError(ValidationError):
    """Gradient shapes do not line up with parameter shapes."""


class EmptyDatasetError(ValidationError):
    """An operation that needs at least one sample got none."""


class DegenerateSplitError(ValidationError):
    """A split fraction left one side of the partition empty."""


class TranslationRangeError(ValidationError):
    """Requested pixel shift moves the whole image out of frame."""


class UndefinedGainError(ValidationError):
    """reFeed gain pf/p0 is undefined because p0 == 0."""


class IoError(RefeedNetError):
    """File or corpus level failure."""


class CorpusLayoutError(IoError):
    """Image corpus root is missing the expected class directories."""


class CheckpointFormatError(IoError):
    """Checkpoint stream is corrupt; message carries the byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ProtocolError(RefeedNetError):
    """Experimental-protocol violation, e.g. test and retest sets overlap."""


class NotFoundError(RefeedNetError):
    """Lookup by id failed."""


class ReviewConflictError(RefeedNetError):
    """Record was already reviewed with a different verdict."""
