"""Exception hierarchy shared across the package."""


class NMSparseError(ValueError):
    """Base class for every data error raised by nmsparse."""


class DimensionError(NMSparseError):
    """Matrix dimensions are incompatible with the requested block size."""


class ShapeMismatch(NMSparseError):
    """Two arrays that must be congruent have different shapes."""


class InvalidMask(NMSparseError):
    """A mask does not satisfy the structure an operation requires."""


class DivisibilityError(NMSparseError):
    """Tensor size is not compatible with the N:M configuration."""


class TooLargeError(NMSparseError):
    """Instance is too large for exhaustive enumeration."""


class InfeasibleError(NMSparseError):
    """A flow network admits no flow of the requested value."""


class SingularSystem(NMSparseError):
    """Least-squares normal equations are singular and no ridge term was given."""


class FormatError(NMSparseError):
    """A tensor file is malformed or uses an unsupported layout."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ShapeError(FormatError):
    """A tensor file holds a payload that is not two-dimensional."""
