"""Exception hierarchy shared by all eigenderm modules."""


class EigendermError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(EigendermError):
    """An argument violates a documented precondition (empty class, bad counts, ...)."""


class DimensionMismatchError(EigendermError):
    """Two operands that must share a dimension do not."""


class NumericalFailureError(EigendermError):
    """An iterative solver failed to converge within its iteration cap."""


class DecodeError(EigendermError):
    """An image file could not be decoded to an RGB raster."""


class ShapeError(EigendermError):
    """A decoded image does not match the configured dimensions (reject policy)."""


class IngestError(EigendermError):
    """One or more files failed to decode while assembling a data matrix.

    Carries the offending paths so callers can report all failures at once.
    """

    def __init__(self, message: str, paths: list[str]):
        super().__init__(message)
        self.paths = list(paths)


class RankError(EigendermError):
    """Requested component count exceeds the numerical rank of a training class."""


class ModelFormatError(EigendermError):
    """A model file is corrupt, truncated, or has an unsupported version."""
