"""Exception hierarchy shared across the package."""


class VesselNavError(Exception):
    """Base class for all package errors."""


class InvalidInputError(VesselNavError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class FormatError(VesselNavError, ValueError):
    """A file or byte stream does not match its declared format.

    ``offset`` carries the byte offset of the failure when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class GenerationError(VesselNavError, RuntimeError):
    """Procedural geometry generation produced an unusable result."""


class ProjectionError(VesselNavError, ValueError):
    """A point cannot be projected with the given imaging geometry."""


class UsageError(VesselNavError, RuntimeError):
    """API misuse, e.g. stepping a finished episode."""


class InternalError(VesselNavError, RuntimeError):
    """A condition the package's own invariants should have ruled out."""
