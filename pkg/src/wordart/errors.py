"""Exception types shared across the package."""


class WordartError(Exception):
    """Base class for all package errors."""


class MalformedFont(WordartError):
    """Font container is truncated, has invalid offsets or bad metadata."""


class UnsupportedFont(WordartError):
    """Font parsed but uses features outside the supported subset."""


class MissingGlyph(WordartError):
    """Requested codepoint is not mapped by the font."""


class DegenerateOutline(WordartError):
    """Every contour of the outline has zero area."""


class BadPolicy(WordartError):
    """Region policy references contours that do not exist."""


class LengthMismatch(WordartError):
    """Flat vectors that must share a length do not."""


class DimensionMismatch(WordartError):
    """Images that must share dimensions do not."""


class EmptyRequest(WordartError):
    """Planner got empty user text."""


class SchemaViolation(WordartError):
    """Directive document failed validation.

    ``paths`` lists every offending field path.
    """

    def __init__(self, paths):
        self.paths = list(paths)
        super().__init__("invalid directives: " + ", ".join(self.paths))


class BackendUnavailable(WordartError):
    """Network-level backend failure. ``retryable`` marks transient causes."""

    def __init__(self, message, retryable=False):
        self.retryable = retryable
        super().__init__(message)


class BackendMalformedReply(WordartError):
    """Backend answered but the reply violates the wire protocol."""


class IoFailure(WordartError):
    """Filesystem error while persisting or loading a job."""


class CorruptJob(WordartError):
    """Job directory exists but its manifest is unreadable or invalid."""
