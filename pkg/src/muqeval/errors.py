"""Exception types shared across the harness."""


class MuqevalError(Exception):
    """Base class for every error raised by this package."""


class MalformedRecordError(MuqevalError):
    """An input record is missing a required field or is unparseable."""


class DuplicateKeyError(MuqevalError):
    """Two records claim the same identity."""


class UnknownLabelError(MuqevalError):
    """A truth label is outside the task vocabulary and its hierarchy."""


class DerangementError(MuqevalError):
    """Random-audio assignment is impossible (fewer than two distinct audios)."""


class InvalidRewriteError(MuqevalError):
    """Rewrite client returned empty text or echoed the reference verbatim."""


class InvalidReferenceError(MuqevalError):
    """A metric was asked to score against an empty reference."""


class InvalidItemError(MuqevalError):
    """Item violates a scoring precondition (e.g. empty truth set)."""


class EmptyAggregateError(MuqevalError):
    """Aggregation was requested over zero scores."""


class CoverageError(MuqevalError):
    """A required (item, label) grid has gaps."""

    def __init__(self, message: str, gaps: list | None = None):
        super().__init__(message)
        self.gaps = gaps or []


class ConfigurationError(MuqevalError):
    """Run configuration is invalid; surfaced before any request is made."""


class UpstreamError(MuqevalError):
    """A remote dependency (model, extractor, rewrite LLM, embedder) failed."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ShapeError(MuqevalError):
    """Vector dimensions do not line up."""


class DegenerateInputError(MuqevalError):
    """Numerically degenerate input, e.g. a zero vector fed to cosine."""
