"""Exception hierarchy shared across the package."""


class TdmexError(Exception):
    """Base class for all package errors."""


class DocumentParseError(TdmexError):
    """Input document is malformed (bad XML, bad block format)."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class EmptyDocumentError(TdmexError):
    """Input parsed but carries no document content at all."""


class DataFormatError(TdmexError):
    """An on-disk artifact (TSV, JSON) does not match its schema."""


class LabelSpaceError(TdmexError):
    """An annotation references a label outside the configured label space."""


class SplitError(TdmexError):
    """A corpus split is infeasible under the requested constraints."""

    def __init__(self, message: str, blocking=()):
        super().__init__(message)
        self.blocking = tuple(blocking)


class TrainingError(TdmexError):
    """Model training cannot proceed (degenerate inputs, no convergence)."""


class ScoringError(TdmexError):
    """Base class for scorer failures."""


class TransportError(ScoringError):
    """Remote scoring endpoint unreachable (connection/timeout)."""


class ProtocolError(ScoringError):
    """Remote endpoint reachable but reply malformed or an error status."""


class EvaluationError(TdmexError):
    """Evaluation inputs are inconsistent (doc_id mismatch, bad config)."""
