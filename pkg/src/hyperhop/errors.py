"""Exception types shared across the package."""


class HyperhopError(Exception):
    """Base class for all package errors."""


class CorpusFormatError(HyperhopError):
    """Corpus or dataset file is malformed; message names the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractError(HyperhopError, ValueError):
    """A caller violated an operation precondition (shape, range, ...)."""


class IndexIntegrityError(HyperhopError):
    """Persisted or in-memory index state is internally inconsistent."""


class ExtractionError(HyperhopError):
    """Entity extraction failed for a passage after bounded retries."""

    def __init__(self, message: str, passage_id: str | None = None):
        self.passage_id = passage_id
        super().__init__(message)


class EmbeddingError(HyperhopError):
    """Remote embedding failed; carries the offsets of the failing batch."""

    def __init__(self, message: str, batch_offsets: tuple[int, int] | None = None):
        self.batch_offsets = batch_offsets
        super().__init__(message)


class ChatError(HyperhopError):
    """Chat completion failed after bounded retries."""
