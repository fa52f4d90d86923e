"""Exception types shared across the toolkit."""


class KeymaskError(Exception):
    """Base class for all toolkit errors."""


class CorpusFormatError(KeymaskError):
    """A corpus record could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrityError(KeymaskError):
    """Corpus-level invariant violated (duplicate ids, mislabeled splits, ...)."""


class ConfigError(KeymaskError):
    """A configuration value violates its contract."""


class BackendError(KeymaskError):
    """A pluggable backend failed on a specific document."""

    def __init__(self, doc_id: str, message: str):
        self.doc_id = doc_id
        super().__init__(f"backend failed on document {doc_id!r}: {message}")


class MissingArtifactError(KeymaskError):
    """A pipeline stage needs an artifact that has not been produced yet."""
