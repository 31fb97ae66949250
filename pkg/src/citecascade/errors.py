"""Exception types shared across the package."""


class CascadeError(Exception):
    """Base class for every error raised by this package."""


class UnknownIdError(CascadeError, KeyError):
    """A publication id is not known to the store."""

    def __init__(self, pub_id: str):
        super().__init__(pub_id)
        self.pub_id = pub_id

    def __str__(self) -> str:
        return f"unknown publication id: {self.pub_id!r}"


class IngestError(CascadeError):
    """A corpus file could not be ingested."""


class NotNormalizableError(CascadeError):
    """A record lacks the field-of-research or year needed for cohorting."""


class DslParseError(CascadeError):
    """Query text failed to parse. Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class DslEvaluationError(CascadeError):
    """A parsed query referenced a field or operation the evaluator rejects."""


class FetchError(CascadeError):
    """A remote page request failed after retries or returned a bad body."""


class ReplayMissError(FetchError):
    """Replay mode found no recorded entry for a (query, skip) key."""


class PaginationError(FetchError):
    """Paging produced inconsistent results (e.g. total_count drift)."""


class ArtifactError(CascadeError):
    """An on-disk artifact is missing, malformed, or schema-mismatched."""
