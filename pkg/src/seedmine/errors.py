"""Exception hierarchy shared across the package."""


class SeedmineError(Exception):
    """Base class for all package errors."""


class CatalogError(SeedmineError):
    """Catalog file violates the schema or the integrity constraints."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CorpusError(SeedmineError):
    """Prompt construction asked for something the catalog cannot supply."""


class QuotaShortfallError(CorpusError):
    """Not enough plausible scenes survived the gate for a relation."""

    def __init__(self, relation, needed, available):
        super().__init__(
            f"relation {relation!r}: need {needed} scenes, only {available} plausible"
        )
        self.relation = relation
        self.needed = needed
        self.available = available


class ParseError(SeedmineError):
    """A prompt or artifact line does not match its grammar."""


class RectificationError(SeedmineError):
    """A prompt cannot be rewritten from the available verdicts."""


class BackendError(SeedmineError):
    """A generation or evaluation backend failed for one request.

    retryable distinguishes transient faults (timeouts, 5xx) from permanent
    ones (schema mismatch, unknown image ref).
    """

    def __init__(self, message, retryable=False):
        super().__init__(message)
        self.retryable = retryable


class ProtocolError(BackendError):
    """Remote payload does not match the wire contract. Never retryable."""

    def __init__(self, message):
        super().__init__(message, retryable=False)


class PlanError(SeedmineError):
    """Mining plan or ranking parameters are out of range."""


class RunInvalidError(SeedmineError):
    """Too many unevaluated items; the mining run cannot be trusted."""


class CurationError(SeedmineError):
    """Manifest construction or validation failed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MetricsError(SeedmineError):
    """Metric inputs are empty, mismatched, or out of range."""
