"""Typed errors shared across the toolchain."""


class S2KError(Exception):
    pass


class EmptyAfterCleaning(S2KError):
    """Nothing left in a document once cleaning rules ran; caller should skip it."""


class TokenizerFailure(S2KError):
    pass


class TokenizerMismatch(S2KError):
    pass


class BackendUnavailable(S2KError):
    """Remote backend failed after the configured retries."""


class ContextTooLong(S2KError):
    pass


class UnsupportedCapability(S2KError):
    """Backend lacks a capability (e.g. teacher forcing) the caller needs."""


class NormalizationError(S2KError):
    """A full-coverage distribution does not sum to 1 within tolerance."""


class UnparseableResponse(S2KError):
    """No structured object could be recovered from a model reply."""


class MalformedGeneration(S2KError):
    """Reasoning reply is missing options or the gold answer line."""


class UnknownReasoningType(S2KError):
    pass


class StaleInput(S2KError):
    """A stage input no longer matches the digest recorded by its producer."""


class ConfigError(S2KError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
