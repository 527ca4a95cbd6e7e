"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: InputError -> 1, NetworkError -> 2,
NumericalError -> 3.
"""

from __future__ import annotations


class FilingsMinerError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FilingsMinerError):
    """Bad user input, configuration, or data file."""


class MissingArtifactError(InputError):
    """A stage was run before its upstream artifact exists."""

    def __init__(self, artifact: str, hint: str = ""):
        self.artifact = artifact
        msg = f"missing upstream artifact: {artifact}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)


class NetworkError(FilingsMinerError):
    """Remote fetch failed; retryable unless stated otherwise."""

    def __init__(self, message: str, retry_after: float | None = None, retryable: bool = True):
        super().__init__(message)
        self.retry_after = retry_after
        self.retryable = retryable


class NumericalError(FilingsMinerError):
    """A numerical routine was fed degenerate data (zero norm, rank exceeded, ...)."""


class StageError(FilingsMinerError):
    """Wraps any error raised inside a pipeline stage with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {cause}")
