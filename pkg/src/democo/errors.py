"""Exception taxonomy shared across the pipeline.

The CLI maps these onto distinct exit codes: input/format problems,
scorer protocol failures, and everything else (internal).
"""


class DemocoError(Exception):
    """Base class for all pipeline errors."""


class InputError(DemocoError):
    """Bad user-supplied input: files, formats, labels, configuration."""


class CorpusFormatError(InputError):
    """Malformed corpus or gold file; carries a row number when known."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ConfigError(InputError):
    """Malformed configuration file or invalid option value."""


class ModelFormatError(InputError):
    """Model file is not loadable: bad magic, version, or structure."""


class TrainingDataError(InputError):
    """Training set violates a model's preconditions."""


class ScorerError(DemocoError):
    """Base class for external-scorer failures."""


class ScorerProtocolError(ScorerError):
    """The scorer violated the wire protocol (bad JSON, wrong req_id, ...)."""


class ScorerValueError(ScorerError):
    """The scorer returned confidences outside the tolerated range."""


class ScorerTimeoutError(ScorerError):
    """The scorer did not answer within the allotted time."""
