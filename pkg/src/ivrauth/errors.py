"""Exception hierarchy.

Everything a caller can mishandle about data or configuration derives from
DataError, which the CLI maps to exit code 2. Usage errors (bad flags) stay
with argparse and exit 1.
"""


class IvrAuthError(Exception):
    """Base class for all package errors."""


class DataError(IvrAuthError):
    """Invalid data, schema, or configuration."""


class EmptyDatasetError(DataError):
    """Operation requires at least one record."""


class SchemaError(DataError):
    """Credential schema is malformed or inconsistent."""


class CsvFormatError(DataError):
    """Malformed CSV call log. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ImpossibleEvidenceError(DataError):
    """Evidence has probability zero under both classes."""


class InsufficientSupportError(DataError):
    """Conditioning subset is smaller than the configured support floor."""

    def __init__(self, support: int, min_support: int):
        super().__init__(
            f"insufficient support: {support} matching records "
            f"(minimum {min_support})"
        )
        self.support = support
        self.min_support = min_support


class DegeneratePairError(DataError):
    """A credential pair must consist of two distinct credentials."""


class SpecValidationError(DataError):
    """Generator spec failed validation."""


class PolicyError(DataError):
    """Policy file is malformed or inconsistent."""
