"""Exception hierarchy shared by all modules."""


class KqiError(Exception):
    """Base class for every error raised by this package."""


class DomainError(KqiError, ValueError):
    """An argument lies outside the operation's domain."""


class SchemaError(KqiError):
    """A CSV file does not carry the expected header."""


class ValidationError(KqiError, ValueError):
    """A value violates a type invariant.

    ``row`` is the 1-based data-row number when the value came from a file.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SingularMatrixError(KqiError, ArithmeticError):
    """The least-squares design matrix is rank deficient."""


class DegenerateInputError(KqiError, ValueError):
    """Input has zero variance where a spread is required."""


class TrainingError(KqiError):
    """Training failed; carries the fold index when raised during CV."""

    def __init__(self, message, fold=None):
        self.fold = fold
        if fold is not None:
            message = f"fold {fold}: {message}"
        super().__init__(message)


class RegistryParseError(KqiError):
    """A registry document is malformed or truncated."""


class RegistryVersionError(KqiError):
    """A registry document was written with an incompatible schema version."""


class ConfigError(KqiError, ValueError):
    """A configuration document has unknown keys or badly typed values."""
