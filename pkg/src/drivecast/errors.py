"""Exception types shared across the package."""


class DriveCastError(Exception):
    """Base class for all package-specific errors."""


class TraceFormatError(DriveCastError):
    """Malformed trace input. Carries the table and 1-based line number when known."""

    def __init__(self, message, table=None, line=None):
        self.table = table
        self.line = line
        where = ""
        if table is not None:
            where = f" [{table}" + (f", line {line}" if line is not None else "") + "]"
        super().__init__(message + where)


class ValidationError(DriveCastError):
    """Input data violates a documented precondition (user-fixable)."""


class ModelIOError(DriveCastError):
    """Model file is corrupt, truncated, or has an unsupported format version."""
