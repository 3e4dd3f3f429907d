"""Exception hierarchy shared across the package."""


class LvmError(Exception):
    """Base class for all package errors."""


class NotPositiveDefiniteError(LvmError, ValueError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class NotSymmetricError(LvmError, ValueError):
    pass


class ConvergenceError(LvmError, RuntimeError):
    def __init__(self, message, iterations=None):
        self.iterations = iterations
        super().__init__(message)


class SpecError(LvmError, ValueError):
    """Invalid model specification; ``field`` is a dotted path to the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NotInvertibleError(LvmError, ValueError):
    pass


class DataError(LvmError, ValueError):
    """Unreadable data file; ``row`` and ``column`` are 1-based when known."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f"row {row}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
