"""Exception hierarchy shared by every module of the package."""


class RegmixError(Exception):
    """Base class for all package errors."""


class InvalidParameter(RegmixError, ValueError):
    pass


class InvalidState(RegmixError):
    pass


class DegenerateCluster(RegmixError):
    """A mixture component lost all its support or its covariance cannot be factorized."""


class NotPositiveDefinite(RegmixError):
    pass


class InsufficientData(RegmixError):
    pass


class GenerationFailure(RegmixError):
    pass


class ParseError(RegmixError):
    """Malformed dataset or config file. ``row``/``column`` are 1-based when known."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column
