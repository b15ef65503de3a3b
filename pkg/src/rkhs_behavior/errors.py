"""Exception hierarchy shared by the library and the command line."""


class BehaviorError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(BehaviorError, ValueError):
    """Array shapes or dimensions are inconsistent."""


class DimensionError(ShapeError):
    """A size parameter (depth, lag, horizon) is out of range for the data."""


class InsufficientDataError(DimensionError):
    """Too few samples for the requested window."""


class ContractError(BehaviorError, ValueError):
    """A documented precondition was violated."""


class ObservabilityError(BehaviorError):
    """The observability matrix does not have full column rank."""


class DegenerateDataError(BehaviorError):
    """The data carry no usable information (e.g. a zero projection)."""


class ConfigError(BehaviorError):
    """Bad run configuration; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ParseError(ConfigError):
    """Malformed input file; ``row`` is the 1-based line number when known."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
