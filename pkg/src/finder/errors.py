"""Exception hierarchy; the CLI maps these onto exit codes."""


class FinderError(Exception):
    """Base class for all library errors."""


class DimensionError(FinderError, ValueError):
    """Array shapes or counts are incompatible."""


class DataError(FinderError, ValueError):
    """Input data is malformed or insufficient (CLI exit code 2)."""


class NumericError(FinderError, ArithmeticError):
    """A numerical routine failed (CLI exit code 3)."""


class ConvergenceError(NumericError):
    """An iterative solver hit its iteration cap."""


class RoundError(FinderError):
    """One cross-validation round failed; carries the split that caused it."""

    def __init__(self, split, cause):
        self.split = split
        self.cause = cause
        super().__init__(
            f"round (test_a={split.test_a}, test_b={split.test_b}, "
            f"regime={split.regime}) failed: {type(cause).__name__}: {cause}"
        )
