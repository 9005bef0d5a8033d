"""Exception and warning types raised across the package.

Errors are split into two families so the command line can map them to
exit codes: :class:`UsageError` (bad invocation, exit 1) and
:class:`DataError` (input that cannot be processed, exit 2).
"""


class MixupError(Exception):
    """Base class for every error raised by this package."""


class UsageError(MixupError):
    """Invalid arguments or configuration."""


class DataError(MixupError):
    """Input data that cannot be processed."""


class DimensionUnsupported(DataError):
    """Ambient dimension outside {2, 3}."""


class DegenerateInput(DataError):
    """The points cannot be triangulated even after perturbation."""


class DimensionMismatch(DataError):
    """Two point clouds live in different ambient dimensions."""


class TooFewPoints(DataError):
    """Fewer points than an operation needs."""


class TooManyPoints(DataError):
    """More points than an exhaustive routine can enumerate."""


class NoConvergence(DataError):
    """An iterative refinement failed to stabilise."""


class SeriesTooShort(DataError):
    """A time series is too short for the requested parameters."""


class DegenerateSeries(DataError):
    """A time series carries no variation (e.g. constant)."""


class OutOfRange(DataError):
    """An index falls outside the valid range."""


class EmptySearchWindow(UsageError):
    """The search window contains no candidate index."""


class SizeMismatch(DataError):
    """Two inputs that must have equal size do not."""


class ParseError(DataError):
    """A text input could not be parsed.

    Parameters
    ----------
    message : str
        Description of the problem.
    line : int, optional
        1-based line number of the offending row.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    """A tabular input lacks required columns.

    Parameters
    ----------
    missing : list of str
        Names of the absent columns.
    """

    def __init__(self, missing, message: str | None = None):
        self.missing = list(missing)
        if message is None:
            message = "missing columns: " + ", ".join(self.missing)
        super().__init__(message)


class DuplicatePointsWarning(UserWarning):
    """Coincident points were merged before triangulation."""


class SelectionWarning(UserWarning):
    """A parameter search hit its upper bound without a clear optimum."""


class NoAlarmWarning(UserWarning):
    """A change detector never crossed its threshold."""
