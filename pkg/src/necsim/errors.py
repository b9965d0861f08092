"""Exception types shared across the package."""


class NecsimError(Exception):
    """Base class for all package-specific errors."""


class BoundsError(NecsimError, ValueError):
    """A size parameter falls outside its supported range."""


class InvalidDeletionError(NecsimError, ValueError):
    """Node deletion requested on a single-node graph."""


class ModelValidationError(NecsimError, ValueError):
    """A model or parameter set violates a construction rule."""


class NumericError(NecsimError, RuntimeError):
    """A numeric routine failed to reach its required tolerance."""


class CalibrationError(NecsimError, ValueError):
    """Dwell-time calibration is infeasible for the given targets."""


class ParseError(NecsimError, ValueError):
    """A data file is malformed. Carries the path and 1-based line number."""

    def __init__(self, message: str, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where = f" [{where}]"
        super().__init__(message + where)


class FormatVersionError(ParseError):
    """A data file declares an unsupported format version."""
