"""Exception and warning types shared across the library."""


class CavlinkError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(CavlinkError, ValueError):
    """An argument violates a documented precondition or invariant."""


class SingularResponseError(CavlinkError, ZeroDivisionError):
    """A lossless resonance is driven exactly on resonance; the response diverges."""


class BranchAssignmentError(CavlinkError):
    """Dressed-mode branches hybridize exactly 50/50 and cannot be labeled."""


class PeakAmbiguityError(CavlinkError):
    """Zero or several candidate peaks inside the analysis window."""


class WindowTooNarrowError(CavlinkError):
    """A half-maximum crossing falls outside (or on the edge of) the window."""


class DegenerateParameterError(CavlinkError):
    """Free fit parameters are indistinguishable for the given trace."""

    def __init__(self, names, message):
        super().__init__(message)
        self.names = tuple(names)


class NoSolutionError(CavlinkError):
    """The requested target cannot be reached for the given parameters."""


class TraceParseError(CavlinkError):
    """A trace file could not be parsed; carries the offending line number."""

    def __init__(self, path, line_number, message):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = str(path)
        self.line_number = int(line_number)


class ConfigError(CavlinkError):
    """A run configuration is missing, malformed, or inconsistent."""


class ValidityWarning(UserWarning):
    """The model is being evaluated outside its stated domain of validity."""
