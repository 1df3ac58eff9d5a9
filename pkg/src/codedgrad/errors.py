"""Exception types shared across the library."""


class CodedGradError(Exception):
    """Base class for library errors."""


class ParameterError(CodedGradError, ValueError):
    """Invalid argument values or inconsistent dimensions."""


class UnsupportedSizeError(ParameterError):
    """Requested computation exceeds a hard budget (e.g. brute-force width)."""


class ConstructionError(CodedGradError, RuntimeError):
    """A randomized construction failed within its retry budget."""


class UnrecoverableErasureError(CodedGradError, RuntimeError):
    """The received columns do not determine the message."""

    def __init__(self, message, rank=None, needed=None):
        super().__init__(message)
        self.rank = rank
        self.needed = needed


class UnrecoverableGroupError(UnrecoverableErasureError):
    """A worker group could not be decoded."""

    def __init__(self, message, group, rank=None, needed=None):
        super().__init__(message, rank=rank, needed=needed)
        self.group = group


class InadmissibleKappaError(ParameterError):
    """Condition-number cap below the admissibility bound; no guarantee holds."""

    def __init__(self, message, kappa, bound):
        super().__init__(message)
        self.kappa = kappa
        self.bound = bound


class ConfigError(ParameterError):
    """Malformed simulator or CLI configuration document."""


class InvariantViolationError(CodedGradError, RuntimeError):
    """An internal guarantee was broken (indicates a bug, not bad input)."""
