"""Exception types raised across the toolkit."""


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class GraphFormatError(ValueError):
    """Malformed graph or event-log input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LatentModelError(ValueError):
    """A latent-position link function produced a value outside [0, 1]."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine did not reach its tolerance."""

    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class SelectionError(RuntimeError):
    """Model selection had no admissible candidate."""
