"""Exception hierarchy shared by all modules."""


class SlkitError(Exception):
    """Base class for library errors."""


class ValidationError(SlkitError, ValueError):
    """Input violates a documented precondition."""


class SolverError(SlkitError):
    """The shooting integrator produced a non-finite state."""

    def __init__(self, message, last_x=None):
        super().__init__(message)
        self.last_x = last_x


class BracketError(SlkitError):
    """No oscillation bracket was found inside the lambda scan window."""

    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


class DomainError(SlkitError, ValueError):
    """A value passed as an eigenvalue is not one."""


class UnsupportedSmoothnessError(ValidationError):
    """No closed-form background is available for this smoothness index."""


class SingularBasisError(SlkitError):
    """Two distinct interpolation indices share an eigenvalue."""


class IllPosedDataError(SlkitError):
    """The Gelfand-Levitan system is singular at some grid point."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x
