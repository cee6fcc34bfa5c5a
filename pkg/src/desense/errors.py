"""Exception hierarchy. The CLI maps each family to an exit code."""


class DesenseError(Exception):
    exit_code = 1


class ConfigError(DesenseError, ValueError):
    exit_code = 1


class DataError(DesenseError):
    exit_code = 2


class NumericalError(DesenseError):
    exit_code = 3


class DimensionError(NumericalError, ValueError):
    pass


class NotSymmetricError(NumericalError, ValueError):
    pass


class NotPositiveDefiniteError(NumericalError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class SingularSystemError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass
