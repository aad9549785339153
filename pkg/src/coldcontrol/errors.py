"""Exception hierarchy shared by the simulators, the optimizers and the CLI."""


class ColdControlError(Exception):
    """Base class for all library errors."""


class InvalidArgument(ColdControlError, ValueError):
    pass


class DomainError(ColdControlError, ValueError):
    pass


class CapacityError(ColdControlError):
    pass


class NumericalInconsistency(ColdControlError, ArithmeticError):
    pass


class ConvergenceFailure(ColdControlError):
    """Iterative solver ran out of iterations.

    The last residual is kept on ``residual`` so callers can decide whether
    the partially converged result is still usable.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class LineSearchFailure(ColdControlError):
    pass


class ConfigError(ColdControlError):
    """Invalid run configuration; ``path`` points at the offending key."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
