"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class DegenerateOrbit(DomainError):
    pass


class DegenerateParameter(DomainError):
    pass


class NoCriticalPoint(DomainError):
    pass


class SaturatedInterval(DomainError):
    """The scaled interval covers the whole circle."""


class InvalidTree(DomainError):
    pass


class InvalidThresholds(DomainError):
    pass


class DepthExceeded(DomainError):
    pass


class ParseError(ValueError):
    pass


class SolverDiverged(RuntimeError):
    pass


class ConvergenceFailure(RuntimeError):
    """Iterative eigenvalue computation hit its iteration cap.

    ``bounds`` holds the Gershgorin interval for the spectral radius.
    """

    def __init__(self, message, bounds=None):
        super().__init__(message)
        self.bounds = bounds
