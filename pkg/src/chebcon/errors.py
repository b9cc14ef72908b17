"""Exception types shared across the package."""


class InvalidIntervalError(ValueError):
    """Interval endpoints are degenerate or non-finite."""


class DomainError(ValueError):
    """Evaluation point lies outside a proxy's interval beyond tolerance."""


class InfeasibleConstraintsError(ValueError):
    """Intersection of the local constraint intervals is empty."""


class ProtocolOrderError(RuntimeError):
    """A dissemination step was invoked outside its legal phase."""


class NonConvergenceError(RuntimeError):
    """An iterative procedure hit its cap before meeting tolerance.

    Carries the last residual (adaptive interpolation) or the run trace
    (dissemination) so callers can diagnose the failure.
    """

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace
