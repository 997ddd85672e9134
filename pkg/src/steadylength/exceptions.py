"""Exception types raised by the solvers and geometry kernel."""


class SteadyLengthError(Exception):
    """Base class for all errors raised by this package."""


class OutOfDomainError(SteadyLengthError):
    """A point or time lies outside the chart or time domain of a flow.

    ``exit_time`` is set when the violation happened during an integration.
    """

    def __init__(self, message, exit_time=None):
        super().__init__(message)
        self.exit_time = exit_time


class DegenerateMetricError(SteadyLengthError):
    """The metric failed to be symmetric positive definite."""


class UnsupportedFlowError(SteadyLengthError):
    pass


class InvalidParameterError(SteadyLengthError):
    pass


class BVPFailure(SteadyLengthError):
    """No start of the two-point solver converged.

    ``diagnostics`` holds one entry per attempted start.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class NotComputableError(SteadyLengthError):
    """A quantity that needs a unique, non-conjugate minimizer was requested at a pair without one."""


class ConjugatePointError(NotComputableError):
    """The endpoints are (numerically) conjugate along the geodesic."""
