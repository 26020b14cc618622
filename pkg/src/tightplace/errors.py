"""Exception hierarchy shared by every module."""


class PlacementError(Exception):
    """Base class for all errors raised by tightplace."""


class ContractError(PlacementError, ValueError):
    """Inputs violate a documented precondition (shapes, sizes, ranges)."""


class DegenerateGeometryError(ContractError):
    """A sensor coincides with the target, so its bearing is undefined."""


class UnsupportedError(PlacementError):
    """The request is outside what the library supports by design."""


class InfeasibleError(PlacementError):
    """No placement of the requested form exists for these coefficients."""


class PreconditionViolation(ContractError):
    """An input placement fails a required optimality property."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConstructionFailure(PlacementError, RuntimeError):
    """A constructor produced output that does not certify."""


class NumericalFailure(PlacementError, ArithmeticError):
    """Non-finite state encountered while integrating the flow."""

    def __init__(self, message, last_sample=None):
        super().__init__(message)
        self.last_sample = last_sample


class StepSizeError(NumericalFailure):
    """The potential increased across a step; the time step is too large."""
