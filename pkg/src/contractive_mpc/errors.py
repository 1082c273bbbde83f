"""Exception types raised by the toolkit."""


class ContractiveMPCError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(ContractiveMPCError, ValueError):
    """Array shapes do not match the system or cost they are used with."""


class NumericOverflowError(ContractiveMPCError, ArithmeticError):
    """A trajectory produced a non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class IllPosedError(ContractiveMPCError):
    """The one-step problem has no unique minimiser (R + B'PB not positive definite)."""


class InfeasibleError(ContractiveMPCError):
    """An optimisation problem could not be solved to feasibility."""

    def __init__(self, message, step=None, report=None):
        super().__init__(message)
        self.step = step
        self.report = report


class DareDivergenceError(ContractiveMPCError):
    """Riccati fixed-point iteration did not converge."""


class DegenerateTerminalSetError(ContractiveMPCError):
    """No positive terminal level passes the admissibility test."""
