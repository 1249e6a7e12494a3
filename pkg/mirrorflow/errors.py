"""Exception classes raised by mirrorflow.

Every exception derives from `MirrorFlowError` and from the builtin exception that best
describes the failure, so callers can catch either the package base class or, for
example, a plain `ValueError`.
"""

from __future__ import annotations
from typing import Optional


class MirrorFlowError(Exception):
    """Base class for exceptions in this package."""


class DimensionMismatchError(MirrorFlowError, ValueError):
    """A vector or matrix does not have the dimension expected by the region."""


class InfeasiblePointError(MirrorFlowError, ValueError):
    """A primal point lies outside of the feasible region."""


class BoundaryPointError(MirrorFlowError, ValueError):
    """A point lies on the boundary where a steep regularizer is not differentiable."""


class NotAVertexError(MirrorFlowError, ValueError):
    """A point that was expected to be a polytope vertex is not a vertex."""


class UnsupportedRegionError(MirrorFlowError, NotImplementedError):
    """The requested operation is not available for this kind of region."""


class UnsupportedPairingError(UnsupportedRegionError):
    """The regularizer cannot be combined with the region."""


class NoPathError(MirrorFlowError, ValueError):
    """The network does not contain a path from the origin to the destination."""


class NumericalAbort(MirrorFlowError, ArithmeticError):
    """The simulated state became nonfinite.

    Attributes:
        step: Index of the integration step that produced the nonfinite state.
        time: Simulation time at that step.
    """

    def __init__(self, step: int, time: float, message: Optional[str] = None):
        self.step = step
        self.time = time
        if message is None:
            message = f"nonfinite state at step {step} (t = {time:g})"
        super().__init__(message)
        self.message = message

    def __reduce__(self):
        return (type(self), (self.step, self.time, self.message))


class ConfigError(MirrorFlowError, ValueError):
    """An experiment configuration could not be resolved.

    Attributes:
        field: The offending configuration field as a tuple of keys, for example
            ("integrator", "dt").
    """

    def __init__(self, field: tuple[str, ...], description: str):
        self.field = tuple(field)
        self.description = description
        super().__init__(f"{'.'.join(self.field)}: {description}")

    def __reduce__(self):
        return (type(self), (self.field, self.description))


class InvalidParameterError(MirrorFlowError, ValueError):
    """A constructor argument is out of range.

    Attributes:
        parameter: Name of the offending argument.
    """

    def __init__(self, parameter: str, description: str):
        self.parameter = parameter
        self.description = description
        super().__init__(f"'{parameter}' {description}")

    def __reduce__(self):
        return (type(self), (self.parameter, self.description))
