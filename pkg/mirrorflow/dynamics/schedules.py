"""Sensitivity schedules eta(t).

All schedules are positive, nonincreasing and Lipschitz continuous with t * eta(t)
growing without bound. Besides the value they expose the closed form derivative, used by
the Fenchel audit, and the closed form integral of eta over [0, t], used by the rate
bounds. Every method accepts a scalar or an array of times.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from mirrorflow.errors import InvalidParameterError


class SensitivitySchedule(Protocol):
    def value(self, t): ...

    def derivative(self, t): ...

    def integral(self, t): ...


@dataclass(frozen=True)
class ConstantSchedule:
    eta0: float

    def __post_init__(self):
        _check_positive("eta0", self.eta0)

    def value(self, t):
        return self.eta0 * np.ones_like(t, dtype=float)[()]

    def derivative(self, t):
        return np.zeros_like(t, dtype=float)[()]

    def integral(self, t):
        return self.eta0 * np.asarray(t, dtype=float)[()]


@dataclass(frozen=True)
class PowerLawSchedule:
    """eta(t) = eta0 * min(1, t^-beta) with 0 < beta < 1."""

    eta0: float
    beta: float

    def __post_init__(self):
        _check_positive("eta0", self.eta0)
        if not 0 < self.beta < 1:
            raise InvalidParameterError("beta", f"must lie in (0, 1), not {self.beta}")

    def value(self, t):
        return self.eta0 * np.maximum(t, 1.0) ** -self.beta

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        slope = -self.beta * self.eta0 * np.maximum(t, 1.0) ** (-self.beta - 1.0)
        return np.where(t > 1.0, slope, 0.0)[()]

    def integral(self, t):
        t = np.asarray(t, dtype=float)
        tail = (np.maximum(t, 1.0) ** (1.0 - self.beta) - 1.0) / (1.0 - self.beta)
        return (self.eta0 * np.where(t > 1.0, 1.0 + tail, t))[()]


@dataclass(frozen=True)
class OptimizedSchedule:
    """eta(t) = sqrt(depth * modulus / noise_bound) * min(1, 1 / sqrt(t)).

    This choice balances the two terms of the rectified rate bound and gives the rate
    2 sqrt(depth * noise_bound / (modulus * t)).
    """

    depth: float
    modulus: float
    noise_bound: float

    def __post_init__(self):
        _check_positive("depth", self.depth)
        _check_positive("modulus", self.modulus)
        _check_positive("noise_bound", self.noise_bound)

    @property
    def eta0(self) -> float:
        return float(np.sqrt(self.depth * self.modulus / self.noise_bound))

    @property
    def _power_law(self) -> PowerLawSchedule:
        return PowerLawSchedule(self.eta0, 0.5)

    def value(self, t):
        return self._power_law.value(t)

    def derivative(self, t):
        return self._power_law.derivative(t)

    def integral(self, t):
        return self._power_law.integral(t)


def eta(schedule: SensitivitySchedule, t: float) -> float:
    """Return the schedule value at time t >= 0."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, not {t}")
    return float(schedule.value(t))


def _check_positive(name: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameterError(name, f"must be positive and finite, not {value}")
