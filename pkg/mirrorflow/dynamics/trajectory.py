"""Integrator settings, logged trajectories and rectification."""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

from mirrorflow.errors import DimensionMismatchError, InvalidParameterError
from mirrorflow.noise import MAX_SEED


class RectificationMode(Enum):
    AVERAGE = "average"
    BEST = "best"


@dataclass(frozen=True)
class IntegratorConfig:
    """Time step, horizon, seed and logging stride of a simulation.

    Attributes:
        dt: Step size.
        horizon: Final time T; the number of steps is round(T / dt).
        seed: Unsigned 64 bit seed of the Brownian source.
        log_stride: Every `log_stride`-th step is logged, plus the final step.
        y0: Initial dual state; defaults to the origin.
    """

    dt: float
    horizon: float
    seed: int = 0
    log_stride: int = 1
    y0: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise InvalidParameterError("dt", f"must be positive, not {self.dt}")
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise InvalidParameterError(
                "horizon", f"must be positive, not {self.horizon}"
            )
        if self.dt > self.horizon:
            raise InvalidParameterError(
                "dt", f"({self.dt}) must not exceed the horizon ({self.horizon})"
            )
        if int(self.log_stride) != self.log_stride or self.log_stride < 1:
            raise InvalidParameterError("log_stride", "must be a positive integer")
        if self.log_stride * self.dt > self.horizon * (1 + 1e-12):
            raise InvalidParameterError(
                "log_stride", "times dt must not exceed the horizon"
            )
        if int(self.seed) != self.seed or not 0 <= self.seed < MAX_SEED:
            raise InvalidParameterError("seed", "must be an unsigned 64 bit integer")
        object.__setattr__(self, "log_stride", int(self.log_stride))
        object.__setattr__(self, "seed", int(self.seed))
        if self.y0 is not None:
            y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
            if y0.ndim != 1 or not np.all(np.isfinite(y0)):
                raise InvalidParameterError("y0", "must be a finite vector")
            object.__setattr__(self, "y0", tuple(y0.tolist()))

    @property
    def n_steps(self) -> int:
        return max(int(round(self.horizon / self.dt)), 1)

    def log_steps(self) -> np.ndarray:
        """Return the indices of the logged steps, including the first and last."""
        steps = np.arange(0, self.n_steps + 1, self.log_stride)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps

    def initial_dual(self, dim: int) -> np.ndarray:
        if self.y0 is None:
            return np.zeros(dim)
        if len(self.y0) != dim:
            raise DimensionMismatchError(
                f"'y0' has {len(self.y0)} entries, expected {dim}"
            )
        return np.array(self.y0)


class BestPoint(NamedTuple):
    time: float
    point: np.ndarray
    value: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A logged sample path.

    Attributes:
        times: Logged times, increasing.
        dual: Dual states Y(t_k), shape (K, n).
        primal: Primal states X(t_k) = Q(eta(t_k) Y(t_k)), shape (K, n).
        f_values: f(X(t_k)).
        f_mean: Time average of f(X) over [t_0, t_k].
        running_avg: Time average of X over [t_0, t_k].
        f_best: Running minimum of the logged f values.
        eta: Sensitivity eta(t_k).
        fenchel: Fenchel coupling F(x*, eta Y) / eta to a target, if one was given.
        path_index: Index of the path within its ensemble.
    """

    times: np.ndarray
    dual: np.ndarray
    primal: np.ndarray
    f_values: np.ndarray
    f_mean: np.ndarray
    running_avg: np.ndarray
    f_best: np.ndarray
    eta: np.ndarray
    fenchel: Optional[np.ndarray] = None
    path_index: int = 0

    @classmethod
    def from_path(
        cls,
        times,
        primal,
        f_values=None,
        dual=None,
        eta=None,
        fenchel=None,
        path_index: int = 0,
    ) -> Trajectory:
        """Build a trajectory from logged points, deriving the averages by trapezoids.

        Missing f values default to zero, a missing dual path to the primal path and a
        missing eta to one.
        """
        times = np.asarray(times, dtype=float)
        primal = np.asarray(primal, dtype=float)
        if primal.ndim == 1:
            primal = primal[:, None]
        if times.ndim != 1 or times.size == 0 or primal.shape[0] != times.size:
            raise DimensionMismatchError("'times' and 'primal' must have equal length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("'times' must be increasing")
        if f_values is None:
            f_values = np.zeros(times.size)
        f_values = np.asarray(f_values, dtype=float)
        dual = primal.copy() if dual is None else np.asarray(dual, dtype=float)
        eta = np.ones(times.size) if eta is None else np.asarray(eta, dtype=float)
        return cls(
            times=times,
            dual=dual,
            primal=primal,
            f_values=f_values,
            f_mean=running_mean(times, f_values),
            running_avg=running_mean(times, primal),
            f_best=np.minimum.accumulate(f_values),
            eta=eta,
            fenchel=None if fenchel is None else np.asarray(fenchel, dtype=float),
            path_index=path_index,
        )

    @property
    def length(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.primal.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def best_so_far(self) -> BestPoint:
        """Return the earliest logged point with the smallest f value."""
        index = int(np.argmin(self.f_values))
        return BestPoint(
            float(self.times[index]), self.primal[index], float(self.f_values[index])
        )

    def to_frame(self) -> pd.DataFrame:
        """Return a table with the columns t, x_1..x_n, f, f_avg, f_best and fenchel."""
        columns = {"t": self.times}
        for i in range(self.dim):
            columns[f"x_{i + 1}"] = self.primal[:, i]
        columns["f"] = self.f_values
        columns["f_avg"] = self.f_mean
        columns["f_best"] = self.f_best
        columns["fenchel"] = self.fenchel if self.fenchel is not None else np.nan
        return pd.DataFrame(columns)


def running_mean(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Return the running time average of logged values using the trapezoidal rule."""
    values = np.asarray(values, dtype=float)
    steps = np.diff(times)
    if values.ndim > 1:
        steps = steps.reshape((-1,) + (1,) * (values.ndim - 1))
    areas = 0.5 * steps * (values[1:] + values[:-1])
    integral = np.concatenate([np.zeros_like(values[:1]), np.cumsum(areas, axis=0)])
    elapsed = (times - times[0]).reshape((-1,) + (1,) * (values.ndim - 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        means = integral / elapsed
    means[0] = values[0]
    return means


def rectify(traj: Trajectory, mode="average", objective=None) -> Trajectory:
    """Replace the primal path by its running time average or its running best point.

    In average mode the f values of the rectified path are f at the averaged points when
    an objective is given, and the time average of f otherwise (an upper bound by
    convexity). In best mode the rectified point at t_k is the logged point with the
    smallest f value up to t_k, ties going to the earliest time.

    The dual path and eta are carried over unchanged; the Fenchel series is dropped.
    """
    mode = RectificationMode(mode)
    if mode is RectificationMode.AVERAGE:
        primal = traj.running_avg
        if objective is not None:
            f_values = np.asarray(objective.value_and_gradient(primal)[0], dtype=float)
        else:
            f_values = traj.f_mean
    else:
        f = traj.f_values
        previous_best = np.concatenate([[np.inf], np.minimum.accumulate(f)[:-1]])
        improved = f < previous_best
        improved[0] = True
        index = np.maximum.accumulate(np.where(improved, np.arange(f.size), 0))
        primal = traj.primal[index]
        f_values = f[index]
    return Trajectory.from_path(
        traj.times,
        primal,
        f_values,
        dual=traj.dual,
        eta=traj.eta,
        path_index=traj.path_index,
    )
