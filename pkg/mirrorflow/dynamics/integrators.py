"""Euler-Maruyama integration of the mirror descent flows.

The dual state follows

    y_{k+1} = y_k - dt * grad f(x_k) + sigma(x_k, t_k) dW_k,   x_k = Q(eta(t_k) * y_k),

with dW_k ~ N(0, dt I_m). Without noise no increments are drawn, so the stochastic
integrator run with a zero noise model reproduces the deterministic one exactly.

`simulate_paths` advances a batch of paths in lockstep. The Wiener increments of path i
come from the Philox stream keyed by (seed, i), so a path does not depend on which other
paths share its batch except through the floating point order of batched matrix
products; `run_ensemble` therefore always uses the same batch layout.
"""

from __future__ import annotations
import logging
from typing import Optional, Sequence

import numpy as np

from mirrorflow.dynamics.schedules import ConstantSchedule, SensitivitySchedule
from mirrorflow.dynamics.trajectory import IntegratorConfig, Trajectory
from mirrorflow.errors import (
    DimensionMismatchError,
    InfeasiblePointError,
    NumericalAbort,
)
from mirrorflow.geometry import FeasibleRegion
from mirrorflow.mirror import FEASIBILITY_TOLERANCE, Regularizer, get_mirror
from mirrorflow.noise import BrownianSource, ConstantNoise, NoiseModel
from mirrorflow.problems import Objective


logger = logging.getLogger(__name__)


def integrate_md(
    objective: Objective,
    reg: Regularizer,
    region: FeasibleRegion,
    eta0: float,
    cfg: IntegratorConfig,
    target=None,
) -> Trajectory:
    """Integrate the deterministic mirror descent flow with a constant sensitivity."""
    noise = ConstantNoise.zero(region.dim)
    return integrate_smd(
        objective, reg, region, noise, ConstantSchedule(eta0), cfg, target=target
    )


def integrate_smd(
    objective: Objective,
    reg: Regularizer,
    region: FeasibleRegion,
    noise: NoiseModel,
    schedule: SensitivitySchedule,
    cfg: IntegratorConfig,
    target=None,
    path_index: int = 0,
    increments=None,
) -> Trajectory:
    """Integrate one path of the stochastic mirror descent flow.

    Args:
        target: Optional feasible point x*; if given the trajectory logs the Fenchel
            coupling F(x*, eta Y) / eta.
        path_index: Selects the Brownian stream of the path.
        increments: Optional Wiener increments of shape (n_steps, m) replacing the
            Brownian source, for example the sums of a finer path's increments.

    Raises:
        NumericalAbort: If the state becomes nonfinite.
    """
    if increments is not None:
        increments = np.asarray(increments, dtype=float)[None]
    trajectories = simulate_paths(
        objective, reg, region, noise, schedule, cfg, [path_index], target, increments
    )
    return trajectories[0]


def simulate_paths(
    objective: Objective,
    reg: Regularizer,
    region: FeasibleRegion,
    noise: NoiseModel,
    schedule: SensitivitySchedule,
    cfg: IntegratorConfig,
    path_indices: Sequence[int],
    target=None,
    increments=None,
) -> list[Trajectory]:
    """Integrate several paths in lockstep and return them in the given order."""
    dim = region.dim
    if objective.dim != dim:
        raise DimensionMismatchError(
            f"objective dimension {objective.dim} differs from region dimension {dim}"
        )
    if noise.dim != dim:
        raise DimensionMismatchError(
            f"noise dimension {noise.dim} differs from region dimension {dim}"
        )
    mirror = get_mirror(reg, region)
    n_paths = len(path_indices)
    n_steps, dt = cfg.n_steps, cfg.dt
    shape = (n_paths, n_steps, noise.wiener_dim)
    if increments is not None and increments.shape != shape:
        raise DimensionMismatchError(f"expected increments of shape {shape}")
    if target is not None:
        target = np.asarray(target, dtype=float)
        if not region.contains(target, FEASIBILITY_TOLERANCE):
            raise InfeasiblePointError("the target lies outside of the feasible region")
        target_value = mirror.value(target)

    noise_increment = _NoiseIncrements(noise, cfg, path_indices, increments)
    log_steps = cfg.log_steps()
    recorder = _Recorder(n_paths, log_steps.size, dim)

    y = np.tile(cfg.initial_dual(dim), (n_paths, 1))
    x_integral = np.zeros((n_paths, dim))
    f_integral = np.zeros(n_paths)
    best = np.full(n_paths, np.inf)
    previous_x = previous_f = None
    slot = 0
    for k in range(n_steps + 1):
        t = k * dt
        eta = float(schedule.value(t))
        x = mirror.mirror_map(eta * y)
        f, gradient = objective.value_and_gradient(x)
        if k > 0:
            x_integral += 0.5 * dt * (previous_x + x)
            f_integral += 0.5 * dt * (previous_f + f)

        if k == log_steps[slot]:
            best = np.minimum(best, f)
            if k == 0:
                x_mean, f_mean = x, f
            else:
                x_mean, f_mean = x_integral / t, f_integral / t
            fenchel = None
            if target is not None:
                conjugate = mirror.conjugate(eta * y)
                coupling = target_value + conjugate - eta * region.inner(y, target)
                fenchel = coupling / eta
            recorder.record(slot, t, eta, y, x, f, x_mean, f_mean, best, fenchel)
            slot += 1
        if k == n_steps:
            break

        y = y - dt * gradient
        if noise_increment.active:
            y = y + noise_increment(k, t)
        if not np.all(np.isfinite(y)):
            raise NumericalAbort(step=k + 1, time=(k + 1) * dt)
        previous_x, previous_f = x, f

    logger.debug(
        "Integrated %d path(s) over %d steps, final mean f = %.6g",
        n_paths,
        n_steps,
        float(np.mean(f)),
    )
    return recorder.trajectories(path_indices, with_fenchel=target is not None)


class _NoiseIncrements:
    """Serves sigma(x_k, t_k) dW_k for all paths of a batch, one block at a time."""

    def __init__(
        self, noise: NoiseModel, cfg: IntegratorConfig, path_indices, increments
    ):
        self.noise = noise
        self.sqrt_dt = float(np.sqrt(cfg.dt))
        self.path_indices = list(path_indices)
        self.increments = increments
        self.active = increments is not None or noise.sup_bound() > 0
        self.static_sigma = None
        if noise.time_homogeneous:
            self.static_sigma = noise.volatility(None, 0.0)
        self.source = BrownianSource(cfg.seed, noise.wiener_dim)
        self._block_index = -1
        self._block: Optional[np.ndarray] = None

    def __call__(self, k: int, t: float) -> np.ndarray:
        if self.increments is not None:
            dw = self.increments[:, k, :]
            return dw @ self._sigma(t).T

        block_steps = self.source.block_steps
        index, offset = divmod(k, block_steps)
        if index != self._block_index:
            dw = self.sqrt_dt * self.source.blocks(self.path_indices, index)
            # pre-apply a constant volatility to the whole block
            if self.static_sigma is not None:
                dw = dw @ self.static_sigma.T
            self._block = dw
            self._block_index = index
        if self.static_sigma is not None:
            return self._block[:, offset, :]
        return self._block[:, offset, :] @ self._sigma(t).T

    def _sigma(self, t: float) -> np.ndarray:
        if self.static_sigma is not None:
            return self.static_sigma
        return self.noise.volatility(None, t)


class _Recorder:
    def __init__(self, n_paths: int, n_logs: int, dim: int):
        self.times = np.empty(n_logs)
        self.eta = np.empty(n_logs)
        self.dual = np.empty((n_paths, n_logs, dim))
        self.primal = np.empty((n_paths, n_logs, dim))
        self.running_avg = np.empty((n_paths, n_logs, dim))
        self.f_values = np.empty((n_paths, n_logs))
        self.f_mean = np.empty((n_paths, n_logs))
        self.f_best = np.empty((n_paths, n_logs))
        self.fenchel = np.empty((n_paths, n_logs))

    def record(self, slot, t, eta, y, x, f, x_mean, f_mean, best, fenchel):
        self.times[slot] = t
        self.eta[slot] = eta
        self.dual[:, slot] = y
        self.primal[:, slot] = x
        self.running_avg[:, slot] = x_mean
        self.f_values[:, slot] = f
        self.f_mean[:, slot] = f_mean
        self.f_best[:, slot] = best
        if fenchel is not None:
            self.fenchel[:, slot] = fenchel

    def trajectories(self, path_indices, with_fenchel: bool) -> list[Trajectory]:
        return [
            Trajectory(
                times=self.times,
                dual=self.dual[i],
                primal=self.primal[i],
                f_values=self.f_values[i],
                f_mean=self.f_mean[i],
                running_avg=self.running_avg[i],
                f_best=self.f_best[i],
                eta=self.eta,
                fenchel=self.fenchel[i] if with_fenchel else None,
                path_index=int(path),
            )
            for i, path in enumerate(path_indices)
        ]
