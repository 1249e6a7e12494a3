"""The one-dimensional comparison of Hessian-Riemannian and mirror descent dynamics.

For f(x) = x on [0, 1] with the binary entropy, the stochastic Hessian-Riemannian flow
(SHD) and the stochastic mirror descent flow (SMD) read, in primal form,

    SHD:  dX = -X (1 - X) (dt - sigma dW)
    SMD:  dX = -X (1 - X) (dt - sigma dW) + X (1 - X) (1 - 2 X) sigma^2 dt / 2

and differ only by the Ito correction. SMD is also integrated in dual form,
dY = -dt + sigma dW with X = e^Y / (1 + e^Y), as a cross-check of the primal form. All
three share the same Wiener increments.
"""

from __future__ import annotations
from typing import NamedTuple, Sequence

import numpy as np

from mirrorflow.dynamics.trajectory import IntegratorConfig, Trajectory
from mirrorflow.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NumericalAbort,
)
from mirrorflow.noise import BrownianSource


BOUNDARY_EPSILON = 1e-12


class HessianComparison(NamedTuple):
    smd: Trajectory
    shd: Trajectory
    smd_dual: Trajectory

    @property
    def deviation(self) -> float:
        """Largest logged distance between the primal and dual forms of SMD."""
        return float(np.max(np.abs(self.smd.primal - self.smd_dual.primal)))


def integrate_hr1d(
    sigma: float, x0: float, cfg: IntegratorConfig, path_index: int = 0, increments=None
) -> HessianComparison:
    """Simulate one SMD/SHD pair started at x0 with shared Wiener increments.

    Args:
        increments: Optional Wiener increments of shape (n_steps,) replacing the
            Brownian source.
    """
    if increments is not None:
        increments = np.asarray(increments, dtype=float).reshape(1, -1)
    return simulate_hr1d(sigma, x0, cfg, [path_index], increments)[0]


def simulate_hr1d(
    sigma: float,
    x0: float,
    cfg: IntegratorConfig,
    path_indices: Sequence[int],
    increments=None,
) -> list[HessianComparison]:
    """Simulate SMD/SHD pairs for several paths in lockstep.

    Primal paths are clamped to [1e-12, 1 - 1e-12] after every step.
    """
    if not 0 < x0 < 1:
        raise InvalidParameterError(
            "x0", f"must lie strictly between 0 and 1, not {x0}"
        )
    if not np.isfinite(sigma):
        raise InvalidParameterError("sigma", "must be finite")
    n_paths, n_steps, dt = len(path_indices), cfg.n_steps, cfg.dt
    if increments is not None and increments.shape != (n_paths, n_steps):
        raise DimensionMismatchError(
            f"expected increments of shape {(n_paths, n_steps)}"
        )

    source = BrownianSource(cfg.seed, 1)
    sqrt_dt = np.sqrt(dt)
    log_steps = cfg.log_steps()
    times = log_steps * dt
    shd_log = np.empty((n_paths, log_steps.size))
    smd_log = np.empty((n_paths, log_steps.size))
    dual_log = np.empty((n_paths, log_steps.size))

    low, high = BOUNDARY_EPSILON, 1.0 - BOUNDARY_EPSILON
    x_shd = np.full(n_paths, float(x0))
    x_smd = np.full(n_paths, float(x0))
    y = np.full(n_paths, np.log(x0) - np.log1p(-x0))
    block = None
    slot = 0
    for k in range(n_steps + 1):
        if k == log_steps[slot]:
            shd_log[:, slot] = x_shd
            smd_log[:, slot] = x_smd
            dual_log[:, slot] = y
            slot += 1
        if k == n_steps:
            break

        if increments is not None:
            dw = increments[:, k]
        else:
            index, offset = divmod(k, source.block_steps)
            if offset == 0:
                block = sqrt_dt * source.blocks(path_indices, index)[:, :, 0]
            dw = block[:, offset]

        forcing = dt - sigma * dw
        gain_shd = x_shd * (1.0 - x_shd)
        gain_smd = x_smd * (1.0 - x_smd)
        correction = 0.5 * gain_smd * (1.0 - 2.0 * x_smd) * sigma**2 * dt
        x_shd = np.clip(x_shd - gain_shd * forcing, low, high)
        x_smd = np.clip(x_smd - gain_smd * forcing + correction, low, high)
        y = y - forcing
        if not (np.all(np.isfinite(x_smd)) and np.all(np.isfinite(y))):
            raise NumericalAbort(step=k + 1, time=(k + 1) * dt)

    dual_primal = 0.5 * (1.0 + np.tanh(0.5 * dual_log))
    comparisons = []
    for i, path in enumerate(path_indices):
        smd = _logged_path(times, smd_log[i], _logit(smd_log[i]), path)
        shd = _logged_path(times, shd_log[i], _logit(shd_log[i]), path)
        smd_dual = _logged_path(times, dual_primal[i], dual_log[i], path)
        comparisons.append(HessianComparison(smd, shd, smd_dual))
    return comparisons


def _logged_path(times, primal, dual, path: int) -> Trajectory:
    """Logged path of f(x) = x with the logit score as dual variable."""
    return Trajectory.from_path(
        times, primal, primal, dual=dual[:, None], path_index=path
    )


def _logit(x: np.ndarray) -> np.ndarray:
    return np.log(x) - np.log1p(-x)
