"""Reference minima computed by long deterministic mirror descent runs.

The run is certified by first order optimality conditions: on a simplex all paths
carrying flow must have equal marginal cost and no unused path may be cheaper, on a box
the projected gradient step must not move the point. A result that could not be
certified within the tolerance is still returned, with a warning.
"""

from __future__ import annotations
from dataclasses import dataclass
import logging
from typing import Optional, Union
import warnings

import numpy as np

from mirrorflow.errors import UnsupportedRegionError
from mirrorflow.geometry import Box, FeasibleRegion, Product, Simplex
from mirrorflow.mirror import Regularizer, get_mirror
from mirrorflow.problems import Objective, TrafficObjective
from mirrorflow.traffic import Network, PathSet


DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_STEPS = 1_000_000
CHECK_EVERY = 1000
SUPPORT_THRESHOLD = 1e-8

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ReferenceOptimum:
    point: np.ndarray
    value: float
    certified: bool
    residual: float
    steps: int


def reference_minimum(
    objective: Objective,
    reg: Union[Regularizer, str],
    region: FeasibleRegion,
    eta: float = 1.0,
    dt: Optional[float] = None,
    tol: float = DEFAULT_TOLERANCE,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> ReferenceOptimum:
    """Minimize the objective over a box, a simplex or a product of those.

    Args:
        eta: Constant sensitivity of the mirror descent run.
        dt: Step size; by default chosen from the gradient Lipschitz modulus of the
            objective so that the explicit scheme is stable.
        tol: Certification tolerance, relative to the largest gradient entry.
        max_steps: Largest number of steps before giving up.
    """
    mirror = get_mirror(reg, region)
    if dt is None:
        lipschitz = objective.lipschitz or 1.0
        dt = 0.5 / (eta * max(lipschitz, 1e-12) * max(1.0, 1.0 / mirror.modulus))

    y = np.zeros(region.dim)
    residual = np.inf
    step = 0
    for step in range(1, max_steps + 1):
        x = mirror.mirror_map(eta * y)
        _, gradient = objective.value_and_gradient(x)
        if step % CHECK_EVERY == 0:
            residual = optimality_residual(region, x, gradient)
            if residual <= tol * max(1.0, float(np.max(np.abs(gradient)))):
                break
        y = y - dt * gradient

    x = mirror.mirror_map(eta * y)
    value, gradient = objective.value_and_gradient(x)
    residual = optimality_residual(region, x, gradient)
    certified = residual <= tol * max(1.0, float(np.max(np.abs(gradient))))
    if not certified:
        warnings.warn(
            f"reference minimum not certified after {step} steps "
            f"(optimality residual {residual:.3g})"
        )
    logger.info(
        "Reference minimum %.12g after %d steps (residual %.3g)", value, step, residual
    )
    return ReferenceOptimum(x, float(value), bool(certified), float(residual), step)


def social_optimum(
    network: Network, paths: PathSet, tol: float = DEFAULT_TOLERANCE, **kwargs
) -> ReferenceOptimum:
    """Return the flow minimizing the total network cost over the path set."""
    objective = TrafficObjective(network, paths)
    return reference_minimum(
        objective, Regularizer.ENTROPIC, objective.region, tol=tol, **kwargs
    )


def optimality_residual(
    region: FeasibleRegion, x: np.ndarray, gradient: np.ndarray
) -> float:
    """Return the violation of the first order optimality conditions at x."""
    x = np.asarray(x, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    if isinstance(region, Simplex):
        support = x >= SUPPORT_THRESHOLD * region.mass
        used = gradient[support]
        spread = float(np.max(used) - np.min(used))
        unused = gradient[~support]
        undercut = float(np.min(used) - np.min(unused)) if unused.size else 0.0
        return max(spread, undercut, 0.0)
    if isinstance(region, Box):
        return float(np.max(np.abs(x - region.project(x - gradient))))
    if isinstance(region, Product):
        parts = zip(region.regions, region.split(x), region.split(gradient))
        return max(optimality_residual(block, x_p, g_p) for block, x_p, g_p in parts)
    name = type(region).__name__
    raise UnsupportedRegionError(f"no optimality certificate on {name}")
