"""Ensembles of independent sample paths on a process pool."""

from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
import logging

from mirrorflow.dynamics.integrators import simulate_paths
from mirrorflow.dynamics.schedules import SensitivitySchedule
from mirrorflow.dynamics.trajectory import IntegratorConfig, Trajectory
from mirrorflow.geometry import FeasibleRegion
from mirrorflow.mirror import Regularizer
from mirrorflow.noise import NoiseModel
from mirrorflow.problems import Objective


DEFAULT_BATCH_SIZE = 256

logger = logging.getLogger(__name__)


def path_batches(paths: int, batch_size: int = DEFAULT_BATCH_SIZE) -> list[range]:
    """Split the path indices 0..paths-1 into contiguous batches."""
    if paths < 1:
        raise ValueError(f"an ensemble needs at least one path, not {paths}")
    if batch_size < 1:
        raise ValueError(f"'batch_size' must be positive, not {batch_size}")
    return [
        range(start, min(start + batch_size, paths))
        for start in range(0, paths, batch_size)
    ]


def run_ensemble(
    objective: Objective,
    reg: Regularizer,
    region: FeasibleRegion,
    noise: NoiseModel,
    schedule: SensitivitySchedule,
    cfg: IntegratorConfig,
    paths: int,
    threads: int = 1,
    target=None,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> list[Trajectory]:
    """Simulate `paths` independent sample paths ordered by path index.

    Paths are integrated in fixed contiguous batches of `batch_size`; with more than one
    thread the batches are distributed over a process pool. The batch layout does not
    depend on `threads`, so the result is identical for any number of workers.
    """
    batches = path_batches(paths, batch_size)
    logger.info(
        "Simulating %d path(s) in %d batch(es) on %d worker(s)",
        paths,
        len(batches),
        threads,
    )
    arguments = (objective, reg, region, noise, schedule, cfg)
    if threads <= 1 or len(batches) == 1:
        results = []
        for batch in batches:
            results.append(simulate_paths(*arguments, list(batch), target))
            logger.debug("Finished paths %d to %d", batch.start, batch.stop - 1)
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            futures = [
                executor.submit(simulate_paths, *arguments, list(batch), target)
                for batch in batches
            ]
            results = [future.result() for future in futures]
    return [trajectory for batch in results for trajectory in batch]
