"""Volatility models sigma(x, t) and the counter based Brownian source.

A noise model returns an (n, m) volatility matrix for a state of dimension n driven by
an m-dimensional Wiener process. The implemented models do not depend on the state x.

`BrownianSource` produces reproducible standard normal draws: every (seed, path) pair
owns an independent Philox stream, and the counter selects a block of `BLOCK_STEPS`
steps, so any block of any path can be generated without touching the others.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from mirrorflow.errors import InvalidParameterError


BLOCK_STEPS = 1024
MAX_SEED = 2**64


class DecaySchedule(Enum):
    INV_LOG = "inv_log"
    INV_SQRT_T = "inv_sqrt_t"
    LOG_POWER = "log_power"


class NoiseModel(Protocol):
    time_homogeneous: bool
    lipschitz: float

    @property
    def dim(self) -> int: ...

    @property
    def wiener_dim(self) -> int: ...

    def volatility(self, x, t: float) -> np.ndarray: ...

    def sup_bound(self) -> float: ...


@dataclass(frozen=True, eq=False)
class ConstantNoise:
    """State and time independent volatility matrix."""

    sigma: np.ndarray
    time_homogeneous = True
    lipschitz = 0.0

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        if sigma.ndim != 2:
            raise InvalidParameterError("sigma", "must be an n by m matrix")
        if not np.all(np.isfinite(sigma)):
            raise InvalidParameterError("sigma", "must have finite entries")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def zero(cls, dim: int) -> ConstantNoise:
        return cls(np.zeros((dim, 1)))

    @classmethod
    def isotropic(cls, level: float, dim: int) -> ConstantNoise:
        return cls(level * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    @property
    def wiener_dim(self) -> int:
        return self.sigma.shape[1]

    def volatility(self, x, t: float) -> np.ndarray:
        return self.sigma

    def sup_bound(self) -> float:
        return float(np.sum(self.sigma**2))


@dataclass(frozen=True)
class DecayingNoise:
    """Isotropic volatility base * g(t) * I with g(0) = 1 and g decreasing to zero.

    The decay g(t) is 1 / log(e + t) for INV_LOG, 1 / sqrt(1 + t) for INV_SQRT_T and
    1 / log(e + t)^power for LOG_POWER, where power must exceed 1/2.
    """

    base: float
    dim: int
    schedule: DecaySchedule = DecaySchedule.INV_LOG
    power: float = 1.0
    time_homogeneous = False
    lipschitz = 0.0

    def __post_init__(self):
        object.__setattr__(self, "schedule", DecaySchedule(self.schedule))
        if not np.isfinite(self.base) or self.base < 0:
            raise InvalidParameterError("base", "must be finite and nonnegative")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidParameterError("dim", "must be a positive integer")
        if self.schedule is DecaySchedule.LOG_POWER and not self.power > 0.5:
            raise InvalidParameterError("power", "must exceed 1/2")

    @property
    def wiener_dim(self) -> int:
        return self.dim

    def decay(self, t):
        t = np.asarray(t, dtype=float)
        if self.schedule is DecaySchedule.INV_LOG:
            return 1.0 / np.log(np.e + t)
        if self.schedule is DecaySchedule.INV_SQRT_T:
            return 1.0 / np.sqrt(1.0 + t)
        return np.log(np.e + t) ** -self.power

    def volatility(self, x, t: float) -> np.ndarray:
        return float(self.base * self.decay(t)) * np.eye(self.dim)

    def sup_bound(self) -> float:
        return float(self.base**2 * self.dim)


@dataclass(frozen=True, eq=False)
class PathCorrelatedNoise:
    """Edge noise in path space: entry (p, e) is sigma_e if edge e lies on path p."""

    incidence: np.ndarray
    edge_sigma: np.ndarray
    time_homogeneous = True
    lipschitz = 0.0

    def __post_init__(self):
        incidence = np.asarray(self.incidence, dtype=bool)
        edge_sigma = np.asarray(self.edge_sigma, dtype=float)
        if incidence.ndim != 2 or edge_sigma.shape != (incidence.shape[1],):
            raise InvalidParameterError("edge_sigma", "needs one entry per edge")
        if np.any(edge_sigma < 0) or not np.all(np.isfinite(edge_sigma)):
            raise InvalidParameterError("edge_sigma", "must be finite and nonnegative")
        sigma = incidence * edge_sigma
        sigma.setflags(write=False)
        object.__setattr__(self, "incidence", incidence)
        object.__setattr__(self, "edge_sigma", edge_sigma)
        object.__setattr__(self, "_sigma", sigma)

    @classmethod
    def from_network(cls, network, paths, edge_sigma=None) -> PathCorrelatedNoise:
        """Build the model from a `traffic.Network` and its `traffic.PathSet`."""
        if edge_sigma is None:
            edge_sigma = network.sigmas
        edge_sigma = np.asarray(edge_sigma, dtype=float)
        edge_sigma = np.broadcast_to(edge_sigma, (network.edge_count,))
        return cls(paths.incidence, edge_sigma)

    @property
    def dim(self) -> int:
        return self.incidence.shape[0]

    @property
    def wiener_dim(self) -> int:
        return self.incidence.shape[1]

    def volatility(self, x, t: float) -> np.ndarray:
        return self._sigma

    def sup_bound(self) -> float:
        return float(np.sum(self._sigma**2))


class BrownianSource:
    """Counter based standard normal draws keyed by (seed, path, step block).

    Args:
        seed: Unsigned 64 bit seed shared by all paths of an ensemble.
        wiener_dim: Dimension m of the driving Wiener process.
        block_steps: Number of steps per counter block.
    """

    def __init__(self, seed: int, wiener_dim: int, block_steps: int = BLOCK_STEPS):
        if not 0 <= seed < MAX_SEED:
            raise InvalidParameterError("seed", "must be an unsigned 64 bit integer")
        self.seed = int(seed)
        self.wiener_dim = int(wiener_dim)
        self.block_steps = int(block_steps)

    def block(self, path: int, index: int) -> np.ndarray:
        """Return the normals of one path for steps [index * B, (index + 1) * B)."""
        bit_generator = np.random.Philox(
            key=self.seed + (int(path) << 64), counter=[0, 0, int(index), 0]
        )
        generator = np.random.Generator(bit_generator)
        return generator.standard_normal((self.block_steps, self.wiener_dim))

    def blocks(self, paths: Sequence[int], index: int) -> np.ndarray:
        """Return the block `index` of several paths, shape (paths, B, m)."""
        return np.stack([self.block(path, index) for path in paths])

    def normals(self, path: int, n_steps: int) -> np.ndarray:
        """Return the first n_steps normals of a path, shape (n_steps, m)."""
        n_blocks = -(-n_steps // self.block_steps)
        if n_blocks == 0:
            return np.empty((0, self.wiener_dim))
        draws = np.concatenate([self.block(path, i) for i in range(n_blocks)])
        return draws[:n_steps]

    def increments(self, path: int, n_steps: int, dt: float) -> np.ndarray:
        """Return Wiener increments with variance dt, shape (n_steps, m)."""
        return np.sqrt(dt) * self.normals(path, n_steps)


# MAIN API FUNCTIONS
def volatility(model: NoiseModel, x, t: float) -> np.ndarray:
    """Return the (n, m) volatility matrix sigma(x, t)."""
    _check_time(t)
    return np.array(model.volatility(x, t))


def covariance(model: NoiseModel, x, t: float) -> np.ndarray:
    """Return the infinitesimal covariance sigma sigma' of the noise."""
    sigma = volatility(model, x, t)
    return sigma @ sigma.T


def sup_bound(model: NoiseModel) -> float:
    """Return the supremum over (x, t) of the squared Frobenius norm of sigma."""
    return model.sup_bound()


def _check_time(t: float) -> None:
    if t < 0:
        raise ValueError(f"time must be nonnegative, not {t}")
