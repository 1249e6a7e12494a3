"""Compact convex feasible regions.

Regions are immutable dataclasses. Each one knows its primal norm, its diameter, how to
test membership, how to project onto itself in the Euclidean sense and, for polytopes,
the generators of the tangent cone at a vertex. All methods accept a single point of
shape (dim,) or a stack of points of shape (..., dim).

Points of the spectrahedron {X symmetric, X >= 0, tr X <= 1} are stored as the flattened
upper triangle of the matrix (row major), see `pack_symmetric` and `unpack_symmetric`.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
import itertools
from typing import Protocol, Union

import numpy as np

from mirrorflow.errors import (
    DimensionMismatchError,
    NotAVertexError,
    UnsupportedRegionError,
)


VERTEX_TOLERANCE = 1e-9
MAX_ENUMERATED_VERTICES = 2**16
_SUM_ROUNDING = 8 * np.finfo(float).eps


class Norm(Enum):
    L1 = "l1"
    L2 = "l2"
    NUCLEAR = "nuclear"
    PRODUCT = "product"


class FeasibleRegion(Protocol):
    """Interface shared by all feasible regions."""

    norm: Norm

    @property
    def dim(self) -> int: ...

    def contains(self, x: np.ndarray, tol: float = 0.0) -> Union[bool, np.ndarray]: ...

    def diameter(self) -> float: ...

    def project(self, y: np.ndarray) -> np.ndarray: ...

    def vertices(self) -> np.ndarray: ...

    def tangent_cone_generators(self, vertex: np.ndarray) -> list[np.ndarray]: ...

    def primal_norm(self, z: np.ndarray) -> Union[float, np.ndarray]: ...

    def dual_norm(self, y: np.ndarray) -> Union[float, np.ndarray]: ...

    def inner(self, y: np.ndarray, x: np.ndarray) -> Union[float, np.ndarray]: ...

    def center(self) -> np.ndarray: ...

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class Box:
    """Axis aligned box {x : lower <= x <= upper} with the Euclidean norm."""

    lower: np.ndarray
    upper: np.ndarray
    norm: Norm = field(default=Norm.L2, init=False)

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("'lower' and 'upper' must be vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("'lower' must not exceed 'upper' in any coordinate")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> Box:
        """Return the box [low, high]^dim."""
        return cls(np.full(dim, low, dtype=float), np.full(dim, high, dtype=float))

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, tol: float = 0.0):
        x = _coerce_points(x, self.dim)
        distance = np.linalg.norm(x - np.clip(x, self.lower, self.upper), axis=-1)
        return _as_result(distance <= tol)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    def project(self, y) -> np.ndarray:
        y = _coerce_points(y, self.dim)
        return np.clip(y, self.lower, self.upper)

    def vertices(self) -> np.ndarray:
        if 2**self.dim > MAX_ENUMERATED_VERTICES:
            raise ValueError(f"too many vertices to enumerate for dimension {self.dim}")
        corners = itertools.product(*zip(self.lower, self.upper))
        return np.unique(np.array(list(corners), dtype=float), axis=0)

    def tangent_cone_generators(self, vertex) -> list[np.ndarray]:
        vertex = _coerce_single_point(vertex, self.dim)
        at_lower = np.abs(vertex - self.lower) <= VERTEX_TOLERANCE
        at_upper = np.abs(vertex - self.upper) <= VERTEX_TOLERANCE
        if not np.all(at_lower | at_upper):
            raise NotAVertexError(f"{vertex.tolist()} is not a vertex of {self!r}")

        generators = []
        for i in range(self.dim):
            if at_lower[i] and at_upper[i]:
                continue
            direction = np.zeros(self.dim)
            direction[i] = 1.0 if at_lower[i] else -1.0
            generators.append(direction)
        return generators

    def primal_norm(self, z):
        return _as_result(np.linalg.norm(np.asarray(z, dtype=float), axis=-1))

    def dual_norm(self, y):
        return self.primal_norm(y)

    def inner(self, y, x):
        return _as_result(np.sum(np.asarray(y) * np.asarray(x), axis=-1))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))


@dataclass(frozen=True, eq=False)
class Simplex:
    """Scaled simplex {x >= 0 : sum(x) = mass} with the L1 norm."""

    dim: int
    mass: float = 1.0
    norm: Norm = field(default=Norm.L1, init=False)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"'dim' must be an integer >= 2, not {self.dim}")
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise ValueError(f"'mass' must be positive and finite, not {self.mass}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "mass", float(self.mass))

    def contains(self, x, tol: float = 0.0):
        x = _coerce_points(x, self.dim)
        nonnegative = np.all(x >= -tol, axis=-1)
        sum_error = np.abs(np.sum(x, axis=-1) - self.mass)
        return _as_result(nonnegative & (sum_error <= tol + _SUM_ROUNDING * self.mass))

    def diameter(self) -> float:
        return 2.0 * self.mass

    def project(self, y) -> np.ndarray:
        """Sort-and-threshold projection onto the scaled simplex."""
        y = _coerce_points(y, self.dim)
        descending = -np.sort(-y, axis=-1)
        cumulative = np.cumsum(descending, axis=-1) - self.mass
        ranks = np.arange(1, self.dim + 1)
        positive = descending - cumulative / ranks > 0
        # index of the last positive entry; the first entry is always positive
        rho = self.dim - 1 - np.argmax(positive[..., ::-1], axis=-1)
        threshold = np.take_along_axis(cumulative, rho[..., None], axis=-1) / (
            rho[..., None] + 1
        )
        return np.maximum(y - threshold, 0.0)

    def vertices(self) -> np.ndarray:
        return self.mass * np.eye(self.dim)

    def tangent_cone_generators(self, vertex) -> list[np.ndarray]:
        vertex = _coerce_single_point(vertex, self.dim)
        j = int(np.argmax(vertex))
        corner = np.zeros(self.dim)
        corner[j] = self.mass
        if not np.all(np.abs(vertex - corner) <= VERTEX_TOLERANCE):
            raise NotAVertexError(f"{vertex.tolist()} is not a vertex of {self!r}")

        generators = []
        for k in range(self.dim):
            if k == j:
                continue
            direction = np.zeros(self.dim)
            direction[k] = 0.5
            direction[j] = -0.5
            generators.append(direction)
        return generators

    def primal_norm(self, z):
        return _as_result(np.sum(np.abs(np.asarray(z, dtype=float)), axis=-1))

    def dual_norm(self, y):
        return _as_result(np.max(np.abs(np.asarray(y, dtype=float)), axis=-1))

    def inner(self, y, x):
        return _as_result(np.sum(np.asarray(y) * np.asarray(x), axis=-1))

    def center(self) -> np.ndarray:
        return np.full(self.dim, self.mass / self.dim)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.mass * rng.dirichlet(np.ones(self.dim), size=size)


@dataclass(frozen=True, eq=False)
class Spectrahedron:
    """Symmetric matrices X >= 0 with tr X <= 1, nuclear norm.

    Points are packed upper triangles, so `dim` is order * (order + 1) / 2.
    """

    order: int
    norm: Norm = field(default=Norm.NUCLEAR, init=False)

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"'order' must be a positive integer, not {self.order}")
        object.__setattr__(self, "order", int(self.order))

    @property
    def dim(self) -> int:
        return self.order * (self.order + 1) // 2

    @property
    def weights(self) -> np.ndarray:
        """Weights turning the packed coordinate sum into the trace inner product."""
        rows, cols = np.triu_indices(self.order)
        return np.where(rows == cols, 1.0, 2.0)

    def unpack(self, x) -> np.ndarray:
        return unpack_symmetric(_coerce_points(x, self.dim), self.order)

    def eigenvalues(self, x) -> np.ndarray:
        return np.linalg.eigvalsh(self.unpack(x))

    def contains(self, x, tol: float = 0.0):
        spectrum = self.eigenvalues(x)
        positive = np.all(spectrum >= -tol, axis=-1)
        return _as_result(positive & (np.sum(spectrum, axis=-1) <= 1.0 + tol))

    def diameter(self) -> float:
        return 2.0 if self.order > 1 else 1.0

    def project(self, y) -> np.ndarray:
        raise UnsupportedRegionError("Euclidean projection onto the spectrahedron")

    def vertices(self) -> np.ndarray:
        raise UnsupportedRegionError("the spectrahedron is not a polytope")

    def tangent_cone_generators(self, vertex) -> list[np.ndarray]:
        raise UnsupportedRegionError("the spectrahedron is not a polytope")

    def primal_norm(self, z):
        return _as_result(np.sum(np.abs(self.eigenvalues(z)), axis=-1))

    def dual_norm(self, y):
        return _as_result(np.max(np.abs(self.eigenvalues(y)), axis=-1))

    def inner(self, y, x):
        return _as_result(np.sum(self.weights * np.asarray(y) * np.asarray(x), axis=-1))

    def center(self) -> np.ndarray:
        return pack_symmetric(np.eye(self.order) / (self.order + 1))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        points = np.empty((size, self.dim))
        for i in range(size):
            basis, _ = np.linalg.qr(rng.standard_normal((self.order, self.order)))
            spectrum = rng.dirichlet(np.ones(self.order + 1))[: self.order]
            points[i] = pack_symmetric((basis * spectrum) @ basis.T)
        return points


@dataclass(frozen=True, eq=False)
class Product:
    """Cartesian product of regions.

    The product norm is the Euclidean combination of the block norms.
    """

    regions: tuple
    norm: Norm = field(default=Norm.PRODUCT, init=False)

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise ValueError("a product region needs at least one block")
        object.__setattr__(self, "regions", regions)

    @property
    def dim(self) -> int:
        return sum(region.dim for region in self.regions)

    @property
    def slices(self) -> list[slice]:
        bounds = np.cumsum([0] + [region.dim for region in self.regions])
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def split(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [x[..., block] for block in self.slices]

    def contains(self, x, tol: float = 0.0):
        x = _coerce_points(x, self.dim)
        inside = [
            np.asarray(region.contains(part, tol))
            for region, part in zip(self.regions, self.split(x))
        ]
        return _as_result(np.logical_and.reduce(inside))

    def diameter(self) -> float:
        return float(np.sqrt(sum(region.diameter() ** 2 for region in self.regions)))

    def project(self, y) -> np.ndarray:
        y = _coerce_points(y, self.dim)
        parts = [
            region.project(part) for region, part in zip(self.regions, self.split(y))
        ]
        return np.concatenate(parts, axis=-1)

    def vertices(self) -> np.ndarray:
        block_vertices = [region.vertices() for region in self.regions]
        if np.prod([len(v) for v in block_vertices]) > MAX_ENUMERATED_VERTICES:
            raise ValueError("too many vertices to enumerate")
        return np.array(
            [np.concatenate(combo) for combo in itertools.product(*block_vertices)]
        )

    def tangent_cone_generators(self, vertex) -> list[np.ndarray]:
        vertex = _coerce_single_point(vertex, self.dim)
        generators = []
        for region, block, part in zip(self.regions, self.slices, self.split(vertex)):
            for direction in region.tangent_cone_generators(part):
                embedded = np.zeros(self.dim)
                embedded[block] = direction
                generators.append(embedded)
        return generators

    def primal_norm(self, z):
        squares = [
            np.asarray(region.primal_norm(part)) ** 2
            for region, part in zip(self.regions, self.split(z))
        ]
        return _as_result(np.sqrt(np.sum(squares, axis=0)))

    def dual_norm(self, y):
        squares = [
            np.asarray(region.dual_norm(part)) ** 2
            for region, part in zip(self.regions, self.split(y))
        ]
        return _as_result(np.sqrt(np.sum(squares, axis=0)))

    def inner(self, y, x):
        blocks = zip(self.regions, self.split(y), self.split(x))
        terms = [np.asarray(region.inner(y_p, x_p)) for region, y_p, x_p in blocks]
        return _as_result(np.sum(terms, axis=0))

    def center(self) -> np.ndarray:
        return np.concatenate([region.center() for region in self.regions])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.concatenate([region.sample(rng, size) for region in self.regions], -1)


# MODULE LEVEL API
def contains(region: FeasibleRegion, x, tol: float = 0.0):
    """Return True if x lies in the region, with every constraint relaxed by tol."""
    return region.contains(x, tol)


def diameter(region: FeasibleRegion) -> float:
    """Return the largest distance between two points of the region in its norm."""
    return region.diameter()


def euclidean_project(region: FeasibleRegion, y) -> np.ndarray:
    """Return the closest point of the region to y in the Euclidean norm."""
    return region.project(y)


def tangent_cone_generators(region: FeasibleRegion, vertex) -> list[np.ndarray]:
    """Return unit norm directions generating the tangent cone at a polytope vertex."""
    return region.tangent_cone_generators(vertex)


def pack_symmetric(matrix) -> np.ndarray:
    """Flatten the upper triangle (row major) of one or more symmetric matrices."""
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = np.triu_indices(matrix.shape[-1])
    return matrix[..., rows, cols]


def unpack_symmetric(packed, order: int) -> np.ndarray:
    """Rebuild symmetric matrices from packed upper triangles."""
    packed = np.asarray(packed, dtype=float)
    rows, cols = np.triu_indices(order)
    matrix = np.zeros(packed.shape[:-1] + (order, order))
    matrix[..., rows, cols] = packed
    matrix[..., cols, rows] = packed
    return matrix


def _coerce_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != dim:
        raise DimensionMismatchError(
            f"expected points of dimension {dim}, got an array of shape {x.shape}"
        )
    return x


def _coerce_single_point(x, dim: int) -> np.ndarray:
    x = _coerce_points(x, dim)
    if x.ndim != 1:
        raise DimensionMismatchError(f"expected a single point, got shape {x.shape}")
    return x


def _as_result(value: np.ndarray):
    """Return numpy scalars as Python scalars and leave stacked results untouched."""
    if np.ndim(value) == 0:
        return np.asarray(value).item()
    return value
