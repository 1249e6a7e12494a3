"""Convex objectives with gradients and structural metadata.

Every objective exposes `value_and_gradient(x)`, an unchecked evaluation on a single
point or a stack of points used by the integrators, and `evaluate(x)`, which first
checks that x is feasible. The metadata `alpha` (strong convexity modulus), `gamma`
(sharpness), `lipschitz` (Lipschitz modulus of the gradient, informational only) and
`known_min` feed the bound checks of `mirrorflow.diagnostics`.
"""

from __future__ import annotations
from dataclasses import dataclass
import itertools
from typing import Optional, Protocol

import numpy as np

from mirrorflow.errors import (
    DimensionMismatchError,
    InfeasiblePointError,
    NotAVertexError,
    UnsupportedRegionError,
)
from mirrorflow.geometry import (
    Box,
    FeasibleRegion,
    Product,
    Simplex,
    Spectrahedron,
    pack_symmetric,
)
from mirrorflow.traffic import Network, PathSet, network_costs


FEASIBILITY_TOLERANCE = 1e-9
STRONG_CONVEXITY_PROBE_DISTANCE = 1e-3
_SYMMETRY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class Minimum:
    point: np.ndarray
    value: float


class Objective(Protocol):
    region: Optional[FeasibleRegion]
    alpha: float
    gamma: float
    lipschitz: Optional[float]
    known_min: Optional[Minimum]

    @property
    def dim(self) -> int: ...

    def value_and_gradient(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]: ...


class _CheckedEvaluation:
    region: Optional[FeasibleRegion] = None

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def value_and_gradient(self, x):
        raise NotImplementedError

    def evaluate(self, x) -> tuple[float, np.ndarray]:
        """Return f(x) and the gradient at a single feasible point.

        Raises:
            DimensionMismatchError: If x does not have the objective dimension.
            InfeasiblePointError: If x lies outside of the objective region.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"expected a point of dimension {self.dim}")
        region = self.region
        if region is not None and not region.contains(x, FEASIBILITY_TOLERANCE):
            raise InfeasiblePointError(
                f"{x.tolist()} lies outside of the feasible region"
            )
        value, gradient = self.value_and_gradient(x)
        return float(value), gradient


class QuadraticObjective(_CheckedEvaluation):
    """f(x) = offset + (x - center)' A (x - center) / 2 with A symmetric and PSD.

    Args:
        center: The unconstrained minimizer.
        curvature: The matrix A, a vector holding its diagonal, or a scalar multiple of
            the identity. Defaults to the identity.
        offset: Constant added to the objective.
        region: Optional feasible region, used by `evaluate` and to detect a known
            minimum when the center is feasible.
    """

    def __init__(
        self,
        center,
        curvature=1.0,
        offset: float = 0.0,
        region: Optional[FeasibleRegion] = None,
        known_min: Optional[Minimum] = None,
    ):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1:
            raise ValueError("'center' must be a vector")
        curvature = _as_matrix(curvature, center.size)
        if not np.allclose(curvature, curvature.T, rtol=0.0, atol=_SYMMETRY_TOLERANCE):
            raise ValueError("'curvature' must be symmetric")
        spectrum = np.linalg.eigvalsh(curvature)
        if spectrum[0] < -_SYMMETRY_TOLERANCE:
            raise ValueError("'curvature' must be positive semidefinite")
        if region is not None and region.dim != center.size:
            raise DimensionMismatchError("'center' and 'region' dimensions differ")

        self.center = center
        self.curvature = curvature
        self.offset = float(offset)
        self.region = region
        self.alpha = max(float(spectrum[0]), 0.0)
        self.gamma = 0.0
        self.lipschitz = float(spectrum[-1])
        if known_min is None and region is not None:
            if region.contains(center, FEASIBILITY_TOLERANCE):
                known_min = Minimum(center.copy(), self.offset)
        self.known_min = known_min

    @property
    def dim(self) -> int:
        return self.center.size

    def value_and_gradient(self, x):
        displacement = x - self.center
        gradient = displacement @ self.curvature
        value = self.offset + 0.5 * np.sum(displacement * gradient, axis=-1)
        return value, gradient


class LinearObjective(_CheckedEvaluation):
    """f(x) = offset + sum(weights * cost * x).

    The weights default to one. On the spectrahedron pass `region.weights`, so that f is
    the trace inner product tr(C X) with the packed cost matrix C; the gradient is then
    the packed cost itself.

    When the region is a box, a simplex, a spectrahedron or a product of those, the
    minimizer is computed in closed form. If it is a polytope vertex, `gamma` holds its
    sharpness estimate from `check_sharpness`.
    """

    def __init__(
        self,
        cost,
        offset: float = 0.0,
        region: Optional[FeasibleRegion] = None,
        weights=None,
        known_min: Optional[Minimum] = None,
    ):
        cost = np.asarray(cost, dtype=float)
        if cost.ndim != 1:
            raise ValueError("'cost' must be a vector")
        if region is not None and region.dim != cost.size:
            raise DimensionMismatchError("'cost' and 'region' dimensions differ")
        weights = np.ones(cost.size) if weights is None else np.asarray(weights, float)
        if weights.shape != cost.shape:
            raise DimensionMismatchError("'weights' and 'cost' dimensions differ")

        self.cost = cost
        self.offset = float(offset)
        self.weights = weights
        self.region = region
        self.alpha = 0.0
        self.lipschitz = 0.0
        self._weighted_cost = weights * cost

        if known_min is None and region is not None:
            point = _minimize_linear(region, cost)
            known_min = Minimum(point, float(self.value_and_gradient(point)[0]))
        self.known_min = known_min

        self.gamma = 0.0
        if known_min is not None and isinstance(region, (Box, Simplex, Product)):
            try:
                self.gamma = max(check_sharpness(self, region, known_min.point), 0.0)
            except (NotAVertexError, UnsupportedRegionError):
                pass

    @property
    def dim(self) -> int:
        return self.cost.size

    def value_and_gradient(self, x):
        value = self.offset + np.sum(self._weighted_cost * x, axis=-1)
        gradient = np.broadcast_to(self.cost, np.shape(x)).copy()
        return value, gradient


class ScalarObjective(LinearObjective):
    """f(x) = offset + slope * x_1, a linear objective acting on the first coordinate.

    With the default arguments on the interval [0, 1] this is f(x) = x; slope -1 and
    offset 1 give f(x) = 1 - x.
    """

    def __init__(
        self,
        slope: float = 1.0,
        offset: float = 0.0,
        region: Optional[FeasibleRegion] = None,
        dim: int = 1,
    ):
        if region is not None:
            dim = region.dim
        cost = np.zeros(dim)
        cost[0] = slope
        super().__init__(cost, offset=offset, region=region)
        self.slope = float(slope)


class TrafficObjective(_CheckedEvaluation):
    """Total network cost C(x) as a function of the routing flow over a path set.

    `alpha` is zero: the Hessian 2 M diag(a) M' in path space is only semidefinite.
    """

    def __init__(
        self,
        network: Network,
        paths: PathSet,
        known_min: Optional[Minimum] = None,
    ):
        if len(paths) < 2:
            raise ValueError(
                "the network offers a single path, there is nothing to route"
            )
        self.network = network
        self.paths = paths
        self.region = Simplex(len(paths), network.demand)
        self.alpha = 0.0
        self.gamma = 0.0
        self.known_min = known_min
        self._slopes = network.slopes
        self._intercepts = network.intercepts
        self._incidence = paths.incidence.astype(float)
        hessian = 2.0 * (self._incidence * self._slopes) @ self._incidence.T
        self.lipschitz = float(np.linalg.eigvalsh(hessian)[-1])

    @property
    def dim(self) -> int:
        return len(self.paths)

    def value_and_gradient(self, x):
        _, total, marginal = network_costs(
            self._slopes, self._intercepts, self._incidence, x
        )
        return total, marginal


# MAIN API FUNCTIONS
def evaluate(obj: Objective, x) -> tuple[float, np.ndarray]:
    """Return f(x) and the gradient of f at x, the negative drift of the flow."""
    return obj.evaluate(x)


def check_sharpness(obj: Objective, region: FeasibleRegion, vertex) -> float:
    """Return the smallest slope of f along the tangent cone generators at a vertex.

    The vertex is a sharp minimum if the returned value is positive.

    Raises:
        NotAVertexError: If the point is not a vertex of the region.
    """
    vertex = np.asarray(vertex, dtype=float)
    generators = region.tangent_cone_generators(vertex)
    if not generators:
        return 0.0
    _, gradient = obj.value_and_gradient(vertex)
    slopes = [
        region.inner(gradient, direction) / region.primal_norm(direction)
        for direction in generators
    ]
    return float(min(slopes))


def check_strong_convexity(
    obj: Objective, region: FeasibleRegion, samples: int = 10_000, seed: int = 0
) -> float:
    """Estimate the strong convexity modulus around the known minimum.

    Returns the minimum of 2 (f(x) - f*) / ||x - x*||^2 over uniformly sampled feasible
    points, complemented by feasible probes at distance 1e-3 from x* along coordinate
    directions and coordinate differences.

    Raises:
        ValueError: If the objective has no known minimum.
    """
    if obj.known_min is None:
        raise ValueError("a known minimum is required to estimate strong convexity")
    center = np.asarray(obj.known_min.point, dtype=float)
    rng = np.random.default_rng(seed)
    points = np.concatenate([region.sample(rng, samples), _probes(region, center)])

    distances = np.asarray(region.primal_norm(points - center))
    keep = distances > 0
    values, _ = obj.value_and_gradient(points[keep])
    ratios = 2.0 * (values - obj.known_min.value) / distances[keep] ** 2
    return float(np.min(ratios))


def _probes(region: FeasibleRegion, center: np.ndarray) -> np.ndarray:
    dim = center.size
    identity = np.eye(dim)
    directions = [identity, -identity]
    if dim > 1:
        pairs = np.array(list(itertools.permutations(range(dim), 2)))
        directions.append(identity[pairs[:, 0]] - identity[pairs[:, 1]])
    directions = np.concatenate(directions)
    norms = np.asarray(region.primal_norm(directions))
    probes = center + STRONG_CONVEXITY_PROBE_DISTANCE * directions / norms[:, None]
    feasible = np.asarray(region.contains(probes, 0.0))
    return probes[feasible]


def _as_matrix(curvature, dim: int) -> np.ndarray:
    curvature = np.asarray(curvature, dtype=float)
    if curvature.ndim == 0:
        return float(curvature) * np.eye(dim)
    if curvature.ndim == 1:
        if curvature.size != dim:
            raise DimensionMismatchError(
                "'curvature' diagonal and 'center' differ in size"
            )
        return np.diag(curvature)
    if curvature.shape != (dim, dim):
        raise DimensionMismatchError(f"'curvature' must be a {dim}x{dim} matrix")
    return curvature


def _minimize_linear(region: FeasibleRegion, cost: np.ndarray) -> np.ndarray:
    if isinstance(region, Box):
        return np.where(cost < 0, region.upper, region.lower)
    if isinstance(region, Simplex):
        point = np.zeros(region.dim)
        point[int(np.argmin(cost))] = region.mass
        return point
    if isinstance(region, Spectrahedron):
        spectrum, basis = np.linalg.eigh(region.unpack(cost))
        if spectrum[0] >= 0:
            return np.zeros(region.dim)
        return pack_symmetric(np.outer(basis[:, 0], basis[:, 0]))
    if isinstance(region, Product):
        return np.concatenate(
            [
                _minimize_linear(block, part)
                for block, part in zip(region.regions, region.split(cost))
            ]
        )
    name = type(region).__name__
    raise UnsupportedRegionError(f"no closed form linear minimizer on {name}")
